#include "deskdta/config.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "deskdta/common.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dta;

TEST_CASE("empty config text yields the documented defaults") {
  ParsedConfig pc = parse_config_text("");
  const TrainConfig& c = pc.train;
  CHECK(c.lr == 5e-4);
  CHECK(c.batch_size == 512);
  CHECK(c.epochs == 2000);
  CHECK(c.embed_dim == 128);
  CHECK(c.alpha == 0.2);
  CHECK(c.threshold_p == 6.0);
  CHECK(c.seed == 42);
  CHECK(c.dp);
  CHECK(c.gcn);
  CHECK(c.trans);
  CHECK(c.max_seq_len == 1000);
  CHECK(c.dropout == 0.1);
  CHECK(c.grad_clip == 5.0);
  CHECK(c.window == 2);
  CHECK(c.contact_threshold == 0.5);
  CHECK(c.contact_at_least);
  CHECK(c.subsample == 1.0);
  CHECK(pc.notices.empty());
}

TEST_CASE("full config parse with comments and whitespace") {
  ParsedConfig pc = parse_config_text(
      "# run settings\n"
      "lr = 0.005\n"
      "batch_size=64\n"
      "epochs = 200   # desk profile\n"
      "embed_dim = 64\n"
      "alpha=0.3\n"
      "threshold_p = 11\n"
      "seed = 7\n"
      "dp = false\n"
      "trans = false\n"
      "eval_every = 10\n"
      "max_seq_len = 500\n"
      "dropout = 0.0\n"
      "grad_clip = 2.5\n"
      "window = 3\n"
      "contact_threshold = 8.0\n"
      "contact_at_least = false\n"
      "subsample = 0.05\n");
  const TrainConfig& c = pc.train;
  CHECK(c.lr == 0.005);
  CHECK(c.batch_size == 64);
  CHECK(c.epochs == 200);
  CHECK(c.embed_dim == 64);
  CHECK(c.alpha == 0.3);
  CHECK(c.threshold_p == 11.0);
  CHECK(c.seed == 7);
  CHECK_FALSE(c.dp);
  CHECK(c.gcn);
  CHECK_FALSE(c.trans);
  CHECK(c.eval_every == 10);
  CHECK(c.max_seq_len == 500);
  CHECK(c.dropout == 0.0);
  CHECK(c.grad_clip == 2.5);
  CHECK(c.window == 3);
  CHECK(c.contact_threshold == 8.0);
  CHECK_FALSE(c.contact_at_least);
  CHECK(c.subsample == 0.05);
}

TEST_CASE("unknown keys are rejected with their line number") {
  Error e = dtest::capture_error([&] { parse_config_text("lr = 0.001\nlearning_rate = 2\n"); });
  CHECK(e.kind() == ErrorKind::Config);
  CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
}

TEST_CASE("type errors name the key and expected type") {
  Error e = dtest::capture_error([&] { parse_config_text("lr = fast\n"); });
  CHECK(e.kind() == ErrorKind::Config);
  CHECK(std::string(e.what()).find("'lr'") != std::string::npos);
  CHECK(std::string(e.what()).find("number") != std::string::npos);

  Error e2 = dtest::capture_error([&] { parse_config_text("dp = yes\n"); });
  CHECK(std::string(e2.what()).find("true or false") != std::string::npos);

  Error e3 = dtest::capture_error([&] { parse_config_text("batch_size = 1.5\n"); });
  CHECK(std::string(e3.what()).find("integer") != std::string::npos);
}

TEST_CASE("the molecular encoder cannot be switched off") {
  Error e = dtest::capture_error([&] { parse_config_text("gcn = false\n"); });
  CHECK(e.kind() == ErrorKind::Config);
  CHECK(std::string(e.what()).find("gcn") != std::string::npos);
  // explicitly keeping it on is fine
  CHECK(parse_config_text("gcn = true\n").train.gcn);
}

TEST_CASE("legacy keys parse but emit a notice") {
  ParsedConfig pc = parse_config_text("beta = 0.4\ntau = 0.9\n");
  CHECK(pc.train.beta == 0.4);
  CHECK(pc.train.tau == 0.9);
  REQUIRE(pc.notices.size() == 2);
  CHECK(pc.notices[0].find("beta") != std::string::npos);
  CHECK(pc.notices[0].find("unused") != std::string::npos);
  CHECK(pc.notices[1].find("tau") != std::string::npos);
}

TEST_CASE("value range validation") {
  CHECK(dtest::capture_error([&] { parse_config_text("lr = 0\n"); }).kind() ==
        ErrorKind::Config);
  CHECK(dtest::capture_error([&] { parse_config_text("lr = -1\n"); }).kind() ==
        ErrorKind::Config);
  CHECK(dtest::capture_error([&] { parse_config_text("dropout = 1.0\n"); }).kind() ==
        ErrorKind::Config);
  CHECK(dtest::capture_error([&] { parse_config_text("subsample = 0\n"); }).kind() ==
        ErrorKind::Config);
  CHECK(dtest::capture_error([&] { parse_config_text("subsample = 1.5\n"); }).kind() ==
        ErrorKind::Config);
  CHECK(dtest::capture_error([&] { parse_config_text("embed_dim = 10\n"); }).kind() ==
        ErrorKind::Config);
  CHECK(dtest::capture_error([&] { parse_config_text("epochs = 0\n"); }).kind() ==
        ErrorKind::Config);
  CHECK(dtest::capture_error([&] { parse_config_text("batch_size = -4\n"); }).kind() ==
        ErrorKind::Config);
}

TEST_CASE("malformed lines") {
  CHECK(dtest::capture_error([&] { parse_config_text("just words\n"); }).kind() ==
        ErrorKind::Config);
  CHECK(dtest::capture_error([&] { parse_config_text("= 5\n"); }).kind() ==
        ErrorKind::Config);
  CHECK(dtest::capture_error([&] { parse_config_text("lr =\n"); }).kind() ==
        ErrorKind::Config);
  // comment-only and blank lines are fine
  CHECK(parse_config_text("\n# note\n   \n").notices.empty());
}

TEST_CASE("config fingerprint tracks semantic fields only") {
  TrainConfig a;
  TrainConfig b;
  CHECK(config_fingerprint(a) == config_fingerprint(b));
  b.lr = 1e-3;
  CHECK(config_fingerprint(a) != config_fingerprint(b));
  TrainConfig c;
  c.seed = 43;
  CHECK(config_fingerprint(a) != config_fingerprint(c));
  // the legacy knobs and evaluation cadence do not alter the model state
  TrainConfig d;
  d.beta = 0.9;
  d.tau = 0.1;
  d.eval_every = 5;
  CHECK(config_fingerprint(a) == config_fingerprint(d));
}

TEST_CASE("config file loading") {
  const std::string path = "/tmp/deskdta_test_config.cfg";
  {
    std::ofstream out(path, std::ios::trunc);
    out << "lr = 0.002\nthreshold_p = 11\n";
  }
  ParsedConfig pc = load_config(path);
  std::remove(path.c_str());
  CHECK(pc.train.lr == 0.002);
  CHECK(pc.train.threshold_p == 11.0);

  CHECK(dtest::capture_error([&] { load_config("/tmp/deskdta_no_such.cfg"); }).kind() ==
        ErrorKind::Io);

  {
    std::ofstream out(path, std::ios::trunc);
    out << "mystery = 1\n";
  }
  Error e = dtest::capture_error([&] { load_config(path); });
  std::remove(path.c_str());
  CHECK(e.kind() == ErrorKind::Config);
  // the file path is prefixed onto the parse error
  CHECK(std::string(e.what()).find("deskdta_test_config.cfg") != std::string::npos);
}
