#include "deskdta/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "deskdta/common.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dta;

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint ck;
  ck.config_fp = 0xdeadbeefcafef00dULL;
  ck.dataset_fp = 0x0123456789abcdefULL;
  ck.epoch = 17;
  ck.adam_t = 340;
  ck.entries.push_back({"layer.w", {1.0, -2.5, 3.25}, {0.1, 0.2, 0.3}, {0.01, 0.02, 0.03}});
  ck.entries.push_back({"layer.b", {0.5}, {0.0}, {0.0}});
  return ck;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("checkpoint round trip restores every field") {
  const std::string path = "/tmp/deskdta_test_ck.bin";
  Checkpoint ck = sample_checkpoint();
  save_checkpoint(path, ck);
  Checkpoint back = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(back.config_fp == ck.config_fp);
  CHECK(back.dataset_fp == ck.dataset_fp);
  CHECK(back.epoch == 17);
  CHECK(back.adam_t == 340);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[0].name == "layer.w");
  CHECK(back.entries[0].values == ck.entries[0].values);
  CHECK(back.entries[0].adam_m == ck.entries[0].adam_m);
  CHECK(back.entries[0].adam_v == ck.entries[0].adam_v);
  CHECK(back.entries[1].name == "layer.b");
  CHECK(back.entries[1].values == ck.entries[1].values);
}

TEST_CASE("identical state serialises to identical bytes") {
  const std::string p1 = "/tmp/deskdta_test_ck1.bin";
  const std::string p2 = "/tmp/deskdta_test_ck2.bin";
  Checkpoint ck = sample_checkpoint();
  save_checkpoint(p1, ck);
  save_checkpoint(p2, ck);
  std::string b1 = read_bytes(p1);
  std::string b2 = read_bytes(p2);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
  REQUIRE(!b1.empty());
  CHECK(b1 == b2);
  // file leads with the format magic
  CHECK(b1.substr(0, 4) == "DSKD");
}

TEST_CASE("malformed checkpoint files are diagnosed") {
  const std::string path = "/tmp/deskdta_test_ck_bad.bin";

  SUBCASE("missing file") {
    CHECK(dtest::capture_error([&] { load_checkpoint("/tmp/deskdta_no_such.bin"); }).kind() ==
          ErrorKind::Io);
  }
  SUBCASE("bad magic") {
    std::ofstream(path, std::ios::binary) << "NOPE12345678";
    Error e = dtest::capture_error([&] { load_checkpoint(path); });
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
  SUBCASE("truncated") {
    save_checkpoint(path, sample_checkpoint());
    std::string bytes = read_bytes(path);
    std::ofstream(path, std::ios::binary | std::ios::trunc)
        << bytes.substr(0, bytes.size() - 9);
    Error e = dtest::capture_error([&] { load_checkpoint(path); });
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
  SUBCASE("trailing bytes") {
    save_checkpoint(path, sample_checkpoint());
    std::ofstream(path, std::ios::binary | std::ios::app) << "junk";
    Error e = dtest::capture_error([&] { load_checkpoint(path); });
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("trailing") != std::string::npos);
  }
  SUBCASE("unsupported version") {
    save_checkpoint(path, sample_checkpoint());
    std::string bytes = read_bytes(path);
    bytes[4] = 9;  // bump the version field
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
    Error e = dtest::capture_error([&] { load_checkpoint(path); });
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("entries with inconsistent moment sizes cannot be written") {
  Checkpoint ck = sample_checkpoint();
  ck.entries[0].adam_m.pop_back();
  CHECK(dtest::capture_error([&] {
          save_checkpoint("/tmp/deskdta_test_ck_bad2.bin", ck);
        }).kind() == ErrorKind::Contract);
  std::remove("/tmp/deskdta_test_ck_bad2.bin");
}
