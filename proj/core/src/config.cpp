#include "deskdta/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "deskdta/common.hpp"

namespace dta {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] void key_fail(int64_t line_no, const std::string& msg) {
  fail(ErrorKind::Config, "line " + std::to_string(line_no) + ": " + msg);
}

double parse_double(int64_t line_no, std::string_view key, std::string_view value) {
  try {
    size_t used = 0;
    double v = std::stod(std::string(value), &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    key_fail(line_no, "key '" + std::string(key) + "' expects a number, got '" +
                          std::string(value) + "'");
  }
}

int64_t parse_int(int64_t line_no, std::string_view key, std::string_view value) {
  try {
    size_t used = 0;
    int64_t v = std::stoll(std::string(value), &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    key_fail(line_no, "key '" + std::string(key) + "' expects an integer, got '" +
                          std::string(value) + "'");
  }
}

uint64_t parse_uint(int64_t line_no, std::string_view key, std::string_view value) {
  try {
    size_t used = 0;
    uint64_t v = std::stoull(std::string(value), &used);
    if (used != value.size() || value.front() == '-') throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    key_fail(line_no, "key '" + std::string(key) +
                          "' expects a non-negative integer, got '" + std::string(value) + "'");
  }
}

bool parse_bool(int64_t line_no, std::string_view key, std::string_view value) {
  if (value == "true") return true;
  if (value == "false") return false;
  key_fail(line_no, "key '" + std::string(key) + "' expects true or false, got '" +
                        std::string(value) + "'");
}

}  // namespace

ParsedConfig parse_config_text(std::string_view text) {
  ParsedConfig out;
  TrainConfig& c = out.train;
  std::istringstream in{std::string(text)};
  std::string raw;
  int64_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      key_fail(line_no, "expected key=value, got '" + std::string(line) + "'");
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) key_fail(line_no, "empty key");
    if (value.empty()) key_fail(line_no, "key '" + std::string(key) + "' has no value");

    if (key == "lr") {
      c.lr = parse_double(line_no, key, value);
      if (!(c.lr > 0.0)) key_fail(line_no, "lr must be positive");
    } else if (key == "batch_size") {
      c.batch_size = parse_int(line_no, key, value);
      if (c.batch_size < 1) key_fail(line_no, "batch_size must be at least 1");
    } else if (key == "epochs") {
      c.epochs = parse_int(line_no, key, value);
      if (c.epochs < 1) key_fail(line_no, "epochs must be at least 1");
    } else if (key == "embed_dim") {
      c.embed_dim = parse_int(line_no, key, value);
      if (c.embed_dim < 4 || c.embed_dim % 4 != 0)
        key_fail(line_no, "embed_dim must be a positive multiple of 4");
    } else if (key == "alpha") {
      c.alpha = parse_double(line_no, key, value);
      if (c.alpha < 0.0) key_fail(line_no, "alpha cannot be negative");
    } else if (key == "threshold_p") {
      c.threshold_p = parse_double(line_no, key, value);
      if (!std::isfinite(c.threshold_p)) key_fail(line_no, "threshold_p must be finite");
    } else if (key == "seed") {
      c.seed = parse_uint(line_no, key, value);
    } else if (key == "dp") {
      c.dp = parse_bool(line_no, key, value);
    } else if (key == "gcn") {
      c.gcn = parse_bool(line_no, key, value);
      if (!c.gcn)
        key_fail(line_no, "the molecular graph encoder cannot be disabled (gcn=false)");
    } else if (key == "trans") {
      c.trans = parse_bool(line_no, key, value);
    } else if (key == "eval_every") {
      c.eval_every = parse_int(line_no, key, value);
      if (c.eval_every < 0) key_fail(line_no, "eval_every cannot be negative");
    } else if (key == "max_seq_len") {
      c.max_seq_len = parse_int(line_no, key, value);
      if (c.max_seq_len < 1) key_fail(line_no, "max_seq_len must be at least 1");
    } else if (key == "dropout") {
      c.dropout = parse_double(line_no, key, value);
      if (c.dropout < 0.0 || c.dropout >= 1.0)
        key_fail(line_no, "dropout must lie in [0, 1)");
    } else if (key == "grad_clip") {
      c.grad_clip = parse_double(line_no, key, value);
      if (!(c.grad_clip > 0.0)) key_fail(line_no, "grad_clip must be positive");
    } else if (key == "window") {
      c.window = parse_int(line_no, key, value);
      if (c.window < 1) key_fail(line_no, "window must be at least 1");
    } else if (key == "contact_threshold") {
      c.contact_threshold = parse_double(line_no, key, value);
    } else if (key == "contact_at_least") {
      c.contact_at_least = parse_bool(line_no, key, value);
    } else if (key == "subsample") {
      c.subsample = parse_double(line_no, key, value);
      if (!(c.subsample > 0.0) || c.subsample > 1.0)
        key_fail(line_no, "subsample must lie in (0, 1]");
    } else if (key == "beta") {
      c.beta = parse_double(line_no, key, value);
      out.notices.push_back("note: key 'beta' is accepted but unused by this build");
    } else if (key == "tau") {
      c.tau = parse_double(line_no, key, value);
      out.notices.push_back("note: key 'tau' is accepted but unused by this build");
    } else {
      key_fail(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  return out;
}

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

static std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string config_canonical_text(const TrainConfig& c) {
  std::string out;
  out += "lr=" + fmt_double(c.lr) + "\n";
  out += "batch_size=" + std::to_string(c.batch_size) + "\n";
  out += "epochs=" + std::to_string(c.epochs) + "\n";
  out += "embed_dim=" + std::to_string(c.embed_dim) + "\n";
  out += "alpha=" + fmt_double(c.alpha) + "\n";
  out += "threshold_p=" + fmt_double(c.threshold_p) + "\n";
  out += "seed=" + std::to_string(c.seed) + "\n";
  out += std::string("dp=") + (c.dp ? "true" : "false") + "\n";
  out += std::string("gcn=") + (c.gcn ? "true" : "false") + "\n";
  out += std::string("trans=") + (c.trans ? "true" : "false") + "\n";
  out += "max_seq_len=" + std::to_string(c.max_seq_len) + "\n";
  out += "dropout=" + fmt_double(c.dropout) + "\n";
  out += "grad_clip=" + fmt_double(c.grad_clip) + "\n";
  out += "window=" + std::to_string(c.window) + "\n";
  out += "contact_threshold=" + fmt_double(c.contact_threshold) + "\n";
  out += std::string("contact_at_least=") + (c.contact_at_least ? "true" : "false") + "\n";
  out += "subsample=" + fmt_double(c.subsample) + "\n";
  return out;
}

uint64_t config_fingerprint(const TrainConfig& c) { return fnv1a64(config_canonical_text(c)); }

}  // namespace dta
