#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dta {

// Error taxonomy shared by the library and the CLI. Each kind maps to a
// stable nonzero process exit code (see Error::exit_code).
enum class ErrorKind {
  Usage,       // bad command line
  Parse,       // SMILES / text parse failure, carries a byte offset
  Input,       // malformed external input (contact maps, matrices)
  Data,        // dataset-level inconsistency (duplicates, conflicts)
  Config,      // bad configuration key/value
  Dimension,   // tensor shape mismatch
  Structural,  // sparse-matrix structure violation
  Domain,      // operation outside its mathematical domain
  Contract,    // API precondition violated
  Model,       // model wiring / width mismatch
  Training,    // non-finite loss or gradient during training
  Io,          // file read/write failure
  Undefined,   // metric undefined for the given inputs
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Input: return "input";
    case ErrorKind::Data: return "data";
    case ErrorKind::Config: return "config";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Structural: return "structural";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Model: return "model";
    case ErrorKind::Training: return "training";
    case ErrorKind::Io: return "io";
    case ErrorKind::Undefined: return "undefined";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  Error(ErrorKind kind, const std::string& msg, int64_t offset)
      : std::runtime_error(msg), kind_(kind), offset_(offset) {}

  ErrorKind kind() const { return kind_; }
  // Byte offset into the offending input, or -1 when not applicable.
  int64_t offset() const { return offset_; }
  int exit_code() const { return 3 + static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
  int64_t offset_ = -1;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

// 64-bit FNV-1a, used for config/dataset fingerprints and RNG stream ids.
constexpr uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based generator: the stream of draws is a pure function of
// (seed, stream, counter), identical on every platform and compiler.
// std::mt19937's distributions are implementation-defined, so they are
// not used anywhere in this project.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream) : key_(mix64(seed) ^ mix64(~stream)) {}
  Rng(uint64_t seed, std::string_view stream) : Rng(seed, fnv1a64(stream)) {}

  uint64_t next_u64() { return mix64(key_ ^ counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return next_u64() % n; }

  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace dta
