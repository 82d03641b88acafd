#include "deskdta/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "deskdta/common.hpp"

namespace dta {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'K', 'D'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(ErrorKind::Data, "checkpoint '" + path + "' is truncated");
  return v;
}

void put_doubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void take_doubles(std::ifstream& in, const std::string& path, std::vector<double>& v,
                  uint64_t count) {
  v.resize(count);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) fail(ErrorKind::Data, "checkpoint '" + path + "' is truncated");
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write checkpoint '" + path + "'");
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, ck.config_fp);
  put(out, ck.dataset_fp);
  put(out, ck.epoch);
  put(out, ck.adam_t);
  put(out, static_cast<uint64_t>(ck.entries.size()));
  for (const CheckpointEntry& e : ck.entries) {
    if (e.adam_m.size() != e.values.size() || e.adam_v.size() != e.values.size())
      fail(ErrorKind::Contract, "checkpoint entry '" + e.name +
                                    "' has mismatched moment buffer sizes");
    put(out, static_cast<uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put(out, static_cast<uint64_t>(e.values.size()));
    put_doubles(out, e.values);
    put_doubles(out, e.adam_m);
    put_doubles(out, e.adam_v);
  }
  if (!out) fail(ErrorKind::Io, "failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorKind::Data, "'" + path + "' is not a checkpoint file (bad magic)");
  auto version = take<uint32_t>(in, path);
  if (version != kVersion)
    fail(ErrorKind::Data, "checkpoint '" + path + "' has unsupported version " +
                              std::to_string(version));
  Checkpoint ck;
  ck.config_fp = take<uint64_t>(in, path);
  ck.dataset_fp = take<uint64_t>(in, path);
  ck.epoch = take<int64_t>(in, path);
  ck.adam_t = take<int64_t>(in, path);
  auto n = take<uint64_t>(in, path);
  for (uint64_t i = 0; i < n; ++i) {
    CheckpointEntry e;
    auto name_len = take<uint32_t>(in, path);
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    if (!in) fail(ErrorKind::Data, "checkpoint '" + path + "' is truncated");
    auto count = take<uint64_t>(in, path);
    take_doubles(in, path, e.values, count);
    take_doubles(in, path, e.adam_m, count);
    take_doubles(in, path, e.adam_v, count);
    ck.entries.push_back(std::move(e));
  }
  // a well-formed file ends exactly here
  char extra;
  in.read(&extra, 1);
  if (in) fail(ErrorKind::Data, "checkpoint '" + path + "' has trailing bytes");
  return ck;
}

}  // namespace dta
