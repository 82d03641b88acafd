#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dta {

struct CheckpointEntry {
  std::string name;
  std::vector<double> values;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
};

// Full training state: parameters with optimiser moments, tied to the
// configuration and dataset that produced them.
struct Checkpoint {
  uint64_t config_fp = 0;
  uint64_t dataset_fp = 0;
  int64_t epoch = 0;
  int64_t adam_t = 0;
  std::vector<CheckpointEntry> entries;
};

// Binary, little-endian, byte-stable for identical state: magic "DSKD",
// version, fingerprints, then length-prefixed named float64 triples.
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dta
