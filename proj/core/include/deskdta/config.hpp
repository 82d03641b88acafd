#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dta {

struct TrainConfig {
  double lr = 5e-4;
  int64_t batch_size = 512;
  int64_t epochs = 2000;
  int64_t embed_dim = 128;
  double alpha = 0.2;          // prompt regulariser weight
  double threshold_p = 6.0;    // positive/negative edge split
  uint64_t seed = 42;
  bool dp = true;              // dynamic prompts
  bool gcn = true;             // molecular graph encoders (must stay on)
  bool trans = true;           // protein sequence encoder
  int64_t eval_every = 0;      // epochs between held-out evaluations; 0 = end only
  int64_t max_seq_len = 1000;
  double dropout = 0.1;
  double grad_clip = 5.0;
  int64_t window = 2;              // backbone fallback neighbourhood
  double contact_threshold = 0.5;  // residue contact cutoff
  bool contact_at_least = true;    // contact when value >= threshold
  double subsample = 1.0;          // seeded fraction of training pairs to keep
  // parsed for compatibility with older run files, otherwise ignored
  double beta = 0.2;
  double tau = 0.5;
};

struct ParsedConfig {
  TrainConfig train;
  std::vector<std::string> notices;  // non-fatal remarks, e.g. ignored keys
};

ParsedConfig parse_config_text(std::string_view text);
ParsedConfig load_config(const std::string& path);

// Canonical serialisation of the semantically relevant fields; the hash
// of this text ties checkpoints to the configuration that produced them.
std::string config_canonical_text(const TrainConfig& c);
uint64_t config_fingerprint(const TrainConfig& c);

}  // namespace dta
