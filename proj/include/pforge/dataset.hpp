#ifndef PFORGE_DATASET_HPP
#define PFORGE_DATASET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pforge/channel.hpp"
#include "pforge/lbfgs.hpp"
#include "pforge/types.hpp"

namespace pforge {

/// One training record: a packed precoder, its spectral efficiency, and an
/// optional packed channel (size 0 when absent; derivable from the parent
/// dataset's channel list).
struct PackedSample {
  Eigen::VectorXd w_vec;
  Eigen::VectorXd h_vec;
  double se = 0.0;
};

/// Channels plus the high-SE precoders collected for each of them. Samples
/// reference channels by index. Immutable once built or loaded.
class PrecodingDataset {
 public:
  PrecodingDataset(SystemConfig config, double threshold)
      : config_(config), threshold_(threshold) {}

  const SystemConfig& config() const { return config_; }
  double threshold() const { return threshold_; }

  const std::vector<ChannelMatrix>& channels() const { return channels_; }
  const std::vector<std::pair<int, PackedSample>>& samples() const { return samples_; }
  size_t size() const { return samples_.size(); }

  int add_channel(const ChannelMatrix& h);
  void add_sample(int channel_index, PackedSample sample);

  /// Deterministic 90/10 split keyed by sample index and the stored salt.
  bool is_validation(size_t sample_index) const;
  uint64_t split_salt() const { return split_salt_; }
  void set_split_salt(uint64_t salt) { split_salt_ = salt; }

  /// Accepted samples still missing versus what was requested (0 when the
  /// build fully satisfied the request).
  int shortfall() const { return shortfall_; }
  void set_shortfall(int count) { shortfall_ = count; }

  /// Free-form build metadata (seeds, attempt counts, generator version);
  /// serialized verbatim into the file header.
  const std::string& metadata_json() const { return metadata_json_; }
  void set_metadata_json(std::string json) { metadata_json_ = std::move(json); }

 private:
  SystemConfig config_;
  double threshold_;
  std::vector<ChannelMatrix> channels_;
  std::vector<std::pair<int, PackedSample>> samples_;
  uint64_t split_salt_ = 0;
  int shortfall_ = 0;
  std::string metadata_json_;
};

struct BuildOptions {
  int threads = 1;
  int attempt_cap_multiplier = 10;  // per channel: at most cap * N optimizer runs
};

/// Multi-start collection for one fixed channel: optimizer runs are accepted
/// while their SE clears the threshold, until N samples are in or the attempt
/// cap is hit (partial dataset + shortfall in that case).
PrecodingDataset build_fixed_h_dataset(const ChannelMatrix& h, const SystemConfig& cfg,
                                       const LbfgsConfig& opt, int num_samples,
                                       double threshold, uint64_t seed,
                                       const BuildOptions& build = {});

/// Same process over the channel family {H, H + Delta_1, ..., H + Delta_K}.
PrecodingDataset build_perturbed_dataset(const ChannelMatrix& h, const SystemConfig& cfg,
                                         const LbfgsConfig& opt,
                                         const PerturbationSpec& spec,
                                         int samples_per_channel, double threshold,
                                         uint64_t seed, const BuildOptions& build = {});

// .pcds container: magic "PCDS", u32 version, u64 header length, JSON header,
// then channels and samples as little-endian IEEE-754 doubles in pack order.
void save_dataset(const PrecodingDataset& dataset, const std::string& path);
PrecodingDataset load_dataset(const std::string& path);

/// One row per sample: channel index, SE, then the packed precoder entries.
void export_csv(const PrecodingDataset& dataset, const std::string& path);

/// Counts per Fig-style SE band: below 7, 7 to 14, 14 and up.
struct SeBands {
  long below = 0;
  long mid = 0;
  long high = 0;
  long total() const { return below + mid + high; }
};
SeBands se_bands(const std::vector<double>& values);

}  // namespace pforge

#endif  // PFORGE_DATASET_HPP
