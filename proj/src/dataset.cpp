#include "pforge/dataset.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pforge/binio.hpp"
#include "pforge/pack.hpp"
#include "pforge/rng.hpp"
#include "pforge/se.hpp"

namespace pforge {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'D', 'S'};
constexpr uint32_t kVersion = 1;
constexpr int kChunk = 64;  // optimizer runs scheduled per wave

// Stream ids for derive_seed; fixed so files are replayable.
constexpr uint64_t kPerturbStream = 1;
constexpr uint64_t kChannelStreamBase = 2;

}  // namespace

int PrecodingDataset::add_channel(const ChannelMatrix& h) {
  check_config_shapes(h, config_);
  channels_.push_back(h);
  return static_cast<int>(channels_.size()) - 1;
}

void PrecodingDataset::add_sample(int channel_index, PackedSample sample) {
  if (channel_index < 0 || channel_index >= static_cast<int>(channels_.size()))
    throw IndexError("dataset: channel index " + std::to_string(channel_index) +
                     " out of range");
  const Eigen::Index d = 2ll * config_.num_antennas * config_.num_users;
  if (sample.w_vec.size() != d)
    throw DimensionError("dataset: packed precoder length " +
                         std::to_string(sample.w_vec.size()) + ", expected " +
                         std::to_string(d));
  if (sample.h_vec.size() != 0 && sample.h_vec.size() != d)
    throw DimensionError("dataset: packed channel length " +
                         std::to_string(sample.h_vec.size()) + ", expected 0 or " +
                         std::to_string(d));
  samples_.emplace_back(channel_index, std::move(sample));
}

bool PrecodingDataset::is_validation(size_t sample_index) const {
  return derive_seed(split_salt_, sample_index) % 10 == 0;
}

namespace {

// Collects accepted samples for one channel; attempts use the absolute start
// indices [0, cap) of the channel's seed family, so results are independent
// of chunking and thread count.
void collect_for_channel(PrecodingDataset& dataset, int channel_index,
                         const ChannelMatrix& h, const SystemConfig& cfg,
                         const LbfgsConfig& opt, int num_samples, double threshold,
                         uint64_t channel_seed, const BuildOptions& build,
                         nlohmann::json& stats) {
  const long cap = static_cast<long>(build.attempt_cap_multiplier) * num_samples;
  long attempts = 0;
  int accepted = 0;
  while (accepted < num_samples && attempts < cap) {
    const int count = static_cast<int>(std::min<long>(kChunk, cap - attempts));
    const auto results = run_starts(h, cfg, opt, channel_seed,
                                    static_cast<int>(attempts), count, build.threads);
    for (const auto& r : results) {
      ++attempts;
      if (r.se >= threshold) {
        PackedSample sample;
        sample.w_vec = pack_precoder(r.precoder);
        sample.se = r.se;
        dataset.add_sample(channel_index, std::move(sample));
        if (++accepted == num_samples) break;
      }
    }
  }
  stats["attempts_per_channel"].push_back(attempts);
  stats["accepted_per_channel"].push_back(accepted);
}

}  // namespace

PrecodingDataset build_perturbed_dataset(const ChannelMatrix& h, const SystemConfig& cfg,
                                         const LbfgsConfig& opt,
                                         const PerturbationSpec& spec,
                                         int samples_per_channel, double threshold,
                                         uint64_t seed, const BuildOptions& build) {
  check_config_shapes(h, cfg);
  if (samples_per_channel < 1)
    throw ParameterError("dataset build: need at least one sample per channel");
  if (build.attempt_cap_multiplier < 1)
    throw ParameterError("dataset build: attempt cap multiplier must be >= 1");

  PrecodingDataset dataset(cfg, threshold);
  dataset.set_split_salt(derive_seed(seed, 0));

  std::vector<ChannelMatrix> channels;
  channels.push_back(h);  // the base channel always comes first
  for (auto& hp : perturb_channel(h, spec, derive_seed(seed, kPerturbStream)))
    channels.push_back(std::move(hp));

  nlohmann::json stats;
  stats["generator"] = "precoder-forge 1.0.0";
  stats["seed"] = seed;
  stats["requested_per_channel"] = samples_per_channel;
  stats["attempt_cap_multiplier"] = build.attempt_cap_multiplier;
  stats["perturb_count"] = spec.count;
  stats["perturb_delta"] = spec.delta;
  stats["lbfgs"] = {{"memory", opt.memory},         {"max_iters", opt.max_iters},
                    {"grad_tol", opt.grad_tol},     {"max_linesearch", opt.max_linesearch},
                    {"armijo_c1", opt.armijo_c1},   {"backtrack", opt.backtrack},
                    {"init_scale", opt.init_scale}};
  stats["split_rule"] = "derive_seed(split_salt, index) % 10 == 0 -> validation";
  stats["attempts_per_channel"] = nlohmann::json::array();
  stats["accepted_per_channel"] = nlohmann::json::array();

  for (size_t c = 0; c < channels.size(); ++c) {
    const int idx = dataset.add_channel(channels[c]);
    collect_for_channel(dataset, idx, channels[c], cfg, opt, samples_per_channel,
                        threshold, derive_seed(seed, kChannelStreamBase + c), build,
                        stats);
  }

  const long expected =
      static_cast<long>(channels.size()) * static_cast<long>(samples_per_channel);
  dataset.set_shortfall(static_cast<int>(expected - static_cast<long>(dataset.size())));
  stats["shortfall"] = dataset.shortfall();
  dataset.set_metadata_json(stats.dump());
  return dataset;
}

PrecodingDataset build_fixed_h_dataset(const ChannelMatrix& h, const SystemConfig& cfg,
                                       const LbfgsConfig& opt, int num_samples,
                                       double threshold, uint64_t seed,
                                       const BuildOptions& build) {
  return build_perturbed_dataset(h, cfg, opt, PerturbationSpec{0.0, 0}, num_samples,
                                 threshold, seed, build);
}

void save_dataset(const PrecodingDataset& dataset, const std::string& path) {
  const SystemConfig& cfg = dataset.config();
  const Eigen::Index d = 2ll * cfg.num_antennas * cfg.num_users;

  BinWriter out(path);
  out.bytes(kMagic, 4);
  out.u32(kVersion);
  out.u32(static_cast<uint32_t>(cfg.num_users));
  out.u32(static_cast<uint32_t>(cfg.num_antennas));
  out.f64(cfg.noise_power);
  out.f64(cfg.power_budget);
  out.f64(dataset.threshold());
  out.u64(dataset.split_salt());
  out.u32(static_cast<uint32_t>(dataset.shortfall()));
  out.u32(static_cast<uint32_t>(dataset.channels().size()));
  out.u64(dataset.size());
  out.u64(dataset.metadata_json().size());
  out.string_block(dataset.metadata_json());

  for (const auto& h : dataset.channels()) {
    const Eigen::VectorXd v = pack_channel(h);
    for (Eigen::Index i = 0; i < v.size(); ++i) out.f64(v[i]);
  }
  for (const auto& [channel_index, sample] : dataset.samples()) {
    out.u32(static_cast<uint32_t>(channel_index));
    out.u8(sample.h_vec.size() == d ? 1 : 0);
    out.f64(sample.se);
    for (Eigen::Index i = 0; i < sample.w_vec.size(); ++i) out.f64(sample.w_vec[i]);
    for (Eigen::Index i = 0; i < sample.h_vec.size(); ++i) out.f64(sample.h_vec[i]);
  }
  out.close();
}

PrecodingDataset load_dataset(const std::string& path) {
  BinReader in(path);
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path + ": bad magic at byte offset 0");
  const uint32_t version = in.u32();
  if (version > kVersion)
    throw UnsupportedVersionError(path + ": file version " + std::to_string(version) +
                                  " is newer than supported version " +
                                  std::to_string(kVersion));

  SystemConfig cfg;
  cfg.num_users = static_cast<int>(in.u32());
  cfg.num_antennas = static_cast<int>(in.u32());
  cfg.noise_power = in.f64();
  cfg.power_budget = in.f64();
  const double threshold = in.f64();
  const uint64_t salt = in.u64();
  const int shortfall = static_cast<int>(in.u32());
  const uint32_t channel_count = in.u32();
  const uint64_t sample_count = in.u64();
  const uint64_t meta_len = in.u64();
  std::string meta = in.string_block(meta_len);

  cfg.se_threshold = threshold;
  PrecodingDataset dataset(cfg, threshold);
  dataset.set_split_salt(salt);
  dataset.set_shortfall(shortfall);
  dataset.set_metadata_json(std::move(meta));

  const Eigen::Index d = 2ll * cfg.num_antennas * cfg.num_users;
  for (uint32_t c = 0; c < channel_count; ++c) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = in.f64();
    dataset.add_channel(unpack_channel(v, cfg.num_users, cfg.num_antennas));
  }
  for (uint64_t s = 0; s < sample_count; ++s) {
    const uint64_t at = in.offset();
    const uint32_t channel_index = in.u32();
    if (channel_index >= channel_count)
      throw FormatError(path + ": sample references channel " +
                        std::to_string(channel_index) + " of " +
                        std::to_string(channel_count) + " at byte offset " +
                        std::to_string(at));
    const uint8_t has_h = in.u8();
    PackedSample sample;
    sample.se = in.f64();
    sample.w_vec.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) sample.w_vec[i] = in.f64();
    if (has_h) {
      sample.h_vec.resize(d);
      for (Eigen::Index i = 0; i < d; ++i) sample.h_vec[i] = in.f64();
    }
    dataset.add_sample(static_cast<int>(channel_index), std::move(sample));
  }
  return dataset;
}

void export_csv(const PrecodingDataset& dataset, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  const Eigen::Index d = 2ll * dataset.config().num_antennas * dataset.config().num_users;
  std::fprintf(f, "channel_index,se");
  for (Eigen::Index i = 0; i < d; ++i) std::fprintf(f, ",w_%" PRId64, static_cast<int64_t>(i));
  std::fprintf(f, "\n");
  for (const auto& [channel_index, sample] : dataset.samples()) {
    std::fprintf(f, "%d,%.17g", channel_index, sample.se);
    for (Eigen::Index i = 0; i < sample.w_vec.size(); ++i)
      std::fprintf(f, ",%.17g", sample.w_vec[i]);
    std::fprintf(f, "\n");
  }
  if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

SeBands se_bands(const std::vector<double>& values) {
  SeBands bands;
  for (double v : values) {
    if (v < 7.0)
      ++bands.below;
    else if (v < 14.0)
      ++bands.mid;
    else
      ++bands.high;
  }
  return bands;
}

}  // namespace pforge
