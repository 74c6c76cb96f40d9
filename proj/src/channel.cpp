#include "pforge/channel.hpp"

#include <cmath>

#include "pforge/errors.hpp"
#include "pforge/rng.hpp"

namespace pforge {

ChannelMatrix generate_channel(int num_users, int num_antennas, uint64_t seed) {
  if (num_users < 1 || num_antennas < 1)
    throw DimensionError("generate_channel: need num_users >= 1 and num_antennas >= 1, got " +
                         std::to_string(num_users) + "x" + std::to_string(num_antennas));
  Rng rng(seed);
  ChannelMatrix h(num_users, num_antennas);
  for (Eigen::Index c = 0; c < h.cols(); ++c)
    for (Eigen::Index r = 0; r < h.rows(); ++r) h(r, c) = rng.complex_normal();
  return h;
}

std::vector<ChannelMatrix> perturb_channel(const ChannelMatrix& h,
                                           const PerturbationSpec& spec,
                                           uint64_t seed) {
  if (h.rows() < 1 || h.cols() < 1) throw DimensionError("perturb_channel: empty channel");
  if (!h.allFinite()) throw ParameterError("perturb_channel: channel has non-finite entries");
  if (spec.delta < 0.0) throw ParameterError("perturb_channel: delta must be >= 0");
  if (spec.count < 0) throw ParameterError("perturb_channel: count must be >= 0");

  std::vector<ChannelMatrix> out;
  out.reserve(static_cast<size_t>(spec.count));
  Rng base(seed);
  for (int i = 0; i < spec.count; ++i) {
    if (spec.delta == 0.0) {
      out.push_back(h);
      continue;
    }
    Rng rng = base.derive(static_cast<uint64_t>(i));
    ChannelMatrix delta(h.rows(), h.cols());
    for (Eigen::Index c = 0; c < delta.cols(); ++c)
      for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, c) = rng.complex_normal();
    const double norm_sq = delta.squaredNorm();
    delta *= std::sqrt(spec.delta / norm_sq);
    out.push_back(h + delta);
  }
  return out;
}

}  // namespace pforge
