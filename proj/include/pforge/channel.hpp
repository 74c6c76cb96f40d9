#ifndef PFORGE_CHANNEL_HPP
#define PFORGE_CHANNEL_HPP

#include <cstdint>
#include <vector>

#include "pforge/types.hpp"

namespace pforge {

struct PerturbationSpec {
  double delta = 5.0;  // target squared Frobenius norm of each perturbation
  int count = 15;      // number of perturbed copies
};

/// i.i.d. CN(0,1) channel, deterministic in (q, n, seed). Entries are drawn
/// in column-major order.
ChannelMatrix generate_channel(int num_users, int num_antennas, uint64_t seed);

/// H + Delta_i for i = 0..count-1. Each Delta_i is an isotropic complex
/// Gaussian direction rescaled so its squared Frobenius norm equals delta
/// exactly (up to roundoff of the final sum).
std::vector<ChannelMatrix> perturb_channel(const ChannelMatrix& h,
                                           const PerturbationSpec& spec,
                                           uint64_t seed);

}  // namespace pforge

#endif  // PFORGE_CHANNEL_HPP
