#ifndef PFORGE_TYPES_HPP
#define PFORGE_TYPES_HPP

#include <Eigen/Dense>
#include <complex>

#include "pforge/errors.hpp"

namespace pforge {

using Complex = std::complex<double>;

/// q x n complex channel matrix; row k is the channel of user k.
using ChannelMatrix = Eigen::MatrixXcd;

/// n x q complex precoding matrix; column k is the precoder of user k.
using PrecodingMatrix = Eigen::MatrixXcd;

struct SystemConfig {
  int num_users = 4;        // q
  int num_antennas = 16;    // n
  double noise_power = 1.0; // sigma^2
  double power_budget = 1.0;// p, per-antenna cap
  double se_threshold = 14.5;
};

inline void validate(const SystemConfig& cfg) {
  if (cfg.num_users < 1 || cfg.num_antennas < 1)
    throw DimensionError("system config: need num_users >= 1 and num_antennas >= 1");
  if (!(cfg.noise_power > 0.0))
    throw ParameterError("system config: noise_power must be > 0");
  if (!(cfg.power_budget > 0.0))
    throw ParameterError("system config: power_budget must be > 0");
}

/// H must be q x n and W must be n x q for the same (q, n).
inline void check_pair_shapes(const ChannelMatrix& H, const PrecodingMatrix& W) {
  if (H.rows() < 1 || H.cols() < 1)
    throw DimensionError("channel matrix is empty");
  if (W.rows() != H.cols() || W.cols() != H.rows())
    throw DimensionError("precoder shape " + std::to_string(W.rows()) + "x" +
                         std::to_string(W.cols()) + " does not pair with channel " +
                         std::to_string(H.rows()) + "x" + std::to_string(H.cols()));
}

inline void check_config_shapes(const ChannelMatrix& H, const SystemConfig& cfg) {
  validate(cfg);
  if (H.rows() != cfg.num_users || H.cols() != cfg.num_antennas)
    throw DimensionError("channel is " + std::to_string(H.rows()) + "x" +
                         std::to_string(H.cols()) + " but config expects " +
                         std::to_string(cfg.num_users) + "x" +
                         std::to_string(cfg.num_antennas));
}

}  // namespace pforge

#endif  // PFORGE_TYPES_HPP
