#ifndef PFORGE_SE_HPP
#define PFORGE_SE_HPP

#include <Eigen/Dense>

#include "pforge/types.hpp"

namespace pforge {

// Spectral efficiency of a downlink precoder under a per-antenna power cap:
//
//   SINR_k(W) = |h_k . w^k|^2 / (sum_{l != k} |h_k . w^l|^2 + sigma^2)
//   f(W)      = sum_k log2(1 + SINR_k(W))
//   feasible  iff max_i sum_l |W(i,l)|^2 <= p
//
// h_k is row k of H, w^l is column l of W.

/// SINR of one user (0-based index).
double sinr(const ChannelMatrix& h, const PrecodingMatrix& w, const SystemConfig& cfg,
            int user);

/// f(W) in bits/s/Hz. log2 is computed as ln/ln2; the argument is always >= 1.
double spectral_efficiency(const ChannelMatrix& h, const PrecodingMatrix& w,
                           const SystemConfig& cfg);

/// Wirtinger gradient of f with respect to conj(W), an n x q complex matrix g.
/// The directional derivative of f along a complex perturbation D of W equals
/// 2 * Re(sum_ij conj(g_ij) * D_ij); equivalently the real partials are
/// df/dRe(W_ij) = 2 Re(g_ij) and df/dIm(W_ij) = 2 Im(g_ij).
Eigen::MatrixXcd se_gradient(const ChannelMatrix& h, const PrecodingMatrix& w,
                             const SystemConfig& cfg);

/// Per-antenna transmit powers: element i is sum_l |W(i,l)|^2.
Eigen::VectorXd antenna_powers(const PrecodingMatrix& w);

/// Scales W by min(1, sqrt(p / max_i power_i)). Feasible input is returned
/// unchanged; an infeasible one comes back with its largest antenna power
/// equal to p. Column directions are preserved.
PrecodingMatrix project_power(const PrecodingMatrix& w, const SystemConfig& cfg);

/// Maximum ratio transmission baseline: W proportional to H^H, scaled to the
/// power boundary.
PrecodingMatrix mrt_precoder(const ChannelMatrix& h, const SystemConfig& cfg);

/// Zero-forcing baseline: W proportional to H^H (H H^H)^{-1}, scaled to the
/// power boundary. Throws SingularMatrixError when H is rank-deficient
/// (in particular whenever q > n).
PrecodingMatrix zf_precoder(const ChannelMatrix& h, const SystemConfig& cfg);

// Unconstrained reparameterization used by the optimizer: the free variable V
// is any n x q complex matrix and the objective is f(project_power(V)).

double projected_objective(const ChannelMatrix& h, const PrecodingMatrix& v,
                           const SystemConfig& cfg);

/// Wirtinger gradient (w.r.t. conj(V)) of projected_objective. The projection
/// is differentiable except on the tie set of the row-power maximum; there the
/// first maximal row is treated as the active one.
Eigen::MatrixXcd projected_gradient(const ChannelMatrix& h, const PrecodingMatrix& v,
                                    const SystemConfig& cfg);

}  // namespace pforge

#endif  // PFORGE_SE_HPP
