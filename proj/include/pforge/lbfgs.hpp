#ifndef PFORGE_LBFGS_HPP
#define PFORGE_LBFGS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "pforge/types.hpp"

namespace pforge {

struct LbfgsConfig {
  int memory = 10;           // stored curvature pairs
  int max_iters = 500;
  double grad_tol = 1e-6;    // stop when ||grad||_2 <= grad_tol
  int max_linesearch = 40;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  double init_scale = 0.0;   // 0 selects sqrt(p / (n*q))
};

struct OptimizeResult {
  PrecodingMatrix precoder;        // feasible (projected)
  double se = 0.0;                 // spectral_efficiency(H, precoder, cfg)
  int iterations = 0;
  bool converged = false;
  double wall_time_sec = 0.0;
  std::vector<double> se_history;  // objective at start + each accepted step
};

/// Objective callback: fills the gradient and returns the value at x.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct EngineResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // accepted objective values, strictly non-increasing
};

/// Limited-memory BFGS minimizer: two-loop recursion with Armijo
/// backtracking. Curvature pairs with non-positive s'y are skipped. A failed
/// line search ends the run with converged = false and the best iterate kept.
EngineResult lbfgs_minimize(const ObjectiveFn& fg, Eigen::VectorXd x0,
                            const LbfgsConfig& cfg);

/// Maximizes spectral efficiency over the unconstrained variable V with the
/// objective f(project_power(V)), starting from a random feasible point.
OptimizeResult optimize(const ChannelMatrix& h, const SystemConfig& cfg,
                        const LbfgsConfig& opt, uint64_t seed);

/// Independent optimize runs with per-start derived seeds; results come back
/// in start order regardless of thread count.
std::vector<OptimizeResult> multi_start(const ChannelMatrix& h, const SystemConfig& cfg,
                                        const LbfgsConfig& opt, int num_starts,
                                        uint64_t seed, int threads = 1);

/// Runs starts [first, first + count) of the same seed family multi_start
/// uses; lets callers consume the family in chunks.
std::vector<OptimizeResult> run_starts(const ChannelMatrix& h, const SystemConfig& cfg,
                                       const LbfgsConfig& opt, uint64_t seed,
                                       int first, int count, int threads = 1);

}  // namespace pforge

#endif  // PFORGE_LBFGS_HPP
