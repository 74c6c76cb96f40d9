#include "pforge/lbfgs.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <thread>

#include "pforge/pack.hpp"
#include "pforge/rng.hpp"
#include "pforge/se.hpp"

namespace pforge {

namespace {

void validate_lbfgs(const LbfgsConfig& cfg) {
  if (cfg.memory < 1) throw ParameterError("lbfgs: memory must be >= 1");
  if (cfg.max_iters < 1) throw ParameterError("lbfgs: max_iters must be >= 1");
  if (!(cfg.grad_tol > 0.0)) throw ParameterError("lbfgs: grad_tol must be > 0");
  if (cfg.max_linesearch < 1) throw ParameterError("lbfgs: max_linesearch must be >= 1");
  if (!(cfg.armijo_c1 > 0.0 && cfg.armijo_c1 < 1.0))
    throw ParameterError("lbfgs: armijo_c1 must lie in (0, 1)");
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0))
    throw ParameterError("lbfgs: backtrack factor must lie in (0, 1)");
}

struct CurvaturePair {
  Eigen::VectorXd s, y;
  double rho;
};

}  // namespace

EngineResult lbfgs_minimize(const ObjectiveFn& fg, Eigen::VectorXd x0,
                            const LbfgsConfig& cfg) {
  validate_lbfgs(cfg);

  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd grad(x.size());
  double fx = fg(x, grad);

  EngineResult result;
  result.history.push_back(fx);

  std::deque<CurvaturePair> pairs;
  Eigen::VectorXd direction(x.size()), x_new(x.size()), grad_new(x.size());
  std::vector<double> alpha(static_cast<size_t>(cfg.memory));

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (grad.norm() <= cfg.grad_tol) {
      result.converged = true;
      break;
    }

    // Two-loop recursion for d = -H * grad.
    direction = -grad;
    for (size_t i = pairs.size(); i-- > 0;) {
      alpha[i] = pairs[i].rho * pairs[i].s.dot(direction);
      direction -= alpha[i] * pairs[i].y;
    }
    if (!pairs.empty()) {
      const auto& last = pairs.back();
      direction *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (size_t i = 0; i < pairs.size(); ++i) {
      const double beta = pairs[i].rho * pairs[i].y.dot(direction);
      direction += (alpha[i] - beta) * pairs[i].s;
    }

    double dir_deriv = grad.dot(direction);
    if (dir_deriv >= 0.0) {
      // Stale curvature produced an ascent direction; fall back to steepest
      // descent with fresh memory.
      pairs.clear();
      direction = -grad;
      dir_deriv = grad.dot(direction);
      if (dir_deriv >= 0.0) {  // grad == 0
        result.converged = true;
        break;
      }
    }

    // Armijo backtracking.
    double step = 1.0;
    double fx_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < cfg.max_linesearch; ++ls) {
      x_new = x + step * direction;
      fx_new = fg(x_new, grad_new);
      if (std::isfinite(fx_new) && fx_new <= fx + cfg.armijo_c1 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) break;  // best iterate kept, converged stays false

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      pairs.push_back({s, y, 1.0 / sy});
      if (pairs.size() > static_cast<size_t>(cfg.memory)) pairs.pop_front();
    }

    x.swap(x_new);
    grad.swap(grad_new);
    fx = fx_new;
    result.iterations = iter + 1;
    result.history.push_back(fx);
  }

  result.x = std::move(x);
  result.fx = fx;
  return result;
}

OptimizeResult optimize(const ChannelMatrix& h, const SystemConfig& cfg,
                        const LbfgsConfig& opt, uint64_t seed) {
  check_config_shapes(h, cfg);
  validate_lbfgs(opt);
  const auto t0 = std::chrono::steady_clock::now();

  const int n = cfg.num_antennas;
  const int q = cfg.num_users;
  const double scale =
      opt.init_scale > 0.0 ? opt.init_scale : std::sqrt(cfg.power_budget / (n * q));

  Rng rng(seed);
  PrecodingMatrix v0(n, q);
  for (Eigen::Index c = 0; c < v0.cols(); ++c)
    for (Eigen::Index r = 0; r < v0.rows(); ++r) v0(r, c) = rng.complex_normal() * scale;
  v0 = project_power(v0, cfg);

  // Minimize -f(project_power(V)) over the packed real coordinates of V.
  const ObjectiveFn fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const PrecodingMatrix v = unpack_precoder(x, n, q);
    const Eigen::MatrixXcd g = projected_gradient(h, v, cfg);
    Eigen::Index idx = 0;
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        grad[idx++] = -2.0 * g(r, c).real();
        grad[idx++] = -2.0 * g(r, c).imag();
      }
    }
    return -projected_objective(h, v, cfg);
  };

  EngineResult engine = lbfgs_minimize(fg, pack_precoder(v0), opt);

  OptimizeResult result;
  result.precoder = project_power(unpack_precoder(engine.x, n, q), cfg);
  result.se = spectral_efficiency(h, result.precoder, cfg);
  result.iterations = engine.iterations;
  result.converged = engine.converged;
  result.se_history.reserve(engine.history.size());
  for (double v : engine.history) result.se_history.push_back(-v);
  result.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<OptimizeResult> run_starts(const ChannelMatrix& h, const SystemConfig& cfg,
                                       const LbfgsConfig& opt, uint64_t seed,
                                       int first, int count, int threads) {
  if (count < 0 || first < 0) throw ParameterError("run_starts: negative range");
  std::vector<OptimizeResult> results(static_cast<size_t>(count));
  if (count == 0) return results;

  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i)
      results[static_cast<size_t>(i)] =
          optimize(h, cfg, opt, derive_seed(seed, static_cast<uint64_t>(first + i)));
    return results;
  }

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      results[static_cast<size_t>(i)] =
          optimize(h, cfg, opt, derive_seed(seed, static_cast<uint64_t>(first + i)));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

std::vector<OptimizeResult> multi_start(const ChannelMatrix& h, const SystemConfig& cfg,
                                        const LbfgsConfig& opt, int num_starts,
                                        uint64_t seed, int threads) {
  if (num_starts < 1) throw ParameterError("multi_start: num_starts must be >= 1");
  return run_starts(h, cfg, opt, seed, 0, num_starts, threads);
}

}  // namespace pforge
