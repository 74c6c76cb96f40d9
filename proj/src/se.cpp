#include "pforge/se.hpp"

#include <cmath>

namespace pforge {

namespace {

constexpr double kInvLn2 = 1.4426950408889634074;  // 1 / ln(2)

// Useful-signal and interference-plus-noise powers per user, from G = H * W.
void link_powers(const Eigen::MatrixXcd& g, double noise_power, Eigen::VectorXd& useful,
                 Eigen::VectorXd& denom) {
  const Eigen::Index q = g.rows();
  useful.resize(q);
  denom.resize(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    double interference = 0.0;
    for (Eigen::Index l = 0; l < q; ++l) {
      const double p = std::norm(g(k, l));
      if (l == k)
        useful[k] = p;
      else
        interference += p;
    }
    denom[k] = interference + noise_power;
  }
}

}  // namespace

double sinr(const ChannelMatrix& h, const PrecodingMatrix& w, const SystemConfig& cfg,
            int user) {
  check_config_shapes(h, cfg);
  check_pair_shapes(h, w);
  if (user < 0 || user >= cfg.num_users)
    throw IndexError("sinr: user index " + std::to_string(user) + " outside [0, " +
                     std::to_string(cfg.num_users) + ")");
  const Eigen::RowVectorXcd row = h.row(user) * w;
  double interference = 0.0;
  for (Eigen::Index l = 0; l < row.size(); ++l)
    if (l != user) interference += std::norm(row[l]);
  return std::norm(row[user]) / (interference + cfg.noise_power);
}

double spectral_efficiency(const ChannelMatrix& h, const PrecodingMatrix& w,
                           const SystemConfig& cfg) {
  check_config_shapes(h, cfg);
  check_pair_shapes(h, w);
  const Eigen::MatrixXcd g = h * w;
  Eigen::VectorXd useful, denom;
  link_powers(g, cfg.noise_power, useful, denom);
  double se = 0.0;
  for (Eigen::Index k = 0; k < useful.size(); ++k)
    se += std::log1p(useful[k] / denom[k]) * kInvLn2;
  return se;
}

Eigen::MatrixXcd se_gradient(const ChannelMatrix& h, const PrecodingMatrix& w,
                             const SystemConfig& cfg) {
  check_config_shapes(h, cfg);
  check_pair_shapes(h, w);
  const Eigen::MatrixXcd g = h * w;
  Eigen::VectorXd useful, denom;
  link_powers(g, cfg.noise_power, useful, denom);

  // d f / d conj(G_kl): the diagonal entry only feeds the useful-signal term,
  // an off-diagonal entry feeds both the total and the interference term.
  Eigen::MatrixXcd coeff(g.rows(), g.cols());
  for (Eigen::Index k = 0; k < g.rows(); ++k) {
    const double total = useful[k] + denom[k];
    for (Eigen::Index l = 0; l < g.cols(); ++l) {
      if (l == k)
        coeff(k, l) = g(k, l) * (kInvLn2 / total);
      else
        coeff(k, l) = g(k, l) * (kInvLn2 * (1.0 / total - 1.0 / denom[k]));
    }
  }
  return h.adjoint() * coeff;
}

Eigen::VectorXd antenna_powers(const PrecodingMatrix& w) {
  if (!w.allFinite()) throw ParameterError("antenna_powers: non-finite precoder");
  return w.rowwise().squaredNorm();
}

PrecodingMatrix project_power(const PrecodingMatrix& w, const SystemConfig& cfg) {
  validate(cfg);
  const Eigen::VectorXd powers = antenna_powers(w);
  const double max_power = powers.size() > 0 ? powers.maxCoeff() : 0.0;
  if (max_power <= cfg.power_budget) return w;
  return w * std::sqrt(cfg.power_budget / max_power);
}

namespace {

// Scale a direction matrix so its largest antenna power sits exactly on the
// budget. Zero input stays zero.
PrecodingMatrix scale_to_boundary(const PrecodingMatrix& w, const SystemConfig& cfg) {
  const double max_power = antenna_powers(w).maxCoeff();
  if (max_power <= 0.0) return w;
  return w * std::sqrt(cfg.power_budget / max_power);
}

}  // namespace

PrecodingMatrix mrt_precoder(const ChannelMatrix& h, const SystemConfig& cfg) {
  check_config_shapes(h, cfg);
  return project_power(scale_to_boundary(h.adjoint(), cfg), cfg);
}

PrecodingMatrix zf_precoder(const ChannelMatrix& h, const SystemConfig& cfg) {
  check_config_shapes(h, cfg);
  const Eigen::MatrixXcd gram = h * h.adjoint();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(gram);
  if (!lu.isInvertible())
    throw SingularMatrixError("zf_precoder: H H^H is singular (rank " +
                              std::to_string(lu.rank()) + " of " +
                              std::to_string(gram.rows()) + ")");
  const PrecodingMatrix pinv = h.adjoint() * lu.inverse();
  return project_power(scale_to_boundary(pinv, cfg), cfg);
}

double projected_objective(const ChannelMatrix& h, const PrecodingMatrix& v,
                           const SystemConfig& cfg) {
  return spectral_efficiency(h, project_power(v, cfg), cfg);
}

Eigen::MatrixXcd projected_gradient(const ChannelMatrix& h, const PrecodingMatrix& v,
                                    const SystemConfig& cfg) {
  check_config_shapes(h, cfg);
  check_pair_shapes(h, v);
  const Eigen::VectorXd powers = antenna_powers(v);
  Eigen::Index active_row = 0;
  const double max_power = powers.maxCoeff(&active_row);
  if (max_power <= cfg.power_budget) return se_gradient(h, v, cfg);

  // Beyond the boundary the objective is f(alpha * V) with
  // alpha = sqrt(p / m(V)) and m the power of the (first) maximal row.
  const double alpha = std::sqrt(cfg.power_budget / max_power);
  const PrecodingMatrix w = v * alpha;
  const Eigen::MatrixXcd grad_w = se_gradient(h, w, cfg);
  const double coupling = grad_w.cwiseProduct(v.conjugate()).sum().real();
  Eigen::MatrixXcd grad_v = alpha * grad_w;
  grad_v.row(active_row) -= (alpha * coupling / max_power) * v.row(active_row);
  return grad_v;
}

}  // namespace pforge
