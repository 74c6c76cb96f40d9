#ifndef PFORGE_NN_HPP
#define PFORGE_NN_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pforge/types.hpp"

namespace pforge {

// Minimal dense-network machinery: enough to express an encoder/decoder/prior
// trio of two-hidden-layer MLPs with Gaussian heads, trained by explicit
// backpropagation and Adam.

enum class Activation { ReLU };

/// Mean vector plus one shared log-variance; the output of every network.
/// log_variance is clamped to [-10, 10] before use.
struct GaussianHead {
  Eigen::VectorXd mean;
  double log_variance = 0.0;

  double variance() const { return std::exp(log_variance); }
  double stddev() const { return std::exp(0.5 * log_variance); }
};

constexpr double kLogVarClampLo = -10.0;
constexpr double kLogVarClampHi = 10.0;

struct NetworkSpec {
  int input_dim = 0;              // primary input; 0 for a pure prior network
  int condition_dim = 0;          // 0 = unconditioned
  std::vector<int> hidden = {256, 256};
  int mean_dim = 0;               // head output width (plus one log-variance)
  Activation activation = Activation::ReLU;
  bool skip_connections = true;   // condition re-appended to every hidden input

  /// Input width of hidden layer `i` (condition included where it applies).
  int layer_input_dim(size_t i) const;
  size_t num_layers() const { return hidden.size(); }
};

struct TensorDesc {
  std::string name;
  int rows = 0;
  int cols = 0;  // 1 for vectors
  size_t offset = 0;
};

/// All weights of one network in a single flat buffer, with a layout
/// descriptor that reconstructs every tensor shape.
class ParameterStore {
 public:
  ParameterStore() = default;
  explicit ParameterStore(std::vector<TensorDesc> layout);

  static ParameterStore for_spec(const NetworkSpec& spec);

  const std::vector<TensorDesc>& layout() const { return layout_; }
  size_t size() const { return data_.size(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  Eigen::Map<Eigen::MatrixXd> tensor(size_t i);
  Eigen::Map<const Eigen::MatrixXd> tensor(size_t i) const;
  Eigen::Map<Eigen::MatrixXd> tensor(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> tensor(const std::string& name) const;

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

 private:
  size_t index_of(const std::string& name) const;

  std::vector<TensorDesc> layout_;
  std::vector<double> data_;
};

/// Kaiming-uniform fan-in weights, zero biases; deterministic per seed.
void init_parameters(const NetworkSpec& spec, ParameterStore& params, uint64_t seed);

/// Activations recorded during forward, consumed by backward.
struct ForwardTrace {
  std::vector<Eigen::VectorXd> layer_inputs;  // post-concat input of each hidden layer
  std::vector<Eigen::VectorXd> preacts;       // pre-activation of each hidden layer
  Eigen::VectorXd last_hidden;
  double raw_log_variance = 0.0;              // before clamping
};

/// Runs the network. `input` must have spec.input_dim entries and `condition`
/// spec.condition_dim (pass an empty vector when the dim is 0).
GaussianHead nn_forward(const NetworkSpec& spec, const ParameterStore& params,
                        const Eigen::VectorXd& input, const Eigen::VectorXd& condition,
                        ForwardTrace* trace = nullptr);

struct HeadGrad {
  Eigen::VectorXd d_mean;
  double d_log_variance = 0.0;
};

/// Backpropagates the upstream head gradient; parameter gradients are
/// accumulated into `grads` (same layout as params) and the gradient with
/// respect to the primary input is returned. The log-variance path has zero
/// gradient where the clamp is active; ReLU uses subgradient 0 at 0.
Eigen::VectorXd nn_backward(const NetworkSpec& spec, const ParameterStore& params,
                            const ForwardTrace& trace, const HeadGrad& upstream,
                            ParameterStore& grads);

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step = 0;

  static AdamState for_size(size_t n);
};

/// One bias-corrected Adam update, in place.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamParams& hp);

// Checkpoint container: magic "PCNN", u32 version, u64 header length, JSON
// header (specs + tensor layouts), then every store's doubles back to back.
struct NamedNetwork {
  std::string name;
  NetworkSpec spec;
  ParameterStore params;
};

void save_checkpoint(const std::vector<NamedNetwork>& nets, const std::string& path);
std::vector<NamedNetwork> load_checkpoint(const std::string& path);

}  // namespace pforge

#endif  // PFORGE_NN_HPP
