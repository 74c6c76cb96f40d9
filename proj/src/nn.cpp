#include "pforge/nn.hpp"

#include <algorithm>
#include <cstring>

#include <nlohmann/json.hpp>

#include "pforge/binio.hpp"
#include "pforge/errors.hpp"
#include "pforge/rng.hpp"

namespace pforge {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'N', 'N'};
constexpr uint32_t kVersion = 1;

void validate_spec(const NetworkSpec& spec) {
  if (spec.hidden.empty()) throw ConfigError("network spec: need at least one hidden layer");
  for (int w : spec.hidden)
    if (w < 1) throw ConfigError("network spec: hidden widths must be positive");
  if (spec.mean_dim < 1) throw ConfigError("network spec: mean_dim must be positive");
  if (spec.input_dim < 0 || spec.condition_dim < 0)
    throw ConfigError("network spec: negative dimension");
  if (spec.input_dim == 0 && spec.condition_dim == 0)
    throw ConfigError("network spec: no input at all");
}

double clamp_log_variance(double raw) {
  return std::min(kLogVarClampHi, std::max(kLogVarClampLo, raw));
}

}  // namespace

int NetworkSpec::layer_input_dim(size_t i) const {
  const int base = i == 0 ? input_dim : hidden[i - 1];
  const bool conditioned = condition_dim > 0 && (i == 0 || skip_connections);
  return base + (conditioned ? condition_dim : 0);
}

ParameterStore::ParameterStore(std::vector<TensorDesc> layout) : layout_(std::move(layout)) {
  size_t total = 0;
  for (auto& t : layout_) {
    t.offset = total;
    total += static_cast<size_t>(t.rows) * t.cols;
  }
  data_.assign(total, 0.0);
}

ParameterStore ParameterStore::for_spec(const NetworkSpec& spec) {
  validate_spec(spec);
  std::vector<TensorDesc> layout;
  for (size_t i = 0; i < spec.num_layers(); ++i) {
    layout.push_back({"W" + std::to_string(i), spec.hidden[i], spec.layer_input_dim(i), 0});
    layout.push_back({"b" + std::to_string(i), spec.hidden[i], 1, 0});
  }
  const int last = spec.hidden.back();
  layout.push_back({"Wm", spec.mean_dim, last, 0});
  layout.push_back({"bm", spec.mean_dim, 1, 0});
  layout.push_back({"Wv", 1, last, 0});
  layout.push_back({"bv", 1, 1, 0});
  return ParameterStore(std::move(layout));
}

size_t ParameterStore::index_of(const std::string& name) const {
  for (size_t i = 0; i < layout_.size(); ++i)
    if (layout_[i].name == name) return i;
  throw ConfigError("parameter store: no tensor named " + name);
}

Eigen::Map<Eigen::MatrixXd> ParameterStore::tensor(size_t i) {
  const TensorDesc& t = layout_.at(i);
  return {data_.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<const Eigen::MatrixXd> ParameterStore::tensor(size_t i) const {
  const TensorDesc& t = layout_.at(i);
  return {data_.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<Eigen::MatrixXd> ParameterStore::tensor(const std::string& name) {
  return tensor(index_of(name));
}

Eigen::Map<const Eigen::MatrixXd> ParameterStore::tensor(const std::string& name) const {
  return tensor(index_of(name));
}

void init_parameters(const NetworkSpec& spec, ParameterStore& params, uint64_t seed) {
  validate_spec(spec);
  Rng base(seed);
  for (size_t i = 0; i < params.layout().size(); ++i) {
    const TensorDesc& desc = params.layout()[i];
    auto t = params.tensor(i);
    if (desc.name[0] == 'b') {
      t.setZero();
      continue;
    }
    Rng rng = base.derive(i);
    const double bound = std::sqrt(6.0 / t.cols());  // fan-in
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      for (Eigen::Index r = 0; r < t.rows(); ++r)
        t(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
  }
}

GaussianHead nn_forward(const NetworkSpec& spec, const ParameterStore& params,
                        const Eigen::VectorXd& input, const Eigen::VectorXd& condition,
                        ForwardTrace* trace) {
  validate_spec(spec);
  if (input.size() != spec.input_dim)
    throw DimensionError("forward: input length " + std::to_string(input.size()) +
                         ", spec expects " + std::to_string(spec.input_dim));
  if (condition.size() != spec.condition_dim)
    throw DimensionError("forward: condition length " + std::to_string(condition.size()) +
                         ", spec expects " + std::to_string(spec.condition_dim));
  if (!input.allFinite() || !condition.allFinite())
    throw ParameterError("forward: non-finite input");

  if (trace) {
    trace->layer_inputs.clear();
    trace->preacts.clear();
  }

  Eigen::VectorXd current = input;
  for (size_t i = 0; i < spec.num_layers(); ++i) {
    const bool conditioned = spec.condition_dim > 0 && (i == 0 || spec.skip_connections);
    Eigen::VectorXd layer_in(current.size() + (conditioned ? condition.size() : 0));
    layer_in.head(current.size()) = current;
    if (conditioned) layer_in.tail(condition.size()) = condition;

    const auto w = params.tensor("W" + std::to_string(i));
    const auto b = params.tensor("b" + std::to_string(i));
    Eigen::VectorXd pre = w * layer_in + b.col(0);
    if (trace) {
      trace->layer_inputs.push_back(std::move(layer_in));
      trace->preacts.push_back(pre);
    }
    current = pre.cwiseMax(0.0);  // ReLU
  }

  GaussianHead head;
  head.mean = params.tensor("Wm") * current + params.tensor("bm").col(0);
  const double raw_lv =
      (params.tensor("Wv") * current)(0, 0) + params.tensor("bv")(0, 0);
  head.log_variance = clamp_log_variance(raw_lv);
  if (trace) {
    trace->last_hidden = std::move(current);
    trace->raw_log_variance = raw_lv;
  }
  return head;
}

Eigen::VectorXd nn_backward(const NetworkSpec& spec, const ParameterStore& params,
                            const ForwardTrace& trace, const HeadGrad& upstream,
                            ParameterStore& grads) {
  if (grads.size() != params.size())
    throw DimensionError("backward: gradient store size mismatch");
  if (upstream.d_mean.size() != spec.mean_dim)
    throw DimensionError("backward: upstream mean gradient has length " +
                         std::to_string(upstream.d_mean.size()) + ", expected " +
                         std::to_string(spec.mean_dim));
  if (trace.preacts.size() != spec.num_layers())
    throw DimensionError("backward: trace does not match spec");

  // Clamped log-variance passes no gradient.
  const bool clamped = trace.raw_log_variance < kLogVarClampLo ||
                       trace.raw_log_variance > kLogVarClampHi;
  const double d_lv = clamped ? 0.0 : upstream.d_log_variance;

  grads.tensor("Wm") += upstream.d_mean * trace.last_hidden.transpose();
  grads.tensor("bm").col(0) += upstream.d_mean;
  grads.tensor("Wv") += d_lv * trace.last_hidden.transpose();
  grads.tensor("bv")(0, 0) += d_lv;

  Eigen::VectorXd d_hidden = params.tensor("Wm").transpose() * upstream.d_mean +
                             params.tensor("Wv").transpose() * d_lv;

  for (size_t i = spec.num_layers(); i-- > 0;) {
    const Eigen::VectorXd d_pre =
        (trace.preacts[i].array() > 0.0).select(d_hidden, 0.0);
    grads.tensor("W" + std::to_string(i)) += d_pre * trace.layer_inputs[i].transpose();
    grads.tensor("b" + std::to_string(i)).col(0) += d_pre;

    const Eigen::VectorXd d_full =
        params.tensor("W" + std::to_string(i)).transpose() * d_pre;
    const int base = i == 0 ? spec.input_dim : spec.hidden[i - 1];
    d_hidden = d_full.head(base);  // condition slice carries no gradient we keep
  }
  return d_hidden;
}

AdamState AdamState::for_size(size_t n) {
  AdamState s;
  s.first_moment = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.second_moment = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  return s;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamParams& hp) {
  const Eigen::Index n = static_cast<Eigen::Index>(params.size());
  if (grads.size() != params.size() || state.first_moment.size() != n ||
      state.second_moment.size() != n)
    throw DimensionError("adam_step: parameter/gradient/state length mismatch");

  ++state.step;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));

  Eigen::Map<Eigen::VectorXd> p(params.data(), n);
  Eigen::Map<const Eigen::VectorXd> g(grads.data(), n);
  state.first_moment = hp.beta1 * state.first_moment + (1.0 - hp.beta1) * g;
  state.second_moment =
      hp.beta2 * state.second_moment + (1.0 - hp.beta2) * g.cwiseProduct(g);

  p -= (hp.learning_rate * (state.first_moment / bc1).array() /
        ((state.second_moment / bc2).array().sqrt() + hp.epsilon))
           .matrix();
}

namespace {

nlohmann::json spec_to_json(const NetworkSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"condition_dim", spec.condition_dim},
          {"hidden", spec.hidden},
          {"mean_dim", spec.mean_dim},
          {"activation", "relu"},
          {"skip_connections", spec.skip_connections}};
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.condition_dim = j.at("condition_dim").get<int>();
  spec.hidden = j.at("hidden").get<std::vector<int>>();
  spec.mean_dim = j.at("mean_dim").get<int>();
  if (j.at("activation").get<std::string>() != "relu")
    throw UnsupportedVersionError("checkpoint: unknown activation " +
                                  j.at("activation").get<std::string>());
  spec.skip_connections = j.at("skip_connections").get<bool>();
  return spec;
}

}  // namespace

void save_checkpoint(const std::vector<NamedNetwork>& nets, const std::string& path) {
  nlohmann::json header;
  header["nets"] = nlohmann::json::array();
  for (const auto& net : nets) {
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : net.params.layout())
      tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    header["nets"].push_back({{"name", net.name},
                              {"spec", spec_to_json(net.spec)},
                              {"tensors", tensors},
                              {"param_count", net.params.size()}});
  }
  const std::string header_str = header.dump();

  BinWriter out(path);
  out.bytes(kMagic, 4);
  out.u32(kVersion);
  out.u64(header_str.size());
  out.string_block(header_str);
  for (const auto& net : nets)
    for (double v : net.params.raw()) out.f64(v);
  out.close();
}

std::vector<NamedNetwork> load_checkpoint(const std::string& path) {
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
  const uint64_t header_len = in.u64();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.string_block(header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": bad checkpoint header: " + e.what());
  }

  std::vector<NamedNetwork> nets;
  for (const auto& jnet : header.at("nets")) {
    NamedNetwork net;
    net.name = jnet.at("name").get<std::string>();
    net.spec = spec_from_json(jnet.at("spec"));
    std::vector<TensorDesc> layout;
    for (const auto& jt : jnet.at("tensors"))
      layout.push_back({jt.at("name").get<std::string>(), jt.at("rows").get<int>(),
                        jt.at("cols").get<int>(), 0});
    net.params = ParameterStore(std::move(layout));
    if (net.params.size() != jnet.at("param_count").get<size_t>())
      throw FormatError(path + ": tensor shapes disagree with param_count for net " +
                        net.name);
    for (double& v : net.params.raw()) v = in.f64();
    nets.push_back(std::move(net));
  }
  return nets;
}

}  // namespace pforge
