#include "pforge/vae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "pforge/pack.hpp"
#include "pforge/se.hpp"

namespace pforge {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;  // ln(2*pi)

NetworkSpec encoder_spec_for(int data_dim, int latent_dim, const std::vector<int>& hidden,
                             int condition_dim) {
  NetworkSpec spec;
  spec.input_dim = data_dim;
  spec.condition_dim = condition_dim;
  spec.hidden = hidden;
  spec.mean_dim = latent_dim;
  return spec;
}

NetworkSpec decoder_spec_for(int data_dim, int latent_dim, const std::vector<int>& hidden,
                             int condition_dim) {
  NetworkSpec spec;
  spec.input_dim = latent_dim;
  spec.condition_dim = condition_dim;
  spec.hidden = hidden;
  spec.mean_dim = data_dim;
  return spec;
}

NetworkSpec prior_spec_for(int data_dim, int latent_dim, const std::vector<int>& hidden) {
  NetworkSpec spec;
  spec.input_dim = 0;  // the condition is the sole input
  spec.condition_dim = data_dim;
  spec.hidden = hidden;
  spec.mean_dim = latent_dim;
  return spec;
}

const Eigen::VectorXd kEmpty = Eigen::VectorXd();

}  // namespace

VaeModel make_vae(int data_dim, int latent_dim, const std::vector<int>& hidden,
                  uint64_t seed) {
  VaeModel model;
  model.encoder_spec = encoder_spec_for(data_dim, latent_dim, hidden, 0);
  model.decoder_spec = decoder_spec_for(data_dim, latent_dim, hidden, 0);
  model.encoder = ParameterStore::for_spec(model.encoder_spec);
  model.decoder = ParameterStore::for_spec(model.decoder_spec);
  init_parameters(model.encoder_spec, model.encoder, derive_seed(seed, 1));
  init_parameters(model.decoder_spec, model.decoder, derive_seed(seed, 2));
  return model;
}

CvaeModel make_cvae(int data_dim, int latent_dim, const std::vector<int>& hidden,
                    uint64_t seed) {
  CvaeModel model;
  model.encoder_spec = encoder_spec_for(data_dim, latent_dim, hidden, data_dim);
  model.decoder_spec = decoder_spec_for(data_dim, latent_dim, hidden, data_dim);
  model.prior_spec = prior_spec_for(data_dim, latent_dim, hidden);
  model.encoder = ParameterStore::for_spec(model.encoder_spec);
  model.decoder = ParameterStore::for_spec(model.decoder_spec);
  model.prior = ParameterStore::for_spec(model.prior_spec);
  init_parameters(model.encoder_spec, model.encoder, derive_seed(seed, 1));
  init_parameters(model.decoder_spec, model.decoder, derive_seed(seed, 2));
  init_parameters(model.prior_spec, model.prior, derive_seed(seed, 3));
  return model;
}

double kl_to_standard(const GaussianHead& head) {
  const double d = static_cast<double>(head.mean.size());
  const double s2 = head.variance();
  return 0.5 * (head.mean.squaredNorm() + d * (s2 - 1.0 - head.log_variance));
}

double kl_gaussians(const GaussianHead& q, const GaussianHead& p) {
  if (q.mean.size() != p.mean.size())
    throw DimensionError("kl_gaussians: head dimensions differ, " +
                         std::to_string(q.mean.size()) + " vs " +
                         std::to_string(p.mean.size()));
  const double d = static_cast<double>(q.mean.size());
  const double ratio = std::exp(q.log_variance - p.log_variance);
  const double shift = (q.mean - p.mean).squaredNorm() / p.variance();
  return 0.5 * (d * ratio + shift - d + d * (p.log_variance - q.log_variance));
}

Eigen::VectorXd reparameterize(const GaussianHead& head, const Eigen::VectorXd& noise) {
  if (noise.size() != head.mean.size())
    throw DimensionError("reparameterize: noise length " + std::to_string(noise.size()) +
                         " does not match mean length " + std::to_string(head.mean.size()));
  return head.mean + noise * head.stddev();
}

double gaussian_log_density(const Eigen::VectorXd& x, const GaussianHead& head) {
  if (x.size() != head.mean.size())
    throw DimensionError("gaussian_log_density: length mismatch");
  const double d = static_cast<double>(x.size());
  const double s2 = head.variance();
  return -0.5 * d * (kLn2Pi + head.log_variance) -
         (x - head.mean).squaredNorm() / (2.0 * s2);
}

namespace {

struct DecoderPass {
  GaussianHead head;
  double reconstruction = 0.0;
  HeadGrad upstream;  // d recon / d head
};

DecoderPass run_decoder(const NetworkSpec& spec, const ParameterStore& params,
                        const Eigen::VectorXd& z, const Eigen::VectorXd& cond,
                        const Eigen::VectorXd& w, ForwardTrace* trace, bool want_grads) {
  DecoderPass pass;
  pass.head = nn_forward(spec, params, z, cond, trace);
  pass.reconstruction = gaussian_log_density(w, pass.head);
  if (want_grads) {
    const double s2 = pass.head.variance();
    pass.upstream.d_mean = (w - pass.head.mean) / s2;
    pass.upstream.d_log_variance =
        -0.5 * static_cast<double>(w.size()) +
        (w - pass.head.mean).squaredNorm() / (2.0 * s2);
  }
  return pass;
}

}  // namespace

VlbTerms vae_sample_vlb(const VaeModel& model, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& noise, ParameterStore* encoder_grads,
                        ParameterStore* decoder_grads, double kl_weight) {
  const bool want_grads = encoder_grads != nullptr && decoder_grads != nullptr;

  ForwardTrace enc_trace, dec_trace;
  const GaussianHead enc_head =
      nn_forward(model.encoder_spec, model.encoder, w, kEmpty,
                 want_grads ? &enc_trace : nullptr);
  const Eigen::VectorXd z = reparameterize(enc_head, noise);
  const DecoderPass dec =
      run_decoder(model.decoder_spec, model.decoder, z, kEmpty, w,
                  want_grads ? &dec_trace : nullptr, want_grads);

  VlbTerms terms;
  terms.reconstruction = dec.reconstruction;
  terms.kl = kl_to_standard(enc_head);
  terms.vlb = terms.reconstruction - terms.kl;
  if (!want_grads) return terms;

  const Eigen::VectorXd d_z =
      nn_backward(model.decoder_spec, model.decoder, dec_trace, dec.upstream,
                  *decoder_grads);

  const double d = static_cast<double>(enc_head.mean.size());
  HeadGrad enc_up;
  enc_up.d_mean = d_z - kl_weight * enc_head.mean;
  enc_up.d_log_variance = 0.5 * enc_head.stddev() * d_z.dot(noise) -
                          kl_weight * 0.5 * d * (enc_head.variance() - 1.0);
  nn_backward(model.encoder_spec, model.encoder, enc_trace, enc_up, *encoder_grads);
  return terms;
}

VlbTerms cvae_sample_vlb(const CvaeModel& model, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& h, const Eigen::VectorXd& noise,
                         ParameterStore* encoder_grads, ParameterStore* decoder_grads,
                         ParameterStore* prior_grads, double kl_weight) {
  const bool want_grads =
      encoder_grads != nullptr && decoder_grads != nullptr && prior_grads != nullptr;

  ForwardTrace enc_trace, dec_trace, prior_trace;
  const GaussianHead enc_head =
      nn_forward(model.encoder_spec, model.encoder, w, h,
                 want_grads ? &enc_trace : nullptr);
  const GaussianHead prior_head =
      nn_forward(model.prior_spec, model.prior, kEmpty, h,
                 want_grads ? &prior_trace : nullptr);
  const Eigen::VectorXd z = reparameterize(enc_head, noise);
  const DecoderPass dec =
      run_decoder(model.decoder_spec, model.decoder, z, h,
                  w, want_grads ? &dec_trace : nullptr, want_grads);

  VlbTerms terms;
  terms.reconstruction = dec.reconstruction;
  terms.kl = kl_gaussians(enc_head, prior_head);
  terms.vlb = terms.reconstruction - terms.kl;
  if (!want_grads) return terms;

  const Eigen::VectorXd d_z =
      nn_backward(model.decoder_spec, model.decoder, dec_trace, dec.upstream,
                  *decoder_grads);

  const double d = static_cast<double>(enc_head.mean.size());
  const double var_ratio = std::exp(enc_head.log_variance - prior_head.log_variance);
  const Eigen::VectorXd mean_diff =
      (enc_head.mean - prior_head.mean) / prior_head.variance();

  HeadGrad enc_up;
  enc_up.d_mean = d_z - kl_weight * mean_diff;
  enc_up.d_log_variance = 0.5 * enc_head.stddev() * d_z.dot(noise) -
                          kl_weight * 0.5 * d * (var_ratio - 1.0);
  nn_backward(model.encoder_spec, model.encoder, enc_trace, enc_up, *encoder_grads);

  HeadGrad prior_up;
  prior_up.d_mean = kl_weight * mean_diff;
  prior_up.d_log_variance =
      kl_weight * 0.5 *
      (d * var_ratio +
       (enc_head.mean - prior_head.mean).squaredNorm() / prior_head.variance() - d);
  nn_backward(model.prior_spec, model.prior, prior_trace, prior_up, *prior_grads);
  return terms;
}

namespace {

Eigen::VectorXd draw_noise(Rng& rng, int dim) {
  Eigen::VectorXd eps(dim);
  for (int i = 0; i < dim; ++i) eps[i] = rng.normal();
  return eps;
}

VlbTerms batch_mean(const std::vector<VlbTerms>& terms) {
  VlbTerms mean;
  for (const auto& t : terms) {
    mean.vlb += t.vlb;
    mean.reconstruction += t.reconstruction;
    mean.kl += t.kl;
  }
  const double n = static_cast<double>(terms.size());
  if (n > 0) {
    mean.vlb /= n;
    mean.reconstruction /= n;
    mean.kl /= n;
  }
  return mean;
}

}  // namespace

VlbTerms vlb_vae(const VaeModel& model, const std::vector<Eigen::VectorXd>& w_batch,
                 Rng& noise_rng) {
  std::vector<VlbTerms> terms;
  terms.reserve(w_batch.size());
  for (const auto& w : w_batch)
    terms.push_back(vae_sample_vlb(model, w, draw_noise(noise_rng, model.latent_dim()),
                                   nullptr, nullptr));
  return batch_mean(terms);
}

VlbTerms vlb_cvae(const CvaeModel& model, const std::vector<Eigen::VectorXd>& w_batch,
                  const std::vector<Eigen::VectorXd>& h_batch, Rng& noise_rng) {
  if (w_batch.size() != h_batch.size())
    throw DimensionError("vlb_cvae: batch sizes differ");
  std::vector<VlbTerms> terms;
  terms.reserve(w_batch.size());
  for (size_t i = 0; i < w_batch.size(); ++i)
    terms.push_back(cvae_sample_vlb(model, w_batch[i], h_batch[i],
                                    draw_noise(noise_rng, model.latent_dim()), nullptr,
                                    nullptr, nullptr));
  return batch_mean(terms);
}

namespace {

// Shared training loop; the model-specific part is the per-sample closure.
struct TrainContext {
  const PrecodingDataset& dataset;
  const TrainConfig& cfg;
  int data_dim;
  int latent_dim;
};

void check_train_dims(const TrainContext& ctx) {
  const SystemConfig& sys = ctx.dataset.config();
  const int expected = 2 * sys.num_antennas * sys.num_users;
  if (ctx.data_dim != expected)
    throw ConfigError("train: model data dim " + std::to_string(ctx.data_dim) +
                      " does not match dataset dim " + std::to_string(expected));
  if (ctx.dataset.size() == 0) throw ConfigError("train: empty dataset");
  if (ctx.cfg.epochs < 1 || ctx.cfg.batch_size < 1)
    throw ConfigError("train: epochs and batch_size must be positive");
}

double kl_weight_for_epoch(const TrainConfig& cfg, int epoch) {
  if (!cfg.kl_warmup) return 1.0;
  const double ramp = std::max(1.0, cfg.warmup_fraction * cfg.epochs);
  return std::min(1.0, (epoch + 1) / ramp);
}

std::vector<Eigen::VectorXd> packed_channels(const PrecodingDataset& dataset) {
  std::vector<Eigen::VectorXd> packed;
  packed.reserve(dataset.channels().size());
  for (const auto& h : dataset.channels()) packed.push_back(pack_channel(h));
  return packed;
}

}  // namespace

std::vector<EpochMetrics> train_vae(VaeModel& model, const PrecodingDataset& dataset,
                                    const TrainConfig& cfg) {
  TrainContext ctx{dataset, cfg, model.data_dim(), model.latent_dim()};
  check_train_dims(ctx);

  std::vector<size_t> train_idx, val_idx;
  for (size_t i = 0; i < dataset.size(); ++i)
    (dataset.is_validation(i) ? val_idx : train_idx).push_back(i);
  if (train_idx.empty()) throw ConfigError("train: no training samples after split");

  ParameterStore enc_grads = model.encoder;
  ParameterStore dec_grads = model.decoder;
  AdamState enc_state = AdamState::for_size(model.encoder.size());
  AdamState dec_state = AdamState::for_size(model.decoder.size());

  const auto& samples = dataset.samples();
  std::vector<EpochMetrics> log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = Rng(cfg.seed).derive(1000 + epoch);
    Rng noise_rng = Rng(cfg.seed).derive(2000 + epoch);
    const double beta = kl_weight_for_epoch(cfg, epoch);

    std::vector<size_t> order = train_idx;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    EpochMetrics metrics;
    metrics.epoch = epoch;
    size_t seen = 0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      enc_grads.set_zero();
      dec_grads.set_zero();
      for (size_t i = begin; i < end; ++i) {
        const auto& sample = samples[order[i]].second;
        const Eigen::VectorXd eps = draw_noise(noise_rng, model.latent_dim());
        const VlbTerms t =
            vae_sample_vlb(model, sample.w_vec, eps, &enc_grads, &dec_grads, beta);
        if (!std::isfinite(t.vlb))
          throw NumericError("train_vae: non-finite VLB at epoch " +
                             std::to_string(epoch) + ", sample " +
                             std::to_string(order[i]) + " (recon=" +
                             std::to_string(t.reconstruction) + ", kl=" +
                             std::to_string(t.kl) + ")");
        metrics.vlb += t.vlb;
        metrics.reconstruction += t.reconstruction;
        metrics.kl += t.kl;
        ++seen;
      }
      const double scale = -1.0 / static_cast<double>(end - begin);
      for (double& g : enc_grads.raw()) g *= scale;
      for (double& g : dec_grads.raw()) g *= scale;
      adam_step(model.encoder.raw(), enc_grads.raw(), enc_state, cfg.adam);
      adam_step(model.decoder.raw(), dec_grads.raw(), dec_state, cfg.adam);
    }
    metrics.vlb /= seen;
    metrics.reconstruction /= seen;
    metrics.kl /= seen;

    // Validation reconstruction SE under the projection used at evaluation.
    if (val_idx.empty()) {
      metrics.val_recon_se = std::numeric_limits<double>::quiet_NaN();
    } else {
      Rng val_rng = Rng(cfg.seed).derive(3000 + epoch);
      const SystemConfig& sys = dataset.config();
      double se_sum = 0.0;
      for (size_t i : val_idx) {
        const auto& [channel_index, sample] = samples[i];
        const PrecodingMatrix w =
            unpack_precoder(sample.w_vec, sys.num_antennas, sys.num_users);
        const PrecodingMatrix rec =
            reconstruct_vae(model, w, val_rng.next_u64(), sys);
        se_sum += spectral_efficiency(dataset.channels()[channel_index], rec, sys);
      }
      metrics.val_recon_se = se_sum / static_cast<double>(val_idx.size());
    }
    log.push_back(metrics);
  }
  return log;
}

std::vector<EpochMetrics> train_cvae(CvaeModel& model, const PrecodingDataset& dataset,
                                     const TrainConfig& cfg) {
  TrainContext ctx{dataset, cfg, model.data_dim(), model.latent_dim()};
  check_train_dims(ctx);

  std::vector<size_t> train_idx, val_idx;
  for (size_t i = 0; i < dataset.size(); ++i)
    (dataset.is_validation(i) ? val_idx : train_idx).push_back(i);
  if (train_idx.empty()) throw ConfigError("train: no training samples after split");

  const std::vector<Eigen::VectorXd> h_vecs = packed_channels(dataset);

  ParameterStore enc_grads = model.encoder;
  ParameterStore dec_grads = model.decoder;
  ParameterStore prior_grads = model.prior;
  AdamState enc_state = AdamState::for_size(model.encoder.size());
  AdamState dec_state = AdamState::for_size(model.decoder.size());
  AdamState prior_state = AdamState::for_size(model.prior.size());

  const auto& samples = dataset.samples();
  std::vector<EpochMetrics> log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = Rng(cfg.seed).derive(1000 + epoch);
    Rng noise_rng = Rng(cfg.seed).derive(2000 + epoch);
    const double beta = kl_weight_for_epoch(cfg, epoch);

    std::vector<size_t> order = train_idx;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    EpochMetrics metrics;
    metrics.epoch = epoch;
    size_t seen = 0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      enc_grads.set_zero();
      dec_grads.set_zero();
      prior_grads.set_zero();
      for (size_t i = begin; i < end; ++i) {
        const auto& [channel_index, sample] = samples[order[i]];
        const Eigen::VectorXd eps = draw_noise(noise_rng, model.latent_dim());
        const VlbTerms t =
            cvae_sample_vlb(model, sample.w_vec, h_vecs[channel_index], eps, &enc_grads,
                            &dec_grads, &prior_grads, beta);
        if (!std::isfinite(t.vlb))
          throw NumericError("train_cvae: non-finite VLB at epoch " +
                             std::to_string(epoch) + ", sample " +
                             std::to_string(order[i]) + " (recon=" +
                             std::to_string(t.reconstruction) + ", kl=" +
                             std::to_string(t.kl) + ")");
        metrics.vlb += t.vlb;
        metrics.reconstruction += t.reconstruction;
        metrics.kl += t.kl;
        ++seen;
      }
      const double scale = -1.0 / static_cast<double>(end - begin);
      for (double& g : enc_grads.raw()) g *= scale;
      for (double& g : dec_grads.raw()) g *= scale;
      for (double& g : prior_grads.raw()) g *= scale;
      adam_step(model.encoder.raw(), enc_grads.raw(), enc_state, cfg.adam);
      adam_step(model.decoder.raw(), dec_grads.raw(), dec_state, cfg.adam);
      adam_step(model.prior.raw(), prior_grads.raw(), prior_state, cfg.adam);
    }
    metrics.vlb /= seen;
    metrics.reconstruction /= seen;
    metrics.kl /= seen;

    if (val_idx.empty()) {
      metrics.val_recon_se = std::numeric_limits<double>::quiet_NaN();
    } else {
      Rng val_rng = Rng(cfg.seed).derive(3000 + epoch);
      const SystemConfig& sys = dataset.config();
      double se_sum = 0.0;
      for (size_t i : val_idx) {
        const auto& [channel_index, sample] = samples[i];
        const PrecodingMatrix w =
            unpack_precoder(sample.w_vec, sys.num_antennas, sys.num_users);
        const PrecodingMatrix rec = reconstruct_cvae(
            model, w, dataset.channels()[channel_index], val_rng.next_u64(), sys);
        se_sum += spectral_efficiency(dataset.channels()[channel_index], rec, sys);
      }
      metrics.val_recon_se = se_sum / static_cast<double>(val_idx.size());
    }
    log.push_back(metrics);
  }
  return log;
}

namespace {

PrecodingMatrix to_precoder(const Eigen::VectorXd& mean, const SystemConfig& cfg,
                            bool project) {
  const PrecodingMatrix w = unpack_precoder(mean, cfg.num_antennas, cfg.num_users);
  return project ? project_power(w, cfg) : w;
}

void check_model_dims(int data_dim, const SystemConfig& cfg) {
  if (data_dim != 2 * cfg.num_antennas * cfg.num_users)
    throw ConfigError("model data dim " + std::to_string(data_dim) +
                      " does not match system " + std::to_string(cfg.num_users) + "x" +
                      std::to_string(cfg.num_antennas));
}

}  // namespace

std::vector<PrecodingMatrix> sample_vae(const VaeModel& model, int num, uint64_t seed,
                                        const SystemConfig& cfg, bool project) {
  if (num < 0) throw ParameterError("sample_vae: num must be >= 0");
  check_model_dims(model.data_dim(), cfg);
  Rng rng(seed);
  std::vector<PrecodingMatrix> out;
  out.reserve(static_cast<size_t>(num));
  for (int i = 0; i < num; ++i) {
    const Eigen::VectorXd z = draw_noise(rng, model.latent_dim());
    const GaussianHead head = nn_forward(model.decoder_spec, model.decoder, z, kEmpty);
    out.push_back(to_precoder(head.mean, cfg, project));
  }
  return out;
}

std::vector<PrecodingMatrix> sample_cvae(const CvaeModel& model, const ChannelMatrix& h,
                                         int num, uint64_t seed, const SystemConfig& cfg,
                                         bool project) {
  if (num < 0) throw ParameterError("sample_cvae: num must be >= 0");
  check_model_dims(model.data_dim(), cfg);
  check_config_shapes(h, cfg);
  const Eigen::VectorXd h_vec = pack_channel(h);
  Rng rng(seed);
  std::vector<PrecodingMatrix> out;
  out.reserve(static_cast<size_t>(num));
  for (int i = 0; i < num; ++i) {
    const GaussianHead prior_head =
        nn_forward(model.prior_spec, model.prior, kEmpty, h_vec);
    const Eigen::VectorXd z =
        reparameterize(prior_head, draw_noise(rng, model.latent_dim()));
    const GaussianHead head = nn_forward(model.decoder_spec, model.decoder, z, h_vec);
    out.push_back(to_precoder(head.mean, cfg, project));
  }
  return out;
}

PrecodingMatrix reconstruct_vae(const VaeModel& model, const PrecodingMatrix& w,
                                uint64_t seed, const SystemConfig& cfg, bool project) {
  check_model_dims(model.data_dim(), cfg);
  Rng rng(seed);
  const GaussianHead enc_head =
      nn_forward(model.encoder_spec, model.encoder, pack_precoder(w), kEmpty);
  const Eigen::VectorXd z =
      reparameterize(enc_head, draw_noise(rng, model.latent_dim()));
  const GaussianHead dec_head = nn_forward(model.decoder_spec, model.decoder, z, kEmpty);
  return to_precoder(dec_head.mean, cfg, project);
}

PrecodingMatrix reconstruct_cvae(const CvaeModel& model, const PrecodingMatrix& w,
                                 const ChannelMatrix& h, uint64_t seed,
                                 const SystemConfig& cfg, bool project) {
  check_model_dims(model.data_dim(), cfg);
  check_config_shapes(h, cfg);
  const Eigen::VectorXd h_vec = pack_channel(h);
  Rng rng(seed);
  const GaussianHead enc_head =
      nn_forward(model.encoder_spec, model.encoder, pack_precoder(w), h_vec);
  const Eigen::VectorXd z =
      reparameterize(enc_head, draw_noise(rng, model.latent_dim()));
  const GaussianHead dec_head = nn_forward(model.decoder_spec, model.decoder, z, h_vec);
  return to_precoder(dec_head.mean, cfg, project);
}

namespace {

nlohmann::json sidecar_for(ModelKind kind, int data_dim, int latent_dim,
                           const std::vector<int>& hidden,
                           const std::string& training_meta_json) {
  nlohmann::json j;
  j["kind"] = kind == ModelKind::kVae ? "vae" : "cvae";
  j["data_dim"] = data_dim;
  j["latent_dim"] = latent_dim;
  j["hidden"] = hidden;
  j["training"] = nlohmann::json::parse(training_meta_json);
  return j;
}

void write_sidecar(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

nlohmann::json read_sidecar(const std::string& checkpoint_path) {
  const std::string path = checkpoint_path + ".json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint sidecar: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": bad sidecar JSON: " + e.what());
  }
}

}  // namespace

void save_vae_checkpoint(const VaeModel& model, const std::string& path,
                         const std::string& training_meta_json) {
  save_checkpoint({{"encoder", model.encoder_spec, model.encoder},
                   {"decoder", model.decoder_spec, model.decoder}},
                  path);
  write_sidecar(sidecar_for(ModelKind::kVae, model.data_dim(), model.latent_dim(),
                            model.encoder_spec.hidden, training_meta_json),
                path + ".json");
}

void save_cvae_checkpoint(const CvaeModel& model, const std::string& path,
                          const std::string& training_meta_json) {
  save_checkpoint({{"encoder", model.encoder_spec, model.encoder},
                   {"decoder", model.decoder_spec, model.decoder},
                   {"prior", model.prior_spec, model.prior}},
                  path);
  write_sidecar(sidecar_for(ModelKind::kCvae, model.data_dim(), model.latent_dim(),
                            model.encoder_spec.hidden, training_meta_json),
                path + ".json");
}

ModelKind checkpoint_kind(const std::string& path) {
  const std::string kind = read_sidecar(path).at("kind").get<std::string>();
  if (kind == "vae") return ModelKind::kVae;
  if (kind == "cvae") return ModelKind::kCvae;
  throw FormatError(path + ".json: unknown model kind '" + kind + "'");
}

VaeModel load_vae_checkpoint(const std::string& path) {
  auto nets = load_checkpoint(path);
  if (nets.size() != 2 || nets[0].name != "encoder" || nets[1].name != "decoder")
    throw FormatError(path + ": expected encoder+decoder networks for a vae");
  VaeModel model;
  model.encoder_spec = nets[0].spec;
  model.encoder = std::move(nets[0].params);
  model.decoder_spec = nets[1].spec;
  model.decoder = std::move(nets[1].params);
  return model;
}

CvaeModel load_cvae_checkpoint(const std::string& path) {
  auto nets = load_checkpoint(path);
  if (nets.size() != 3 || nets[0].name != "encoder" || nets[1].name != "decoder" ||
      nets[2].name != "prior")
    throw FormatError(path + ": expected encoder+decoder+prior networks for a cvae");
  CvaeModel model;
  model.encoder_spec = nets[0].spec;
  model.encoder = std::move(nets[0].params);
  model.decoder_spec = nets[1].spec;
  model.decoder = std::move(nets[1].params);
  model.prior_spec = nets[2].spec;
  model.prior = std::move(nets[2].params);
  return model;
}

}  // namespace pforge
