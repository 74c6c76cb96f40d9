#ifndef PFORGE_VAE_HPP
#define PFORGE_VAE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pforge/dataset.hpp"
#include "pforge/nn.hpp"
#include "pforge/rng.hpp"
#include "pforge/types.hpp"

namespace pforge {

// VAE and CVAE over packed precoders. Encoder maps a packed precoder to a
// latent Gaussian, the decoder maps a latent code back to data space; the
// CVAE conditions all networks on the packed channel and learns its prior
// from it. Every head is a mean vector plus one shared variance.

struct VaeModel {
  NetworkSpec encoder_spec, decoder_spec;
  ParameterStore encoder, decoder;

  int data_dim() const { return decoder_spec.mean_dim; }
  int latent_dim() const { return encoder_spec.mean_dim; }
};

struct CvaeModel {
  NetworkSpec encoder_spec, decoder_spec, prior_spec;
  ParameterStore encoder, decoder, prior;

  int data_dim() const { return decoder_spec.mean_dim; }
  int latent_dim() const { return encoder_spec.mean_dim; }
};

VaeModel make_vae(int data_dim, int latent_dim, const std::vector<int>& hidden,
                  uint64_t seed);
CvaeModel make_cvae(int data_dim, int latent_dim, const std::vector<int>& hidden,
                    uint64_t seed);

/// KL(N(mu, s2 I) || N(0, I)) = 1/2 (||mu||^2 + d s2 - d - d log s2).
double kl_to_standard(const GaussianHead& head);

/// KL between two shared-variance Gaussians of equal dimension.
double kl_gaussians(const GaussianHead& q, const GaussianHead& p);

/// z = mean + noise * stddev.
Eigen::VectorXd reparameterize(const GaussianHead& head, const Eigen::VectorXd& noise);

/// log N(x | mean, s2 I) including the normalization constant.
double gaussian_log_density(const Eigen::VectorXd& x, const GaussianHead& head);

struct VlbTerms {
  double vlb = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

// Per-sample VLB with caller-supplied latent noise (one Monte-Carlo draw).
// When gradient stores are given, d(VLB)/d(params) is accumulated into them;
// kl_weight scales only the KL part of the gradient (warm-up support).
VlbTerms vae_sample_vlb(const VaeModel& model, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& noise, ParameterStore* encoder_grads,
                        ParameterStore* decoder_grads, double kl_weight = 1.0);
VlbTerms cvae_sample_vlb(const CvaeModel& model, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& h, const Eigen::VectorXd& noise,
                         ParameterStore* encoder_grads, ParameterStore* decoder_grads,
                         ParameterStore* prior_grads, double kl_weight = 1.0);

/// Batch-mean VLB; one fresh latent draw per sample.
VlbTerms vlb_vae(const VaeModel& model, const std::vector<Eigen::VectorXd>& w_batch,
                 Rng& noise_rng);
VlbTerms vlb_cvae(const CvaeModel& model, const std::vector<Eigen::VectorXd>& w_batch,
                  const std::vector<Eigen::VectorXd>& h_batch, Rng& noise_rng);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 128;
  AdamParams adam;
  uint64_t seed = 0;
  bool kl_warmup = false;        // linear KL ramp over the first warmup_fraction
  double warmup_fraction = 0.1;
};

struct EpochMetrics {
  int epoch = 0;
  double vlb = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  double val_recon_se = 0.0;  // NaN when the dataset has no validation slice
};

std::vector<EpochMetrics> train_vae(VaeModel& model, const PrecodingDataset& dataset,
                                    const TrainConfig& cfg);
std::vector<EpochMetrics> train_cvae(CvaeModel& model, const PrecodingDataset& dataset,
                                     const TrainConfig& cfg);

// Sampling and reconstruction. The decoder MEAN is the emitted precoder; the
// optional projection (on by default) makes outputs power-feasible before any
// SE evaluation.
std::vector<PrecodingMatrix> sample_vae(const VaeModel& model, int num, uint64_t seed,
                                        const SystemConfig& cfg, bool project = true);
std::vector<PrecodingMatrix> sample_cvae(const CvaeModel& model, const ChannelMatrix& h,
                                         int num, uint64_t seed, const SystemConfig& cfg,
                                         bool project = true);
PrecodingMatrix reconstruct_vae(const VaeModel& model, const PrecodingMatrix& w,
                                uint64_t seed, const SystemConfig& cfg,
                                bool project = true);
PrecodingMatrix reconstruct_cvae(const CvaeModel& model, const PrecodingMatrix& w,
                                 const ChannelMatrix& h, uint64_t seed,
                                 const SystemConfig& cfg, bool project = true);

// Checkpoints: PCNN parameter block plus a JSON sidecar at <path>.json naming
// the model kind, dims, and training metadata.
enum class ModelKind { kVae, kCvae };

void save_vae_checkpoint(const VaeModel& model, const std::string& path,
                         const std::string& training_meta_json = "{}");
void save_cvae_checkpoint(const CvaeModel& model, const std::string& path,
                          const std::string& training_meta_json = "{}");
ModelKind checkpoint_kind(const std::string& path);
VaeModel load_vae_checkpoint(const std::string& path);
CvaeModel load_cvae_checkpoint(const std::string& path);

}  // namespace pforge

#endif  // PFORGE_VAE_HPP
