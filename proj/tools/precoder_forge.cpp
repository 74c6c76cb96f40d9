// Command-line front end: dataset generation, VAE/CVAE training, sampling,
// SE evaluation reports, and L-BFGS-vs-inference timing.
//
// Exit codes: 0 success, 1 usage, 2 I/O or file format, 3 numeric/config.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pforge/channel.hpp"
#include "pforge/dataset.hpp"
#include "pforge/errors.hpp"
#include "pforge/lbfgs.hpp"
#include "pforge/manifest.hpp"
#include "pforge/pack.hpp"
#include "pforge/rng.hpp"
#include "pforge/se.hpp"
#include "pforge/vae.hpp"

namespace {

using namespace pforge;
using nlohmann::json;

// Sub-seed streams hanging off the single --seed flag.
constexpr uint64_t kChannelStream = 10;
constexpr uint64_t kBuildStream = 11;
constexpr uint64_t kTrainStream = 12;
constexpr uint64_t kSamplingStream = 13;
constexpr uint64_t kBenchStream = 14;

struct CommonArgs {
  uint64_t seed = 1;
  int threads = 1;
};

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json lbfgs_json(const LbfgsConfig& opt) {
  return {{"memory", opt.memory},       {"max_iters", opt.max_iters},
          {"grad_tol", opt.grad_tol},   {"max_linesearch", opt.max_linesearch},
          {"armijo_c1", opt.armijo_c1}, {"backtrack", opt.backtrack},
          {"init_scale", opt.init_scale}};
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---------------------------------------------------------------- generate

int cmd_generate(const CommonArgs& common, int q, int n, double noise, double power,
                 int num_samples, double threshold, int perturb_k, double perturb_delta,
                 const LbfgsConfig& opt, int cap_multiplier, const std::string& out,
                 const std::vector<std::string>& argv) {
  const auto t0 = std::chrono::steady_clock::now();

  SystemConfig cfg;
  cfg.num_users = q;
  cfg.num_antennas = n;
  cfg.noise_power = noise;
  cfg.power_budget = power;
  cfg.se_threshold = threshold;

  const uint64_t channel_seed = derive_seed(common.seed, kChannelStream);
  const uint64_t build_seed = derive_seed(common.seed, kBuildStream);
  const ChannelMatrix h = generate_channel(q, n, channel_seed);

  BuildOptions build;
  build.threads = common.threads;
  build.attempt_cap_multiplier = cap_multiplier;
  const PrecodingDataset dataset =
      build_perturbed_dataset(h, cfg, opt, {perturb_delta, perturb_k}, num_samples,
                              threshold, build_seed, build);

  save_dataset(dataset, out);

  std::vector<double> se;
  for (const auto& [ci, s] : dataset.samples()) se.push_back(s.se);
  const SeBands bands = se_bands(se);

  RunManifest manifest("generate", argv);
  manifest.config() = {{"q", q},
                       {"n", n},
                       {"noise", noise},
                       {"power", power},
                       {"num_samples", num_samples},
                       {"threshold", threshold},
                       {"perturb_k", perturb_k},
                       {"perturb_delta", perturb_delta},
                       {"attempt_cap_multiplier", cap_multiplier},
                       {"threads", common.threads},
                       {"lbfgs", lbfgs_json(opt)}};
  manifest.note_seed("root", common.seed);
  manifest.note_seed("channel", channel_seed);
  manifest.note_seed("build", build_seed);
  manifest.add_output(out);
  manifest.set_wall_time(elapsed_since(t0));
  manifest.write(out + ".manifest.json");

  std::printf("wrote %s: %zu samples over %zu channels (shortfall %d)\n", out.c_str(),
              dataset.size(), dataset.channels().size(), dataset.shortfall());
  std::printf("mean SE %.4f | bands <7: %ld, 7-14: %ld, >=14: %ld\n", mean_of(se),
              bands.below, bands.mid, bands.high);
  if (dataset.shortfall() > 0)
    std::fprintf(stderr,
                 "warning: threshold %.3f left %d requested samples uncollected\n",
                 threshold, dataset.shortfall());
  return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const CommonArgs& common, const std::string& dataset_path,
              const std::string& model_kind, int epochs, int batch_size, double lr,
              bool kl_warmup, const std::string& out,
              const std::vector<std::string>& argv) {
  const auto t0 = std::chrono::steady_clock::now();
  const PrecodingDataset dataset = load_dataset(dataset_path);
  const SystemConfig& sys = dataset.config();
  const int d_data = 2 * sys.num_antennas * sys.num_users;

  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = batch_size;
  tc.adam.learning_rate = lr;
  tc.kl_warmup = kl_warmup;
  tc.seed = derive_seed(common.seed, kTrainStream);

  const std::vector<int> hidden = {256, 256};
  const int d_model = 64;

  json training_meta = {{"dataset", dataset_path},
                        {"dataset_fnv1a64", hash_file(dataset_path)},
                        {"epochs", epochs},
                        {"batch_size", batch_size},
                        {"learning_rate", lr},
                        {"kl_warmup", kl_warmup},
                        {"seed", tc.seed}};

  std::vector<EpochMetrics> log;
  if (model_kind == "vae") {
    VaeModel model = make_vae(d_data, d_model, hidden, tc.seed);
    log = train_vae(model, dataset, tc);
    save_vae_checkpoint(model, out, training_meta.dump());
  } else {
    CvaeModel model = make_cvae(d_data, d_model, hidden, tc.seed);
    log = train_cvae(model, dataset, tc);
    save_cvae_checkpoint(model, out, training_meta.dump());
  }

  const std::string metrics_path = out + ".metrics.csv";
  std::FILE* f = std::fopen(metrics_path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + metrics_path);
  std::fprintf(f, "epoch,vlb,reconstruction,kl,val_recon_se\n");
  for (const auto& m : log)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g\n", m.epoch, m.vlb, m.reconstruction,
                 m.kl, m.val_recon_se);
  if (std::fclose(f) != 0) throw IoError("write failed: " + metrics_path);

  RunManifest manifest("train", argv);
  manifest.config() = {{"dataset", dataset_path}, {"model", model_kind},
                       {"epochs", epochs},        {"batch_size", batch_size},
                       {"learning_rate", lr},     {"kl_warmup", kl_warmup},
                       {"d_model", d_model},      {"hidden", hidden}};
  manifest.note_seed("root", common.seed);
  manifest.note_seed("training", tc.seed);
  manifest.add_output(out);
  manifest.add_output(out + ".json");
  manifest.add_output(metrics_path);
  manifest.set_wall_time(elapsed_since(t0));
  manifest.write(out + ".manifest.json");

  std::printf("trained %s for %d epochs: final VLB %.3f, KL %.3f, val recon SE %.3f\n",
              model_kind.c_str(), epochs, log.back().vlb, log.back().kl,
              log.back().val_recon_se);
  return 0;
}

// ------------------------------------------------------------------ sample

int cmd_sample(const CommonArgs& common, const std::string& checkpoint_path,
               const std::string& dataset_path, int num, int channel_index,
               bool no_project, const std::string& out,
               const std::vector<std::string>& argv) {
  const auto t0 = std::chrono::steady_clock::now();
  const PrecodingDataset dataset = load_dataset(dataset_path);
  const SystemConfig& sys = dataset.config();
  if (channel_index < 0 || channel_index >= static_cast<int>(dataset.channels().size()))
    throw ConfigError("sample: channel index " + std::to_string(channel_index) +
                      " outside the dataset's " +
                      std::to_string(dataset.channels().size()) + " channels");
  const ChannelMatrix& h = dataset.channels()[channel_index];

  const uint64_t sampling_seed = derive_seed(common.seed, kSamplingStream);
  std::vector<PrecodingMatrix> precoders;
  const ModelKind kind = checkpoint_kind(checkpoint_path);
  if (kind == ModelKind::kVae) {
    const VaeModel model = load_vae_checkpoint(checkpoint_path);
    precoders = sample_vae(model, num, sampling_seed, sys, !no_project);
  } else {
    const CvaeModel model = load_cvae_checkpoint(checkpoint_path);
    precoders = sample_cvae(model, h, num, sampling_seed, sys, !no_project);
  }

  std::FILE* f = std::fopen(out.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + out);
  const int d = 2 * sys.num_antennas * sys.num_users;
  std::fprintf(f, "se");
  for (int i = 0; i < d; ++i) std::fprintf(f, ",w_%d", i);
  std::fprintf(f, "\n");
  std::vector<double> se;
  for (const auto& w : precoders) {
    const double fw = spectral_efficiency(h, w, sys);
    se.push_back(fw);
    const Eigen::VectorXd v = pack_precoder(w);
    std::fprintf(f, "%.17g", fw);
    for (Eigen::Index i = 0; i < v.size(); ++i) std::fprintf(f, ",%.17g", v[i]);
    std::fprintf(f, "\n");
  }
  if (std::fclose(f) != 0) throw IoError("write failed: " + out);

  RunManifest manifest("sample", argv);
  manifest.config() = {{"checkpoint", checkpoint_path},
                       {"dataset", dataset_path},
                       {"num", num},
                       {"channel", channel_index},
                       {"project", !no_project}};
  manifest.note_seed("root", common.seed);
  manifest.note_seed("sampling", sampling_seed);
  manifest.add_output(out);
  manifest.set_wall_time(elapsed_since(t0));
  manifest.write(out + ".manifest.json");

  std::printf("sampled %d precoders: mean SE %.4f\n", num, mean_of(se));
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct MethodReport {
  std::string name;
  std::vector<double> se;
};

int cmd_evaluate(const CommonArgs& common, const std::string& dataset_path,
                 const std::string& vae_path, const std::string& cvae_path,
                 int num_samples, const std::string& out,
                 const std::vector<std::string>& argv) {
  const auto t0 = std::chrono::steady_clock::now();
  const PrecodingDataset dataset = load_dataset(dataset_path);
  const SystemConfig& sys = dataset.config();
  if (dataset.channels().empty()) throw ConfigError("evaluate: dataset has no channels");
  const ChannelMatrix& h = dataset.channels()[0];
  const uint64_t sampling_seed = derive_seed(common.seed, kSamplingStream);

  std::vector<MethodReport> methods;

  {
    MethodReport lbfgs{"lbfgs_dataset", {}};
    for (const auto& [ci, s] : dataset.samples())
      if (ci == 0) lbfgs.se.push_back(s.se);
    methods.push_back(std::move(lbfgs));
  }
  methods.push_back({"mrt", {spectral_efficiency(h, mrt_precoder(h, sys), sys)}});
  methods.push_back({"zf", {spectral_efficiency(h, zf_precoder(h, sys), sys)}});

  auto evaluate_set = [&](const std::vector<PrecodingMatrix>& ws) {
    std::vector<double> se;
    se.reserve(ws.size());
    for (const auto& w : ws) se.push_back(spectral_efficiency(h, w, sys));
    return se;
  };

  if (!vae_path.empty()) {
    const VaeModel model = load_vae_checkpoint(vae_path);
    methods.push_back(
        {"vae_sampled", evaluate_set(sample_vae(model, num_samples, sampling_seed, sys))});
    MethodReport recon{"vae_reconstructed", {}};
    Rng rng(derive_seed(sampling_seed, 1));
    for (const auto& [ci, s] : dataset.samples()) {
      if (ci != 0) continue;
      const PrecodingMatrix w = unpack_precoder(s.w_vec, sys.num_antennas, sys.num_users);
      recon.se.push_back(
          spectral_efficiency(h, reconstruct_vae(model, w, rng.next_u64(), sys), sys));
    }
    methods.push_back(std::move(recon));
  }
  if (!cvae_path.empty()) {
    const CvaeModel model = load_cvae_checkpoint(cvae_path);
    methods.push_back({"cvae_sampled", evaluate_set(sample_cvae(
                                           model, h, num_samples, sampling_seed, sys))});
    MethodReport recon{"cvae_reconstructed", {}};
    Rng rng(derive_seed(sampling_seed, 2));
    for (const auto& [ci, s] : dataset.samples()) {
      if (ci != 0) continue;
      const PrecodingMatrix w = unpack_precoder(s.w_vec, sys.num_antennas, sys.num_users);
      recon.se.push_back(spectral_efficiency(
          h, reconstruct_cvae(model, w, h, rng.next_u64(), sys), sys));
    }
    methods.push_back(std::move(recon));
  }

  json report;
  report["config"] = {{"q", sys.num_users},
                      {"n", sys.num_antennas},
                      {"noise", sys.noise_power},
                      {"power", sys.power_budget},
                      {"threshold", dataset.threshold()}};
  report["methods"] = json::object();
  const std::string csv_path = out + ".csv";
  std::FILE* f = std::fopen(csv_path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + csv_path);
  std::fprintf(f, "method,count,mean_se,below_7,se_7_to_14,se_14_up\n");
  for (const auto& m : methods) {
    const SeBands bands = se_bands(m.se);
    report["methods"][m.name] = {{"count", m.se.size()},
                                 {"mean_se", mean_of(m.se)},
                                 {"bands",
                                  {{"below_7", bands.below},
                                   {"7_to_14", bands.mid},
                                   {"14_up", bands.high}}}};
    std::fprintf(f, "%s,%zu,%.17g,%ld,%ld,%ld\n", m.name.c_str(), m.se.size(),
                 mean_of(m.se), bands.below, bands.mid, bands.high);
  }
  if (std::fclose(f) != 0) throw IoError("write failed: " + csv_path);

  const std::string json_path = out + ".json";
  {
    std::ofstream jf(json_path);
    if (!jf) throw IoError("cannot open for writing: " + json_path);
    jf << report.dump(2) << "\n";
    if (!jf) throw IoError("write failed: " + json_path);
  }

  RunManifest manifest("evaluate", argv);
  manifest.config() = {{"dataset", dataset_path},
                       {"vae", vae_path},
                       {"cvae", cvae_path},
                       {"num_samples", num_samples}};
  manifest.note_seed("root", common.seed);
  manifest.note_seed("sampling", sampling_seed);
  manifest.add_output(csv_path);
  manifest.add_output(json_path);
  manifest.set_wall_time(elapsed_since(t0));
  manifest.write(out + ".manifest.json");

  for (const auto& m : methods)
    std::printf("%-20s count %6zu  mean SE %8.4f\n", m.name.c_str(), m.se.size(),
                mean_of(m.se));
  return 0;
}

// ------------------------------------------------------------------- bench

int cmd_bench(const CommonArgs& common, const std::string& dataset_path,
              const std::string& checkpoint_path, int repeats, const LbfgsConfig& opt,
              const std::string& out, const std::vector<std::string>& argv) {
  const auto t0 = std::chrono::steady_clock::now();
  const PrecodingDataset dataset = load_dataset(dataset_path);
  const SystemConfig& sys = dataset.config();
  const ChannelMatrix& h = dataset.channels().at(0);
  const uint64_t bench_seed = derive_seed(common.seed, kBenchStream);

  std::vector<double> solve_times;
  std::vector<double> iters;
  for (int r = 0; r < repeats; ++r) {
    const OptimizeResult res = optimize(h, sys, opt, derive_seed(bench_seed, r));
    solve_times.push_back(res.wall_time_sec);
    iters.push_back(static_cast<double>(res.iterations));
  }

  // Per-sample inference cost, amortized over a batch of single draws.
  const ModelKind kind = checkpoint_kind(checkpoint_path);
  const int batch = 200;
  std::vector<double> infer_times;
  if (kind == ModelKind::kVae) {
    const VaeModel model = load_vae_checkpoint(checkpoint_path);
    for (int r = 0; r < repeats; ++r) {
      const auto ti = std::chrono::steady_clock::now();
      sample_vae(model, batch, derive_seed(bench_seed, 100 + r), sys);
      infer_times.push_back(elapsed_since(ti) / batch);
    }
  } else {
    const CvaeModel model = load_cvae_checkpoint(checkpoint_path);
    for (int r = 0; r < repeats; ++r) {
      const auto ti = std::chrono::steady_clock::now();
      sample_cvae(model, h, batch, derive_seed(bench_seed, 100 + r), sys);
      infer_times.push_back(elapsed_since(ti) / batch);
    }
  }

  const double solve_med = median_of(solve_times);
  const double infer_med = median_of(infer_times);
  const double iters_med = median_of(iters);
  const double ratio = infer_med > 0.0 ? solve_med / infer_med : 0.0;

  json report = {{"lbfgs_solve_sec_median", solve_med},
                 {"lbfgs_iterations_median", iters_med},
                 {"lbfgs_sec_per_iteration", iters_med > 0 ? solve_med / iters_med : 0.0},
                 {"nn_inference_sec_median", infer_med},
                 {"speedup_ratio", ratio},
                 {"repeats", repeats},
                 {"low_confidence", repeats < 2}};
  {
    std::ofstream jf(out);
    if (!jf) throw IoError("cannot open for writing: " + out);
    jf << report.dump(2) << "\n";
    if (!jf) throw IoError("write failed: " + out);
  }

  RunManifest manifest("bench", argv);
  manifest.config() = {{"dataset", dataset_path},
                       {"checkpoint", checkpoint_path},
                       {"repeats", repeats},
                       {"lbfgs", lbfgs_json(opt)}};
  manifest.note_seed("root", common.seed);
  manifest.note_seed("bench", bench_seed);
  manifest.add_output(out);
  manifest.set_wall_time(elapsed_since(t0));
  manifest.write(out + ".manifest.json");

  std::printf("L-BFGS solve median %.6f s (%d iterations median)\n", solve_med,
              static_cast<int>(iters_med));
  std::printf("NN inference median %.6f s per sample\n", infer_med);
  std::printf("speedup ratio %.1fx%s\n", ratio,
              repeats < 2 ? " (low confidence: single repeat)" : "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MU-MIMO precoder toolkit: L-BFGS SE optimization, dataset "
               "generation, and VAE/CVAE precoder sampling"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  const std::vector<std::string> raw_argv(argv, argv + argc);

  CommonArgs common;
  app.add_option("--seed", common.seed, "Root seed; every stage derives from it");
  app.add_option("--threads", common.threads, "Worker threads for dataset generation")
      ->envname("PRECODER_FORGE_THREADS");

  LbfgsConfig opt;

  // generate
  auto* gen = app.add_subcommand("generate", "Build a precoder dataset with L-BFGS");
  gen->fallthrough();
  int q = 4, n = 16, num_samples = 5000, perturb_k = 0, cap_multiplier = 10;
  double noise = 1.0, power = 1.0, threshold = 14.5, perturb_delta = 5.0;
  std::string gen_out;
  gen->add_option("--q", q, "Number of users");
  gen->add_option("--n", n, "Number of antennas");
  gen->add_option("--noise", noise, "Noise power sigma^2");
  gen->add_option("--power", power, "Per-antenna power budget p");
  gen->add_option("--num-samples", num_samples, "Accepted samples per channel");
  gen->add_option("--threshold", threshold, "SE acceptance threshold t");
  gen->add_option("--perturb-k", perturb_k, "Perturbed channel copies K");
  gen->add_option("--perturb-delta", perturb_delta,
                  "Squared Frobenius norm of each perturbation");
  gen->add_option("--attempt-cap", cap_multiplier,
                  "Give up after this multiple of --num-samples attempts");
  gen->add_option("--max-iters", opt.max_iters, "L-BFGS iteration cap");
  gen->add_option("--grad-tol", opt.grad_tol, "L-BFGS gradient tolerance");
  gen->add_option("--out", gen_out, "Output .pcds path")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a vae or cvae on a dataset");
  train->fallthrough();
  std::string train_dataset, train_model = "vae", train_out;
  int epochs = 200, batch_size = 128;
  double lr = 1e-3;
  bool kl_warmup = false;
  train->add_option("--dataset", train_dataset, "Input .pcds path")->required();
  train->add_option("--model", train_model, "Model kind")
      ->check(CLI::IsMember({"vae", "cvae"}));
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--batch", batch_size, "Mini-batch size");
  train->add_option("--lr", lr, "Adam learning rate");
  train->add_flag("--kl-warmup", kl_warmup, "Linear KL ramp over the first 10% epochs");
  train->add_option("--out", train_out, "Checkpoint output path")->required();

  // sample
  auto* sample = app.add_subcommand("sample", "Sample precoders from a checkpoint");
  sample->fallthrough();
  std::string sample_ckpt, sample_dataset, sample_out;
  int sample_num = 1000, sample_channel = 0;
  bool no_project = false;
  sample->add_option("--checkpoint", sample_ckpt, "Trained model checkpoint")->required();
  sample->add_option("--dataset", sample_dataset,
                     "Dataset supplying the channel and system config")->required();
  sample->add_option("--num", sample_num, "Number of precoders");
  sample->add_option("--channel", sample_channel, "Channel index for conditioning/SE");
  sample->add_flag("--no-project", no_project, "Skip the power projection");
  sample->add_option("--out", sample_out, "Output CSV path")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Per-method SE report (CSV + JSON)");
  eval->fallthrough();
  std::string eval_dataset, eval_vae, eval_cvae, eval_out;
  int eval_num = 1000;
  eval->add_option("--dataset", eval_dataset, "Input .pcds path")->required();
  eval->add_option("--vae", eval_vae, "VAE checkpoint (optional)");
  eval->add_option("--cvae", eval_cvae, "CVAE checkpoint (optional)");
  eval->add_option("--num-samples", eval_num, "Samples drawn per model");
  eval->add_option("--out", eval_out, "Output path prefix")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Time one L-BFGS solve vs NN inference");
  bench->fallthrough();
  std::string bench_dataset, bench_ckpt, bench_out;
  int repeats = 5;
  bench->add_option("--dataset", bench_dataset, "Dataset supplying channel/config")
      ->required();
  bench->add_option("--checkpoint", bench_ckpt, "Trained model checkpoint")->required();
  bench->add_option("--repeats", repeats, "Timing repetitions (median reported)");
  bench->add_option("--max-iters", opt.max_iters, "L-BFGS iteration cap");
  bench->add_option("--out", bench_out, "Output JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help/version exit 0, every parse problem is usage
  }

  try {
    if (gen->parsed())
      return cmd_generate(common, q, n, noise, power, num_samples, threshold, perturb_k,
                          perturb_delta, opt, cap_multiplier, gen_out, raw_argv);
    if (train->parsed())
      return cmd_train(common, train_dataset, train_model, epochs, batch_size, lr,
                       kl_warmup, train_out, raw_argv);
    if (sample->parsed())
      return cmd_sample(common, sample_ckpt, sample_dataset, sample_num, sample_channel,
                        no_project, sample_out, raw_argv);
    if (eval->parsed())
      return cmd_evaluate(common, eval_dataset, eval_vae, eval_cvae, eval_num, eval_out,
                          raw_argv);
    if (bench->parsed())
      return cmd_bench(common, bench_dataset, bench_ckpt, repeats, opt, bench_out,
                       raw_argv);
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "file format error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 1;
}
