#include "drivenet/cli.hpp"

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "drivenet/config.hpp"
#include "drivenet/dataset.hpp"
#include "drivenet/error.hpp"
#include "drivenet/metrics.hpp"

namespace drivenet {

namespace {

namespace fs = std::filesystem;

void cap_threads(int requested) {
  if (requested > 0) omp_set_num_threads(requested);
}

std::string hyperparam_header(const RunConfig& cfg) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "# alpha=%g batch_size=%d epochs=%d n_trees=%d dropout=%g dense_width=%d "
                "max_depth=%d seed=%llu",
                cfg.alpha, cfg.batch_size, cfg.epochs, cfg.n_trees, cfg.dropout,
                cfg.dense_width, cfg.max_depth,
                static_cast<unsigned long long>(cfg.seed));
  return buf;
}

// shared by train/crossval: parse, range-check, and require the manifest file
RunConfig load_run_config(const std::string& path) {
  RunConfig cfg = parse_config_file(path);
  validate_config(cfg, true);
  if (!fs::exists(cfg.manifest))
    throw ConfigError("manifest not found: " + cfg.manifest);
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

int run_synth(const std::string& out_dir, int per_class, double sigma, uint64_t seed,
              std::ostream& out, std::ostream& err) {
  if (per_class < 1) {
    err << "synth: --per-class must be at least 1\n";
    return 2;
  }
  if (sigma < 0) {
    err << "synth: --sigma must be >= 0\n";
    return 2;
  }
  write_synth_dataset(out_dir, per_class, static_cast<float>(sigma), seed);
  out << "wrote " << per_class * 10 << " images and manifest.csv under " << out_dir << "\n";
  return 0;
}

int run_train(const std::string& config_path, int threads_flag, std::ostream& out) {
  const RunConfig cfg = load_run_config(config_path);
  cap_threads(threads_flag > 0 ? threads_flag : cfg.threads);

  const DatasetManifest manifest = load_manifest(cfg.manifest);
  const std::vector<Sample> dataset = load_dataset(manifest);

  out << hyperparam_header(cfg) << "\n";
  TrainLog log;
  const DriveNetModel model = train_cascade(dataset, to_cascade_config(cfg), &out, &log);

  ensure_out_dir(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  save_model(model, (dir / "model.drvn").string());

  std::ofstream csv(dir / "train_log.csv");
  if (!csv) throw IoError("cannot create train_log.csv under " + cfg.out_dir);
  csv << hyperparam_header(cfg) << "\n";
  csv << "epoch,mean_loss,train_accuracy\n";
  char row[96];
  for (size_t e = 0; e < log.mean_loss.size(); ++e) {
    std::snprintf(row, sizeof(row), "%zu,%.6f,%.6f\n", e + 1, log.mean_loss[e],
                  log.train_accuracy[e]);
    csv << row;
  }
  if (!csv) throw IoError("write failed on train_log.csv");

  out << "model written to " << (dir / "model.drvn").string() << "\n";
  return 0;
}

int run_crossval(const std::string& config_path, int k_flag, int threads_flag,
                 std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(config_path);
  if (k_flag > 0) cfg.k = k_flag;
  if (cfg.k < 2) {
    err << "crossval: k must be at least 2\n";
    return 2;
  }
  cap_threads(threads_flag > 0 ? threads_flag : cfg.threads);

  const DatasetManifest manifest = load_manifest(cfg.manifest);
  const std::vector<Sample> dataset = load_dataset(manifest);

  out << hyperparam_header(cfg) << " k=" << cfg.k << "\n";
  const CrossvalResult result = crossval(dataset, cfg.k, to_cascade_config(cfg), &out);

  ensure_out_dir(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  for (size_t f = 0; f < result.folds.size(); ++f) {
    std::ofstream c(dir / ("fold_" + std::to_string(f + 1) + "_confusion.csv"));
    write_confusion_csv(c, result.folds[f]);
    if (!c) throw IoError("write failed on fold confusion csv");
  }
  {
    std::ofstream c(dir / "pooled_confusion.csv");
    write_confusion_csv(c, result.pooled);
    if (!c) throw IoError("write failed on pooled_confusion.csv");
  }
  const std::string summary = summary_text(result.folds, result.pooled);
  {
    std::ofstream s(dir / "summary.txt");
    s << summary;
    if (!s) throw IoError("write failed on summary.txt");
  }
  out << summary;
  return 0;
}

int run_predict(const std::string& model_path, const std::string& image_path,
                std::ostream& out, std::ostream& err) {
  if (!fs::exists(model_path)) {
    err << "predict: model not found: " << model_path << "\n";
    return 2;
  }
  if (!fs::exists(image_path)) {
    err << "predict: image not found: " << image_path << "\n";
    return 2;
  }
  const DriveNetModel model = load_model(model_path);

  Tensor image = load_pnm(image_path);
  if (image.dim(1) == 480 && image.dim(2) == 640) image = downscale10(image);

  const Prediction p = predict_cascade(model, image);
  out << "c" << p.label;
  char buf[16];
  for (float prob : p.posterior) {
    std::snprintf(buf, sizeof(buf), ",%.6f", static_cast<double>(prob));
    out << buf;
  }
  out << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"two-stage image classifier: compact CNN features fed to a random forest"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "cap the OpenMP worker count")
      ->check(CLI::NonNegativeNumber);

  auto* synth = app.add_subcommand("synth", "write a synthetic PGM dataset with manifest");
  std::string synth_out;
  int per_class = 20;
  double sigma = 0.05;
  uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--per-class", per_class, "images per class (default 20)");
  synth->add_option("--sigma", sigma, "Gaussian pixel noise (default 0.05)");
  synth->add_option("--seed", synth_seed, "generator seed")->required();

  auto* train = app.add_subcommand("train", "train the cascade from a manifest");
  std::string train_config;
  train->add_option("--config", train_config, "key=value config file")->required();

  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validated training");
  std::string cv_config;
  int cv_k = 0;
  crossval->add_option("--config", cv_config, "key=value config file")->required();
  crossval->add_option("--k", cv_k, "fold count (overrides the config)");

  auto* predict = app.add_subcommand("predict", "classify one image with a saved model");
  std::string model_path, image_path;
  predict->add_option("--model", model_path, "model file (.drvn)")->required();
  predict->add_option("--image", image_path, "PGM/PPM image")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << e.what() << "\n";
    return 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_out, per_class, sigma, synth_seed, out, err);
    if (train->parsed()) return run_train(train_config, threads, out);
    if (crossval->parsed()) return run_crossval(cv_config, cv_k, threads, out, err);
    if (predict->parsed()) return run_predict(model_path, image_path, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable: require_subcommand(1)
}

}  // namespace drivenet
