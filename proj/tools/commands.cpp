#include "commands.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spikematch/analysis.hpp"
#include "spikematch/binio.hpp"
#include "spikematch/checkpoint.hpp"
#include "spikematch/config.hpp"
#include "spikematch/data.hpp"
#include "spikematch/error.hpp"
#include "spikematch/spikematch.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>

namespace spikematch::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  unsigned threads = 1;
  std::uint64_t eval_every = 0;
};

void add_common(CLI::App *app, Common &c) {
  app->add_option("--config", c.config, "Run configuration file (key = value lines)");
  app->add_option("--override", c.overrides, "Override a config key, key=value (repeatable)");
  app->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t &s) { c.seed = s, c.seed_set = true; }, "Random seed");
  app->add_option("--out", c.out, "Output directory (default $SPIKEMATCH_OUT or .)");
  app->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--eval-every", c.eval_every, "Iterations between evaluations")->check(CLI::PositiveNumber);
}

/// Defaults, then the config file, then dedicated flags, then overrides.
RunConfig resolve_config(const Common &c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.seed_set)
    cfg.seed = c.seed;
  if (c.eval_every > 0)
    cfg.eval_every = c.eval_every;
  apply_overrides(cfg, c.overrides);
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Common &c) {
  fs::path dir = ".";
  if (!c.out.empty())
    dir = c.out;
  else if (const char *env = std::getenv("SPIKEMATCH_OUT"); env != nullptr && *env != '\0')
    dir = env;
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path &path, const std::string &text) {
  binio::write_file_atomic(path.string(), std::vector<unsigned char>(text.begin(), text.end()));
}

std::string g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string metrics_line(const MetricsRow &r) {
  return std::to_string(r.iter) + "," + g(r.loss_s) + "," + g(r.loss_u) + "," + g(r.util_ratio) + "," + g(r.acc) +
         "," + g(r.ema_acc) + "," + g(r.ece) + "\n";
}

Dataset require_data(const std::string &path, const char *key) {
  if (path.empty())
    throw ConfigError(key, std::string("config key '") + key + "' is empty; a dataset path is required");
  if (!fs::exists(path))
    throw ConfigError(key, std::string("config key '") + key + "': no such file " + path);
  return load_sdf(path);
}

std::vector<std::vector<double>> first_inputs(const Dataset &ds, std::size_t n) {
  std::vector<std::vector<double>> xs;
  for (std::size_t i = 0; i < std::min(n, ds.size()); ++i)
    xs.push_back(ds.image_f64(i));
  return xs;
}

struct Loaded {
  Checkpoint ckpt;
  RunConfig cfg;
};

Loaded open_checkpoint(const std::string &path) {
  Loaded l{load_checkpoint(path), {}};
  l.cfg = parse_config(l.ckpt.run_config);
  l.cfg.neuron = l.ckpt.neuron;
  return l;
}

std::string dataset_for(const std::string &flag, const RunConfig &cfg) {
  if (!flag.empty())
    return flag;
  return cfg.test_data.empty() ? cfg.data : cfg.test_data;
}

int cmd_train(const Common &c, std::ostream &out) {
  const RunConfig cfg = resolve_config(c);
  const Dataset train = require_data(cfg.data, "data");
  const Dataset test = cfg.test_data.empty() ? train : require_data(cfg.test_data, "test_data");
  const fs::path dir = out_dir(c);

  write_text(dir / "config.txt", to_text(cfg));
  save_split_manifest((dir / "split.json").string(),
                      make_split(train, cfg.labels_per_class, cfg.seed, cfg.unlabeled_includes_labeled));

  std::string csv = "iter,loss_s,loss_u,util_ratio,acc,ema_acc,ece\n";
  write_text(dir / "metrics.csv", csv);
  const std::string run_text = to_text(cfg);
  auto on_eval = [&](const MetricsRow &row, const TrainState &st) {
    csv += metrics_line(row);
    write_text(dir / "metrics.csv", csv);
    save_checkpoint((dir / "model.ckpt").string(), Checkpoint{st.model, cfg.neuron, run_text});
    save_checkpoint((dir / "ema.ckpt").string(), Checkpoint{st.ema, cfg.neuron, run_text});
    out << "iter " << row.iter << "  loss_s " << g(row.loss_s) << "  loss_u " << g(row.loss_u) << "  util "
        << g(row.util_ratio) << "  acc " << g(row.acc) << "  ema_acc " << g(row.ema_acc) << "\n";
  };
  run_training(cfg, train, test, c.threads, on_eval);
  return 0;
}

int cmd_eval(const Common &c, const std::string &ckpt_path, const std::string &data, std::ostream &out) {
  const auto l = open_checkpoint(ckpt_path);
  const Dataset ds = require_data(dataset_for(data, l.cfg), "data");
  const auto r = evaluate(l.ckpt.net, l.cfg.neuron, l.cfg.T, ds, c.threads);
  const auto cal = ece(r.confidence, r.correct);
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["per_class"] = r.per_class;
  j["mean_prediction"] = r.mean_prediction;
  j["ece"] = cal.ece;
  write_text(out_dir(c) / "eval.json", j.dump(2) + "\n");
  out << "accuracy " << g(r.accuracy) << "  ece " << g(cal.ece) << "\n";
  return 0;
}

int cmd_sweep_tau(const Common &c, const std::vector<double> &taus, std::size_t probe_n, std::ostream &out) {
  if (taus.size() < 2)
    throw ConfigError("tau", "sweep-tau needs at least two tau values");
  const RunConfig base = resolve_config(c);
  const Dataset train = require_data(base.data, "data");
  const Dataset test = base.test_data.empty() ? train : require_data(base.test_data, "test_data");
  const auto probe_batch = first_inputs(test, probe_n);
  const fs::path dir = out_dir(c);

  std::string csv = "tau,accuracy,mean_cosine,temporal_variance,effective_rank\n";
  for (double tau : taus) {
    RunConfig cfg = base;
    cfg.neuron.tau = tau;
    cfg.validate();
    const auto run = run_training(cfg, train, test, c.threads);
    const auto acc = evaluate(run.state.ema, cfg.neuron, cfg.T, test, c.threads).accuracy;
    const auto div = batch_diversity(run.state.ema, cfg.neuron, cfg.T, probe_batch, c.threads);
    csv += g(tau) + "," + g(acc) + "," + g(div.mean_cosine) + "," + g(div.temporal_variance) + "," +
           g(div.effective_rank) + "\n";
    write_text(dir / "sweep_tau.csv", csv);
    out << "tau " << g(tau) << "  acc " << g(acc) << "  cos " << g(div.mean_cosine) << "  erank "
        << g(div.effective_rank) << "\n";
  }
  return 0;
}

int cmd_analyze(const Common &c, const std::string &ckpt_path, const std::string &data, std::size_t bins,
                std::size_t probe_n, std::ostream &out) {
  const auto l = open_checkpoint(ckpt_path);
  const Dataset ds = require_data(dataset_for(data, l.cfg), "data");
  const fs::path dir = out_dir(c);

  const auto div = batch_diversity(l.ckpt.net, l.cfg.neuron, l.cfg.T, first_inputs(ds, probe_n), c.threads);
  write_text(dir / "diversity.json", diversity_json(div));
  write_text(dir / "cosine.csv", matrix_csv(div.cosine, "t"));
  write_text(dir / "kl.csv", matrix_csv(div.kl, "t"));

  const auto r = evaluate(l.ckpt.net, l.cfg.neuron, l.cfg.T, ds, c.threads);
  const auto cal = ece(r.confidence, r.correct, bins);
  write_text(dir / "reliability.csv", calibration_csv(cal));
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["ece"] = cal.ece;
  j["bins"] = bins;
  write_text(dir / "calibration.json", j.dump(2) + "\n");
  out << "accuracy " << g(r.accuracy) << "  ece " << g(cal.ece) << "  mean_cosine " << g(div.mean_cosine)
      << "  effective_rank " << g(div.effective_rank) << "\n";
  return 0;
}

int cmd_energy(const Common &c, const std::string &ckpt_path, const std::string &data, std::size_t samples,
               std::ostream &out) {
  const auto l = open_checkpoint(ckpt_path);
  const Dataset ds = require_data(dataset_for(data, l.cfg), "data");
  const auto zeta = layer_activity(l.ckpt.net, l.cfg.neuron, l.cfg.T, first_inputs(ds, samples));
  const auto rep = energy_estimate(l.ckpt.net.layers(), zeta);
  const std::string csv = energy_csv(rep);
  write_text(out_dir(c) / "energy.csv", csv);
  out << csv;
  return 0;
}

int cmd_make_data(const std::string &kind, std::uint32_t classes, std::size_t per_class, std::uint32_t h,
                  std::uint32_t w, double noise, std::uint64_t seed, const std::string &path, std::ostream &out) {
  SyntheticKind k;
  if (kind == "blobs")
    k = SyntheticKind::gaussian_blobs;
  else if (kind == "stripes")
    k = SyntheticKind::striped_patterns;
  else
    throw ConfigError("kind", "unknown synthetic kind '" + kind + "' (expected blobs or stripes)");
  const Dataset ds = make_synthetic(k, classes, per_class, h, w, noise, seed);
  save_sdf(path, ds);
  out << "wrote " << ds.size() << " samples to " << path << "\n";
  return 0;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Semi-supervised training of spiking neural networks with temporal pseudo-labels"};
  app.require_subcommand(1, 1);
  Common common;

  auto *train = app.add_subcommand("train", "Train a model and write metrics and checkpoints");
  add_common(train, common);

  std::string ckpt, data;
  std::size_t bins = 10, probe_n = 64, samples = 16;
  auto *eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, common);
  eval->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  eval->add_option("--data", data, "Dataset (defaults to the checkpoint's test data)");

  std::vector<double> taus;
  auto *sweep = app.add_subcommand("sweep-tau", "Train once per leak factor and report diversity");
  add_common(sweep, common);
  sweep->add_option("--taus", taus, "Leak factors")->required()->delimiter(',');
  sweep->add_option("--probe", probe_n, "Held-out probe batch size");

  auto *analyze = app.add_subcommand("analyze", "Diversity and calibration reports for a checkpoint");
  add_common(analyze, common);
  analyze->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  analyze->add_option("--data", data, "Dataset (defaults to the checkpoint's test data)");
  analyze->add_option("--bins", bins, "Calibration bins")->check(CLI::PositiveNumber);
  analyze->add_option("--probe", probe_n, "Samples used for diversity metrics")->check(CLI::PositiveNumber);

  auto *energy = app.add_subcommand("energy", "Per-layer synaptic energy estimate");
  add_common(energy, common);
  energy->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  energy->add_option("--data", data, "Dataset used to measure spike activity");
  energy->add_option("--samples", samples, "Samples used to measure activity")->check(CLI::PositiveNumber);

  std::string kind = "blobs", path;
  std::uint32_t classes = 4, height = 28, width = 28;
  std::size_t per_class = 500;
  double noise = 0.1;
  std::uint64_t data_seed = 0;
  auto *make = app.add_subcommand("make-data", "Generate a synthetic dataset");
  make->add_option("output", path, "Output .sdf file")->required();
  make->add_option("--kind", kind, "blobs or stripes");
  make->add_option("--classes", classes, "Class count")->check(CLI::Range(1u, 255u));
  make->add_option("--per-class", per_class, "Samples per class")->check(CLI::PositiveNumber);
  make->add_option("--height", height, "Image height")->check(CLI::PositiveNumber);
  make->add_option("--width", width, "Image width")->check(CLI::PositiveNumber);
  make->add_option("--noise", noise, "Gaussian noise standard deviation")->check(CLI::NonNegativeNumber);
  make->add_option("--seed", data_seed, "Random seed");

  std::string idx_images, idx_labels, idx_out;
  auto *convert = app.add_subcommand("convert-idx", "Convert IDX image and label files to SDF");
  convert->add_option("images", idx_images, "IDX image file")->required()->check(CLI::ExistingFile);
  convert->add_option("labels", idx_labels, "IDX label file")->required()->check(CLI::ExistingFile);
  convert->add_option("output", idx_out, "Output .sdf file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (train->parsed())
      return cmd_train(common, out);
    if (eval->parsed())
      return cmd_eval(common, ckpt, data, out);
    if (sweep->parsed())
      return cmd_sweep_tau(common, taus, probe_n, out);
    if (analyze->parsed())
      return cmd_analyze(common, ckpt, data, bins, probe_n, out);
    if (energy->parsed())
      return cmd_energy(common, ckpt, data, samples, out);
    if (make->parsed())
      return cmd_make_data(kind, classes, per_class, height, width, noise, data_seed, path, out);
    if (convert->parsed()) {
      save_sdf(idx_out, load_idx(idx_images, idx_labels));
      out << "wrote " << idx_out << "\n";
      return 0;
    }
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

} // namespace spikematch::cli
