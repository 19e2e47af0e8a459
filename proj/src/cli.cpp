#include "kgns/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "kgns/checkpoint.hpp"
#include "kgns/errors.hpp"
#include "kgns/eval.hpp"
#include "kgns/presets.hpp"
#include "kgns/scenarios.hpp"
#include "kgns/seed.hpp"
#include "kgns/trainer.hpp"

#ifndef KGNS_VERSION
#define KGNS_VERSION "dev"
#endif

namespace kgns {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json dataset_checksums(const fs::path& dir) {
  json sums = json::object();
  for (const char* name : {"train.txt", "valid.txt", "test.txt"}) {
    const auto path = dir / name;
    if (!fs::exists(path)) continue;
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(read_file(path))));
    sums[name] = std::string("fnv1a64:") + hex;
  }
  return sums;
}

struct TrainArgs {
  std::string config_path, preset, model, loss, subsampling, dataset, out, lr_schedule;
  double gamma = 0, alpha = 0, lr = 0;
  std::size_t nu = 0, batch = 0, dim = 0, steps = 0, eval_every = 0;
  std::uint64_t seed = 0;
  int p_norm = 0;
  bool no_rescale = false;
};

struct TrainOptions {
  CLI::Option *config, *preset, *model, *loss, *gamma, *nu, *alpha, *subsampling, *lr, *batch, *dim, *steps,
      *seed, *dataset, *out, *eval_every, *p_norm, *lr_schedule;
};

TrainConfig resolve_config(const TrainArgs& a, const TrainOptions& o) {
  TrainConfig cfg;
  if (o.preset->count()) {
    auto p = find_preset(a.preset);
    if (!p) throw ConfigError("unknown preset '" + a.preset + "'");
    cfg = p->config;
  }
  if (o.config->count()) cfg = config_from_json(read_file(a.config_path), cfg);
  if (o.model->count()) cfg.model = parse_model_kind(a.model);
  if (o.loss->count()) cfg.loss.family = parse_loss_family(a.loss);
  if (o.gamma->count()) cfg.loss.margin = a.gamma;
  if (o.nu->count()) cfg.loss.num_negatives = a.nu;
  if (o.alpha->count()) cfg.loss.temperature = a.alpha;
  if (o.subsampling->count()) cfg.loss.subsampling = parse_subsampling(a.subsampling);
  if (a.no_rescale) cfg.loss.rescale_subsampling = false;
  if (o.lr->count()) cfg.learning_rate = a.lr;
  if (o.batch->count()) cfg.batch_size = a.batch;
  if (o.dim->count()) cfg.dim = a.dim;
  if (o.steps->count()) cfg.max_steps = a.steps;
  if (o.seed->count()) cfg.seed = a.seed;
  if (o.dataset->count()) cfg.dataset_path = a.dataset;
  if (o.eval_every->count()) cfg.eval_every = a.eval_every;
  if (o.p_norm->count()) cfg.p_norm = a.p_norm;
  if (o.lr_schedule->count()) {
    if (a.lr_schedule == "constant") cfg.lr_schedule = LrSchedule::kConstant;
    else if (a.lr_schedule == "halve") cfg.lr_schedule = LrSchedule::kHalveAtFraction;
    else throw ConfigError("unknown lr schedule '" + a.lr_schedule + "'");
  }
  validate(cfg);
  if (cfg.dataset_path.empty()) throw ConfigError("no dataset given (--dataset or config key \"dataset\")");
  return cfg;
}

int cmd_train(const TrainArgs& a, const TrainOptions& o, std::ostream& out, std::ostream& err) {
  TrainConfig cfg;
  try {
    cfg = resolve_config(a, o);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  const fs::path run_dir = a.out;
  if (fs::exists(run_dir / "manifest.json")) {
    err << "error: " << run_dir.string() << " already contains a run\n";
    return kExitUsage;
  }

  const Dataset data = load_dataset(cfg.dataset_path);
  json manifest = {{"tool", "kgns"},
                   {"version", KGNS_VERSION},
                   {"seed", cfg.seed},
                   {"config", json::parse(config_to_json(cfg))},
                   {"dataset", {{"path", cfg.dataset_path}, {"checksums", dataset_checksums(cfg.dataset_path)}}},
                   {"started", utc_now()},
                   {"finished", nullptr},
                   {"status", "running"}};
  fs::create_directories(run_dir);
  write_file_atomic(run_dir / "manifest.json", manifest.dump(2) + "\n");

  std::ofstream metrics(run_dir / "metrics.jsonl");
  if (!metrics) throw DataError("cannot write " + (run_dir / "metrics.jsonl").string());
  auto sink = [&](const MetricRecord& r) {
    metrics << metric_json(r) << "\n";
    metrics.flush();
    out << metric_json(r) << "\n";
  };

  try {
    const auto result = train(cfg, data, sink);
    save_checkpoint(run_dir / "checkpoint.bin", result.params, cfg.seed);
  } catch (const NumericalAbort& e) {
    manifest["status"] = "aborted";
    manifest["error"] = e.what();
    manifest["finished"] = utc_now();
    write_file_atomic(run_dir / "manifest.json", manifest.dump(2) + "\n");
    err << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  }
  manifest["status"] = "complete";
  manifest["finished"] = utc_now();
  write_file_atomic(run_dir / "manifest.json", manifest.dump(2) + "\n");
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset, const std::string& split, bool raw,
             std::ostream& out, std::ostream& err) {
  const auto ckpt = load_checkpoint(checkpoint);
  const Dataset data = load_dataset(dataset);
  if (ckpt.header.num_entities != data.vocab.num_entities() ||
      ckpt.header.num_relations != data.vocab.num_relations()) {
    err << "error: vocabulary size mismatch: checkpoint has " << ckpt.header.num_entities << " entities and "
        << ckpt.header.num_relations << " relations, dataset has " << data.vocab.num_entities() << " and "
        << data.vocab.num_relations() << "\n";
    return kExitData;
  }
  const QuerySet queries = make_queries(data.split(split));
  if (queries.empty()) {
    err << "error: split '" << split << "' is empty\n";
    return kExitData;
  }
  const FilterIndex filter = build_filter_index(data.train, data.valid, data.test);
  const auto report = evaluate(ckpt.params, queries, filter, !raw);
  out << report_json(report) << "\n" << report_tsv_header() << "\n" << report_tsv_row(report) << "\n";
  return kExitOk;
}

int cmd_freq(const std::string& dataset, const std::string& method, std::ostream& out) {
  const auto m = parse_subsampling(method);
  const Dataset data = load_dataset(dataset);
  const FrequencyTable freq = count_frequencies(data.train);
  const SubsamplingWeights weights(m, freq, data.train);
  for (const auto& t : data.train) {
    const auto names = data.vocab.decode(t);
    const auto raw = weights.triple_raw(t);
    const auto scaled = weights.triple_rescaled(t);
    out << json{{"head", names[0]},
                {"rel", names[1]},
                {"tail", names[2]},
                {"pair_freq", freq.pair_frequency(t)},
                {"A", raw.positive},
                {"B", raw.negative},
                {"A_rescaled", scaled.positive},
                {"B_rescaled", scaled.negative}}
               .dump()
        << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Negative-sampling lab for knowledge graph embeddings", "kgns"};
  app.set_version_flag("--version", KGNS_VERSION);
  app.require_subcommand(1);

  TrainArgs ta;
  TrainOptions to{};
  auto* train_cmd = app.add_subcommand("train", "train a model and write a run directory");
  to.config = train_cmd->add_option("--config", ta.config_path, "JSON config file");
  to.preset = train_cmd->add_option("--preset", ta.preset, "named preset, e.g. wn18rr-rotate");
  to.model = train_cmd->add_option("--model", ta.model, "rescal|distmult|complex|transe|rotate|hake");
  to.loss = train_cmd->add_option("--loss", ta.loss, "ns|ns-kge|sans");
  to.gamma = train_cmd->add_option("--gamma", ta.gamma, "margin");
  to.nu = train_cmd->add_option("--nu", ta.nu, "negatives per positive");
  to.alpha = train_cmd->add_option("--alpha", ta.alpha, "SANS temperature");
  to.subsampling = train_cmd->add_option("--subsampling", ta.subsampling, "none|base|freq|uniq");
  to.lr = train_cmd->add_option("--lr", ta.lr, "learning rate");
  to.batch = train_cmd->add_option("--batch", ta.batch, "batch size");
  to.dim = train_cmd->add_option("--dim", ta.dim, "embedding dimension");
  to.steps = train_cmd->add_option("--steps", ta.steps, "training steps");
  to.seed = train_cmd->add_option("--seed", ta.seed, "root seed");
  to.dataset = train_cmd->add_option("--dataset", ta.dataset, "directory with train/valid/test.txt");
  to.out = train_cmd->add_option("--out", ta.out, "run directory")->required();
  to.eval_every = train_cmd->add_option("--eval-every", ta.eval_every, "validation interval in steps");
  to.p_norm = train_cmd->add_option("--p-norm", ta.p_norm, "distance norm (1 or 2)");
  to.lr_schedule = train_cmd->add_option("--lr-schedule", ta.lr_schedule, "constant|halve");
  train_cmd->add_flag("--no-rescale", ta.no_rescale, "keep subsampling weights unscaled");

  std::string ckpt, eval_dataset, split = "test";
  bool raw = false;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--dataset", eval_dataset, "dataset directory")->required();
  eval_cmd->add_option("--split", split, "train|valid|test")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  eval_cmd->add_flag("--raw", raw, "disable filtering");

  std::string scenario;
  std::uint64_t theory_seed = 0;
  auto* theory_cmd = app.add_subcommand("theory", "run a theory scenario");
  theory_cmd->add_option("scenario", scenario, "prop1..prop6 or margins")
      ->required()
      ->check(CLI::IsMember(scenario_names()));
  theory_cmd->add_option("--seed", theory_seed, "root seed");

  std::string freq_dataset, method = "base";
  auto* freq_cmd = app.add_subcommand("freq", "dump per-triple subsampling weights");
  freq_cmd->add_option("--dataset", freq_dataset, "dataset directory")->required();
  freq_cmd->add_option("--method", method, "none|base|freq|uniq")
      ->check(CLI::IsMember({"none", "base", "freq", "uniq"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, to, out, err);
    if (eval_cmd->parsed()) return cmd_eval(ckpt, eval_dataset, split, raw, out, err);
    if (theory_cmd->parsed()) {
      out << format_report(run_scenario(scenario, theory_seed));
      return kExitOk;
    }
    if (freq_cmd->parsed()) return cmd_freq(freq_dataset, method, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalAbort& e) {
    err << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace kgns
