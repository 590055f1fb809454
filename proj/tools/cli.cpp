#include "cli.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "grl/dyngraph.h"
#include "grl/errors.h"
#include "grl/experiment.h"
#include "grl/gradcheck.h"

namespace grl::cli {

namespace fs = std::filesystem;

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      // data
      {"data", "", "edge-list file: `src dst time [weight]` per line"},
      {"cache", "", "binary snapshot cache written by ingest or synth"},
      {"snapshots", "10", "number of time windows to cut the edge list into"},
      {"history", "0", "snapshots used for training; 0 = all but the last"},
      {"directed", "false", "keep edge direction", true},
      {"binarize", "false", "replace summed edge weights with 1", true},
      {"dataset", "", "label for reports; default is the data file stem"},
      {"out", "runs/default", "output directory"},
      {"seed", "0", "root random seed"},
      {"checkpoint", "", "checkpoint to evaluate; default <out>/checkpoint.grle"},
      // model
      {"dim", "128", "final embedding size F"},
      {"input_dim", "0", "feature table width D; 0 = dim"},
      {"local_dim", "0", "local layer width D'; 0 = dim"},
      {"global_dim", "0", "global layer width F'; 0 = dim"},
      {"heads", "8", "attention heads in every layer"},
      {"leaky_slope", "0.2", "LeakyReLU negative slope in local attention"},
      {"position_embedding", "true", "add trainable position embeddings"},
      {"one_hot", "false", "identity node features instead of a learned table", true},
      {"mask", "causal", "temporal mask: causal or literal"},
      {"variant", "original", "original, no-local, no-global or no-temporal"},
      // training
      {"epochs", "200", "maximum training epochs"},
      {"lr", "0.001", "Adam learning rate"},
      {"neg_weight", "0.01", "weight w_n of the negative-sample term"},
      {"batch_size", "256", "nodes per minibatch"},
      {"patience", "20", "epochs without validation gain before stopping"},
      {"frozen_samples", "false", "reuse one set of walk samples for all epochs", true},
      // sampling
      {"walk_length", "40", "nodes per random walk"},
      {"walks_per_node", "10", "walks started at every non-isolated node"},
      {"window", "10", "co-occurrence window"},
      {"negatives", "10", "negative samples per positive pair"},
      // evaluation
      {"split_train", "0.2", "fraction of target pairs for fitting the predictor"},
      {"split_val", "0.1", "fraction of target pairs held for validation"},
      {"split_test", "0.7", "fraction of target pairs for reported metrics"},
      {"predictor_epochs", "200", "Adam epochs for the logistic predictor"},
      {"predictor_lr", "0.05", "learning rate for the logistic predictor"},
      // synthetic data
      {"generator", "periodic", "periodic or recency"},
      {"nodes", "40", "synthetic node count"},
      {"steps", "6", "synthetic history length; the target is one step later"},
      {"period", "2", "periodic: period p"},
      {"blocks", "4", "periodic: number of blocks"},
      {"rho", "0.5", "periodic: intra-block edge probability"},
      {"birth_rate", "20", "recency: mean new edges per step"},
      {"survival", "0.9", "recency: per-step edge survival probability"},
      // sweeps and checks
      {"grid", "", "sweep grid, e.g. heads=1,2,4 or history=2..T"},
      {"repeats", "1", "seeds per sweep point"},
      {"gradcheck_instances", "20", "random instances per primitive op"},
  };
  return keys;
}

namespace {

std::string to_flag(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string to_key(std::string flag) {
  std::replace(flag.begin(), flag.end(), '-', '_');
  return flag;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

template <typename F>
auto as_input_error(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string k = to_key(key);
  auto it = values_.find(k);
  if (it == values_.end()) throw InputError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("no config key '" + key + "'");
  return it->second;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InputError(key + " must be a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  return static_cast<std::size_t>(get_u64(key));
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(key + " must be a number, got '" + s + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InputError(key + " must be true or false, got '" + s + "'");
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(n, "expected key=value in '" + path + "'");
    set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  for (const auto& k : config_keys()) os << k.name << '=' << values_.at(k.name) << '\n';
  return os.str();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : config_keys()) j[k.name] = values_.at(k.name);
  return j;
}

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.embed_dim = get_size("dim");
  m.input_dim = get_size("input_dim");
  m.local_dim = get_size("local_dim");
  m.global_dim = get_size("global_dim");
  m.heads = get_size("heads");
  m.leaky_relu_slope = get_double("leaky_slope");
  m.use_position_embedding = get_bool("position_embedding");
  m.one_hot = get_bool("one_hot");
  as_input_error([&] {
    m.mask = parse_mask_mode(get("mask"));
    m.variant = parse_variant(get("variant"));
    m.validate();
    return 0;
  });
  return m;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.epochs = get_size("epochs");
  t.lr = get_double("lr");
  t.neg_weight = get_double("neg_weight");
  t.batch_size = get_size("batch_size");
  t.patience = get_size("patience");
  t.seed = get_u64("seed");
  t.frozen_samples = get_bool("frozen_samples");
  t.validate();
  return t;
}

WalkConfig RunConfig::walk() const {
  WalkConfig w;
  w.walk_length = get_size("walk_length");
  w.walks_per_node = get_size("walks_per_node");
  w.window = get_size("window");
  w.negatives = get_size("negatives");
  w.seed = get_u64("seed");
  w.validate();
  return w;
}

SplitFractions RunConfig::split() const {
  SplitFractions s;
  s.train = get_double("split_train");
  s.val = get_double("split_val");
  s.test = get_double("split_test");
  s.validate();
  return s;
}

PredictorConfig RunConfig::predictor() const {
  PredictorConfig p;
  p.epochs = get_size("predictor_epochs");
  p.lr = get_double("predictor_lr");
  if (p.epochs < 1 || !(p.lr > 0)) throw InputError("predictor epochs and lr must be positive");
  return p;
}

SynthConfig RunConfig::synth() const {
  SynthConfig s;
  s.nodes = get_size("nodes");
  s.steps = get_size("steps");
  s.seed = get_u64("seed");
  s.period = get_size("period");
  s.blocks = get_size("blocks");
  s.rho = get_double("rho");
  s.birth_rate = get_double("birth_rate");
  s.survival = get_double("survival");
  s.validate();
  return s;
}

namespace {

SnapshotSequence load_sequence(const RunConfig& cfg) {
  SnapshotSequence seq;
  if (!cfg.get("cache").empty()) {
    seq = load_snapshot_cache(cfg.get("cache"));
    if (cfg.get_bool("binarize")) {
      for (auto& s : seq.snapshots) s.binarize();
    }
  } else if (!cfg.get("data").empty()) {
    const std::string& path = cfg.get("data");
    std::ifstream in(path);
    if (!in) throw InputError("cannot open data file '" + path + "'");
    const ParsedEvents parsed = parse_edge_events(in, cfg.get_bool("directed"));
    PartitionOptions opts;
    opts.directed = cfg.get_bool("directed");
    opts.binarize = cfg.get_bool("binarize");
    seq = partition_snapshots(parsed, cfg.get_size("snapshots"), opts);
  } else {
    throw InputError("no dataset given; pass --data FILE or --cache FILE");
  }
  return seq;
}

std::string dataset_label(const RunConfig& cfg) {
  if (!cfg.get("dataset").empty()) return cfg.get("dataset");
  const std::string& path = cfg.get("cache").empty() ? cfg.get("data") : cfg.get("cache");
  return fs::path(path).stem().string();
}

// Number of history snapshots; the target, when needed, is the next one.
std::size_t history_length(const RunConfig& cfg, const SnapshotSequence& seq,
                           bool need_target) {
  const std::size_t t = seq.num_steps();
  std::size_t h = cfg.get_size("history");
  if (h == 0) h = t - 1;
  if (h < 2) throw InputError("need at least 2 history snapshots, have " + std::to_string(h));
  if (h > t || (need_target && h + 1 > t)) {
    throw InputError("history " + std::to_string(h) + " leaves no target snapshot among " +
                     std::to_string(t));
  }
  return h;
}

ExperimentConfig experiment_config(const RunConfig& cfg) {
  ExperimentConfig e;
  e.model = cfg.model();
  e.train = cfg.train();
  e.walk = cfg.walk();
  e.split = cfg.split();
  e.predictor = cfg.predictor();
  e.seed = cfg.get_u64("seed");
  return e;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string csv_table(const std::vector<MetricReport>& rows) {
  std::string s = MetricReport::csv_header() + "\n";
  for (const auto& r : rows) s += r.csv_row() + "\n";
  return s;
}

nlohmann::json reports_json(const std::vector<MetricReport>& rows, const RunConfig& cfg) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) arr.push_back(r.to_json());
  return {{"reports", arr}, {"config", cfg.to_json()}};
}

int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const SnapshotSequence seq = load_sequence(cfg);
  const fs::path dir = ensure_dir(cfg.get("out"));
  save_snapshot_cache(seq, (dir / "snapshots.grls").string());
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : seq.snapshots) {
    steps.push_back({{"index", s.index()},
                     {"edges", s.edges().size()},
                     {"total_weight", s.total_weight()}});
  }
  const nlohmann::json summary = {{"nodes", seq.node_count},
                                  {"steps", seq.num_steps()},
                                  {"directed", seq.directed},
                                  {"snapshots", steps},
                                  {"warnings", seq.warnings},
                                  {"config", cfg.to_json()}};
  write_text(dir / "ingest.json", dump(summary));
  std::ostringstream ids;
  for (NodeId v = 0; v < seq.id_map.size(); ++v) ids << v << ' ' << seq.id_map.label(v) << '\n';
  write_text(dir / "id_map.txt", ids.str());
  write_text(dir / "config.txt", cfg.echo());
  for (const auto& w : seq.warnings) err << "warning: " << w << '\n';
  out << "ingested " << seq.node_count << " nodes in " << seq.num_steps() << " snapshots -> "
      << (dir / "snapshots.grls").string() << '\n';
  return 0;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const SynthConfig sc = cfg.synth();
  const std::string& gen = cfg.get("generator");
  SynthDataset ds;
  if (gen == "periodic") {
    ds = gen_periodic(sc);
  } else if (gen == "recency") {
    ds = gen_recency(sc);
  } else {
    throw InputError("unknown generator '" + gen + "'; use periodic or recency");
  }
  const fs::path dir = ensure_dir(cfg.get("out"));
  std::ostringstream edges;
  write_edge_list(edges, ds.events);
  write_text(dir / "edges.txt", edges.str());
  SnapshotSequence all = ds.history;
  all.snapshots.push_back(ds.target);
  save_snapshot_cache(all, (dir / "snapshots.grls").string());
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& s : all.snapshots) counts.push_back(s.edges().size());
  write_text(dir / "synth.json", dump({{"generator", gen},
                                       {"synth", sc.to_json()},
                                       {"edges_per_step", counts},
                                       {"config", cfg.to_json()}}));
  write_text(dir / "config.txt", cfg.echo());
  out << "wrote " << all.num_steps() << " snapshots (" << sc.steps
      << " history + 1 target) to " << dir.string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ExperimentConfig ec = experiment_config(cfg);
  const SnapshotSequence seq = load_sequence(cfg);
  const std::size_t h = history_length(cfg, seq, false);
  const SnapshotSequence hist = seq.prefix(h);
  for (const auto& w : seq.warnings) err << "warning: " << w << '\n';
  const fs::path dir = ensure_dir(cfg.get("out"));
  const TrainResult res = train(hist, ec.model, ec.train, ec.walk, [&err](const EpochRecord& r) {
    err << "epoch " << r.epoch << " loss " << r.loss;
    if (r.val_auc) err << " val_auc " << *r.val_auc;
    err << '\n';
  });
  Checkpoint ck;
  ck.model = ec.model;
  ck.num_nodes = hist.node_count;
  ck.num_steps = h;
  ck.extra = {{"config", cfg.to_json()}};
  ck.params = res.params;
  save_checkpoint((dir / "checkpoint.grle").string(), ck);
  nlohmann::json report = res.report.to_json();
  report["run_config"] = cfg.to_json();
  write_text(dir / "train_report.json", dump(report));
  nlohmann::json timing = nlohmann::json::array();
  for (const auto& e : res.report.epochs) timing.push_back(e.wall_seconds);
  write_text(dir / "timing.json", dump({{"epoch_wall_seconds", timing}}));
  write_text(dir / "config.txt", cfg.echo());
  out << "trained " << res.report.epochs.size() << " epochs on " << h
      << " snapshots; best epoch " << res.report.best_epoch << " -> "
      << (dir / "checkpoint.grle").string() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const std::string path = cfg.get("checkpoint").empty()
                               ? (fs::path(cfg.get("out")) / "checkpoint.grle").string()
                               : cfg.get("checkpoint");
  Checkpoint ck = load_checkpoint(path);
  const SnapshotSequence seq = load_sequence(cfg);
  if (seq.node_count != ck.num_nodes) {
    throw InputError("checkpoint was trained on " + std::to_string(ck.num_nodes) +
                     " nodes but the data has " + std::to_string(seq.node_count));
  }
  const std::size_t h = ck.num_steps;
  if (h + 1 > seq.num_steps()) {
    throw InputError("checkpoint covers " + std::to_string(h) + " snapshots; data has no target snapshot " +
                     std::to_string(h + 1));
  }
  const SnapshotSequence hist = seq.prefix(h);
  const std::string label = dataset_label(cfg);
  const EvalPairSet set =
      make_eval_set(hist, seq.snapshots[h], cfg.split(), cfg.get_u64("seed"));
  std::vector<MetricReport> rows;
  rows.push_back(evaluate_model(hist, ck.params, ck.model, set, cfg.predictor(), label, "model"));
  for (auto& r : evaluate_baselines(hist, set, label)) rows.push_back(std::move(r));
  const fs::path dir = ensure_dir(cfg.get("out"));
  const std::string csv = csv_table(rows);
  write_text(dir / "metrics.csv", csv);
  write_text(dir / "metrics.json", dump(reports_json(rows, cfg)));
  write_text(dir / "config.txt", cfg.echo());
  out << csv;
  return 0;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  ExperimentConfig ec = experiment_config(cfg);
  const SnapshotSequence seq = load_sequence(cfg);
  const std::size_t h = history_length(cfg, seq, true);
  const SnapshotSequence hist = seq.prefix(h);
  const std::string label = dataset_label(cfg);
  std::vector<MetricReport> rows;
  for (Variant v : {Variant::kOriginal, Variant::kNoLocal, Variant::kNoGlobal,
                    Variant::kNoTemporal}) {
    ec.model.variant = v;
    as_input_error([&] {
      ec.model.validate();
      return 0;
    });
    const ExperimentResult r = run_experiment(hist, seq.snapshots[h], ec, label, to_string(v));
    rows.push_back(r.model);
  }
  const fs::path dir = ensure_dir(cfg.get("out"));
  const std::string csv = csv_table(rows);
  write_text(dir / "ablation.csv", csv);
  write_text(dir / "ablation.json", dump(reports_json(rows, cfg)));
  write_text(dir / "config.txt", cfg.echo());
  out << csv;
  return 0;
}

struct Grid {
  std::string key;
  std::vector<std::string> values;
};

Grid parse_grid(const std::string& spec, std::size_t max_history) {
  const auto eq = spec.find('=');
  if (spec.empty() || eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw InputError("invalid grid '" + spec + "'; expected key=v1,v2,... or key=a..b");
  }
  Grid g;
  g.key = to_key(spec.substr(0, eq));
  const std::string rhs = spec.substr(eq + 1);
  const auto dots = rhs.find("..");
  if (dots != std::string::npos) {
    auto bound = [&](const std::string& s) -> std::size_t {
      if (s == "T") return max_history;
      std::size_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
        throw InputError("invalid grid range bound '" + s + "'");
      }
      return v;
    };
    const std::size_t lo = bound(rhs.substr(0, dots));
    const std::size_t hi = bound(rhs.substr(dots + 2));
    if (lo > hi) throw InputError("empty grid range '" + rhs + "'");
    for (std::size_t v = lo; v <= hi; ++v) g.values.push_back(std::to_string(v));
  } else {
    std::stringstream ss(rhs);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) throw InputError("empty value in grid '" + spec + "'");
      g.values.push_back(item);
    }
  }
  return g;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::size_t repeats = cfg.get_size("repeats");
  if (repeats < 1) throw InputError("repeats must be >= 1");
  const SnapshotSequence base = load_sequence(cfg);
  const Grid grid = parse_grid(cfg.get("grid"), base.num_steps() - 1);
  static const std::vector<std::string> reload_keys = {"data", "cache", "snapshots",
                                                       "directed", "binarize"};
  const bool reload =
      std::find(reload_keys.begin(), reload_keys.end(), grid.key) != reload_keys.end();

  // Validate every grid point before running any of them.
  std::vector<RunConfig> points;
  for (const auto& value : grid.values) {
    RunConfig c = cfg;
    c.set(grid.key, value);
    experiment_config(c);
    points.push_back(c);
  }

  std::ostringstream csv;
  csv << "key,value,repeats,auc_mean,auc_std,map_mean,map_std\n";
  nlohmann::json rows = nlohmann::json::array();
  const std::string label = dataset_label(cfg);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const SnapshotSequence seq = reload ? load_sequence(points[i]) : base;
    const std::size_t h = history_length(points[i], seq, true);
    const SnapshotSequence hist = seq.prefix(h);
    std::vector<double> aucs;
    std::vector<double> maps;
    for (std::size_t r = 0; r < repeats; ++r) {
      RunConfig c = points[i];
      c.set("seed", std::to_string(cfg.get_u64("seed") + r));
      const ExperimentConfig ec = experiment_config(c);
      const EvalPairSet set = make_eval_set(hist, seq.snapshots[h], ec.split, ec.seed);
      TrainResult tr = train(hist, ec.model, ec.train, ec.walk);
      const MetricReport m =
          evaluate_model(hist, tr.params, ec.model, set, ec.predictor, label, "model");
      aucs.push_back(m.auc);
      maps.push_back(m.map);
      err << grid.key << '=' << grid.values[i] << " repeat " << r << " auc " << m.auc << '\n';
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f", repeats, mean_of(aucs),
                  std_of(aucs), mean_of(maps), std_of(maps));
    csv << grid.key << ',' << grid.values[i] << ',' << buf << '\n';
    rows.push_back({{"key", grid.key},
                    {"value", grid.values[i]},
                    {"repeats", repeats},
                    {"auc", aucs},
                    {"map", maps},
                    {"auc_mean", mean_of(aucs)},
                    {"auc_std", std_of(aucs)},
                    {"map_mean", mean_of(maps)},
                    {"map_std", std_of(maps)}});
  }
  const fs::path dir = ensure_dir(cfg.get("out"));
  write_text(dir / "sweep.csv", csv.str());
  write_text(dir / "sweep.json", dump({{"rows", rows}, {"config", cfg.to_json()}}));
  write_text(dir / "config.txt", cfg.echo());
  out << csv.str();
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  constexpr double kOpTolerance = 1e-6;
  constexpr double kModelTolerance = 1e-4;
  const std::uint64_t seed = cfg.get_u64("seed");
  bool ok = true;
  char buf[160];
  std::istringstream echo(cfg.echo());
  for (std::string line; std::getline(echo, line);) out << "# " << line << '\n';
  out << "check,max_rel_error,tolerance,status\n";
  for (const OpCheck& c : check_all_ops(seed, cfg.get_size("gradcheck_instances"))) {
    const bool pass = c.max_rel_error < kOpTolerance;
    ok = ok && pass;
    std::snprintf(buf, sizeof(buf), "op:%s,%.3e,%.0e,%s\n", c.name.c_str(), c.max_rel_error,
                  kOpTolerance, pass ? "PASS" : "FAIL");
    out << buf;
  }
  ModelGradCheckConfig mc;
  mc.seed = seed;
  as_input_error([&] {
    mc.mask = parse_mask_mode(cfg.get("mask"));
    mc.variant = parse_variant(cfg.get("variant"));
    return 0;
  });
  const GradCheckResult r = model_gradcheck(mc);
  const bool pass = r.max_rel_error < kModelTolerance;
  ok = ok && pass;
  std::snprintf(buf, sizeof(buf), "model:%s/%s,%.3e,%.0e,%s\n", cfg.get("mask").c_str(),
                cfg.get("variant").c_str(), r.max_rel_error, kModelTolerance,
                pass ? "PASS" : "FAIL");
  out << buf;
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic link prediction with local, global and temporal attention", "grl"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "flat key=value config file; flags override it");

  std::map<std::string, std::string> given;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> options;
  for (const auto& k : config_keys()) {
    const std::string flag = "--" + to_flag(k.name);
    const std::string help = k.help + " (default: " +
                             (k.default_value.empty() ? "none" : k.default_value) + ")";
    options[k.name] = k.is_flag ? app.add_flag(flag, flags[k.name], help)
                                : app.add_option(flag, given[k.name], help);
  }
  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"ingest", "parse an edge list into snapshots and write a binary cache"},
      {"synth", "generate a periodic or recency-driven synthetic dataset"},
      {"train", "train embeddings and write a checkpoint and report"},
      {"eval", "score the next snapshot with the model and both baselines"},
      {"ablate", "train and evaluate the four model variants"},
      {"sweep", "evaluate the model over a parameter grid"},
      {"gradcheck", "finite-difference check of all ops and the full model"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : verbs) subs[name] = app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& k : config_keys()) {
      if (options[k.name]->count() == 0) continue;
      cfg.set(k.name, k.is_flag ? (flags[k.name] ? "true" : "false") : given[k.name]);
    }
    std::string verb;
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) verb = name;
    }
    if (verb == "ingest") return cmd_ingest(cfg, out, err);
    if (verb == "synth") return cmd_synth(cfg, out, err);
    if (verb == "train") return cmd_train(cfg, out, err);
    if (verb == "eval") return cmd_eval(cfg, out, err);
    if (verb == "ablate") return cmd_ablate(cfg, out, err);
    if (verb == "sweep") return cmd_sweep(cfg, out, err);
    if (verb == "gradcheck") return cmd_gradcheck(cfg, out, err);
    err << "error: no command given\n";
    return 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace grl::cli
