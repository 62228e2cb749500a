#include "darts/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "darts/serialize.hpp"

namespace darts {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::uint64_t> ExperimentConfig::run_seeds() const {
  return seeds.empty() ? std::vector<std::uint64_t>{search.seed} : seeds;
}

// ---------------------------------------------------------------------------
// Config text

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

const char* task_name(TaskKind t) {
  switch (t) {
    case TaskKind::kToy: return "toy";
    case TaskKind::kSynthetic: return "synthetic";
    case TaskKind::kDelimited: return "csv";
  }
  return "?";
}

TaskKind task_from(const std::string& key, const std::string& v) {
  if (v == "toy") return TaskKind::kToy;
  if (v == "synthetic") return TaskKind::kSynthetic;
  if (v == "csv") return TaskKind::kDelimited;
  throw ConfigError("config key '" + key + "': expected toy, synthetic or csv, got '" + v + "'");
}

SearchMode mode_from(const std::string& key, const std::string& v) {
  try {
    return mode_from_name(v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::string seeds_text(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::vector<std::uint64_t> seeds_from(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_u64(key, trim(item)));
  return out;
}

struct KeyDef {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define DARTS_DOUBLE(name, field)                                                        \
  KeyDef {                                                                               \
    name, [](ExperimentConfig& c, const std::string& k, const std::string& v) {          \
      c.field = to_double(k, v);                                                         \
    },                                                                                   \
        [](const ExperimentConfig& c) { return format_double(c.field); }                 \
  }
#define DARTS_UINT(name, field)                                                          \
  KeyDef {                                                                               \
    name, [](ExperimentConfig& c, const std::string& k, const std::string& v) {          \
      c.field = static_cast<decltype(c.field)>(to_u64(k, v));                            \
    },                                                                                   \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                \
  }
#define DARTS_BOOL(name, field)                                                          \
  KeyDef {                                                                               \
    name, [](ExperimentConfig& c, const std::string& k, const std::string& v) {          \
      c.field = to_bool(k, v);                                                           \
    },                                                                                   \
        [](const ExperimentConfig& c) { return from_bool(c.field); }                     \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"task", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.task = task_from(k, v); },
       [](const ExperimentConfig& c) { return std::string(task_name(c.task)); }},
      {"mode", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.search.mode = mode_from(k, v); },
       [](const ExperimentConfig& c) { return std::string(mode_name(c.search.mode)); }},
      {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.search.seed = to_u64(k, v); },
       [](const ExperimentConfig& c) { return std::to_string(c.search.seed); }},
      {"seeds", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seeds = seeds_from(k, v); },
       [](const ExperimentConfig& c) { return seeds_text(c.seeds); }},
      DARTS_UINT("iterations", search.iterations),
      DARTS_UINT("batch_size", search.batch_size),
      DARTS_UINT("snapshot_every", search.snapshot_every),
      {"xi",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "auto") {
           c.search.xi.reset();
         } else {
           c.search.xi = to_double(k, v);
         }
       },
       [](const ExperimentConfig& c) { return c.search.xi ? format_double(*c.search.xi) : std::string("auto"); }},
      DARTS_DOUBLE("epsilon_scale", search.epsilon_scale),
      DARTS_DOUBLE("eta_w", search.eta_w),
      DARTS_DOUBLE("momentum", search.momentum),
      DARTS_DOUBLE("weight_decay_w", search.weight_decay_w),
      DARTS_BOOL("cosine", search.cosine),
      DARTS_DOUBLE("grad_clip", search.grad_clip),
      DARTS_BOOL("momentum_unroll", search.momentum_unroll),
      {"alpha_optimizer",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "adam") {
           c.search.alpha_optimizer = AlphaOptimizer::kAdam;
         } else if (v == "sgd") {
           c.search.alpha_optimizer = AlphaOptimizer::kSgd;
         } else {
           throw ConfigError("config key '" + k + "': expected adam or sgd, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.search.alpha_optimizer == AlphaOptimizer::kAdam ? "adam" : "sgd");
       }},
      DARTS_DOUBLE("eta_alpha", search.eta_alpha),
      DARTS_DOUBLE("beta1", search.beta1),
      DARTS_DOUBLE("beta2", search.beta2),
      DARTS_DOUBLE("weight_decay_alpha", search.weight_decay_alpha),
      {"joint",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "coordinate") {
           c.search.joint = JointSubMode::kCoordinate;
         } else if (v == "simultaneous") {
           c.search.joint = JointSubMode::kSimultaneous;
         } else {
           throw ConfigError("config key '" + k + "': expected coordinate or simultaneous, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.search.joint == JointSubMode::kCoordinate ? "coordinate" : "simultaneous");
       }},
      DARTS_UINT("random_samples", search.random_samples),
      DARTS_UINT("cell.input_arity", search.cell.input_arity),
      DARTS_UINT("cell.intermediates", search.cell.intermediates),
      DARTS_UINT("cell.hidden", search.cell.hidden),
      DARTS_UINT("cell.k", search.cell.k),
      {"cell.reduction",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "mean") {
           c.search.cell.reduction = OutputReduction::kMean;
         } else if (v == "concat") {
           c.search.cell.reduction = OutputReduction::kConcat;
         } else {
           throw ConfigError("config key '" + k + "': expected mean or concat, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.search.cell.reduction == OutputReduction::kMean ? "mean" : "concat");
       }},
      DARTS_UINT("retrain.steps", search.retrain.steps),
      DARTS_UINT("retrain.batch_size", search.retrain.batch_size),
      DARTS_DOUBLE("retrain.learning_rate", search.retrain.learning_rate),
      DARTS_DOUBLE("retrain.momentum", search.retrain.momentum),
      DARTS_DOUBLE("retrain.weight_decay", search.retrain.weight_decay),
      DARTS_DOUBLE("retrain.grad_clip", search.retrain.grad_clip),
      DARTS_BOOL("retrain.cosine", search.retrain.cosine),
      DARTS_UINT("retrain.seed", search.retrain.seed),
      {"data_path", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.data_path = v; },
       [](const ExperimentConfig& c) { return c.data_path; }},
      DARTS_DOUBLE("holdout_fraction", holdout_fraction),
      DARTS_UINT("split_seed", split_seed),
      DARTS_UINT("synthetic.samples", synthetic.samples),
      DARTS_UINT("synthetic.dims", synthetic.dims),
      DARTS_UINT("synthetic.classes", synthetic.classes),
      DARTS_UINT("synthetic.clusters_per_class", synthetic.clusters_per_class),
      DARTS_DOUBLE("synthetic.noise", synthetic.noise),
      DARTS_DOUBLE("synthetic.test_fraction", synthetic.test_fraction),
      DARTS_UINT("synthetic.seed", synthetic.seed),
  };
  return table;
}

#undef DARTS_DOUBLE
#undef DARTS_UINT
#undef DARTS_BOOL

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& d : key_table()) out.emplace_back(d.key);
    return out;
  }();
  return keys;
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, std::pair<std::string, std::size_t>> entries;  // key -> (value, line)
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (entries.contains(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key + "' repeated");
    }
    entries.emplace(std::move(key), std::make_pair(std::move(value), line_no));
  }

  ExperimentConfig config;
  if (auto it = entries.find("task"); it != entries.end() && it->second.first == "toy") {
    SearchMode mode = SearchMode::kSecondOrder;
    if (auto m = entries.find("mode"); m != entries.end()) mode = mode_from("mode", m->second.first);
    config.search = toy_search_config(mode);
  }
  for (const auto& def : key_table()) {
    auto it = entries.find(def.key);
    if (it == entries.end()) continue;
    def.set(config, def.key, it->second.first);
  }
  try {
    config.search.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (config.holdout_fraction <= 0.0 || config.holdout_fraction >= 1.0) {
    throw ConfigError("config key 'holdout_fraction': must lie in (0, 1)");
  }
  if (config.task == TaskKind::kDelimited && config.data_path.empty()) {
    throw ConfigError("config: task = csv needs data_path");
  }
  return config;
}

ExperimentConfig desk_scale_config() {
  ExperimentConfig c;
  c.synthetic.samples = 4000;
  c.synthetic.clusters_per_class = 6;
  c.synthetic.noise = 0.8;
  c.search.cell.hidden = 8;
  c.search.iterations = 600;
  c.search.eta_alpha = 1e-2;
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& def : key_table()) {
    out += def.key;
    out += " = ";
    out += def.get(config);
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_text(config))));
  return buf;
}

std::shared_ptr<Dataset> build_dataset(const ExperimentConfig& config) {
  Dataset base = [&] {
    if (config.task == TaskKind::kDelimited) return load_delimited(config.data_path);
    if (config.task == TaskKind::kSynthetic) return make_synthetic_classification(config.synthetic);
    throw ConfigError("the toy task has no dataset");
  }();
  if (base.count(SplitTag::kValidation) == 0) {
    base = holdout_split(base, config.holdout_fraction, config.split_seed);
  }
  return std::make_shared<Dataset>(std::move(base));
}

// ---------------------------------------------------------------------------
// Artifacts

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["tool_version"] = m.tool_version;
  j["config_hash"] = m.config_hash;
  j["seeds"] = m.seeds;
  j["layout"] = {{"trajectory", m.trajectory},
                 {"alpha_dir", m.alpha_dir},
                 {"genotype", m.genotype},
                 {"summary", m.summary}};
  j["files"] = m.files;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    const json& layout = j.at("layout");
    m.trajectory = layout.at("trajectory").get<std::string>();
    m.alpha_dir = layout.at("alpha_dir").get<std::string>();
    m.genotype = layout.at("genotype").get<std::string>();
    m.summary = layout.at("summary").get<std::string>();
    m.files = j.at("files").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

std::string trajectory_csv(const Trajectory& trajectory) {
  const bool scalar = !trajectory.records.empty() && !trajectory.records.front().alpha_values.empty();
  std::string out = "iteration,train_loss,val_loss,eta_w,xi,epsilon_used,alpha_snapshot_path";
  if (scalar) out += ",alpha,w";
  out += '\n';
  for (const auto& r : trajectory.records) {
    out += std::to_string(r.iteration) + ',' + format_double(r.train_loss) + ',' +
           format_double(r.val_loss) + ',' + format_double(r.eta_w) + ',' + format_double(r.xi) + ',' +
           format_double(r.epsilon_used) + ',' + r.alpha_snapshot;
    if (scalar) {
      out += ',' + format_double(r.alpha_values.at(0)) + ',' + format_double(r.weight_values.at(0));
    }
    out += '\n';
  }
  return out;
}

std::string genotype_summary(const Genotype& g) {
  std::string out;
  for (std::size_t m = 0; m < g.nodes.size(); ++m) {
    out += "node " + std::to_string(g.spec.first_intermediate() + m) + ":";
    for (std::size_t i = 0; i < g.nodes[m].size(); ++i) {
      out += (i ? ", " : " ") + std::to_string(g.nodes[m][i].pred) + " " + std::string(op_name(g.nodes[m][i].op));
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> write_run_artifacts(const fs::path& dir, const SearchConfig& config,
                                             const Trajectory& trajectory,
                                             const std::string& extra_summary) {
  std::vector<std::string> files;
  fs::create_directories(dir);
  write_text_file(dir / "trajectory.csv", trajectory_csv(trajectory));
  files.push_back("trajectory.csv");
  for (const auto& snap : trajectory.snapshots) {
    write_alpha(dir / snap.path, config.cell, AlphaParams(config.cell.edge_count(), snap.alpha));
    files.push_back(snap.path);
  }
  if (trajectory.genotype) {
    write_genotype(dir / "genotype.json", *trajectory.genotype);
    files.push_back("genotype.json");
  }

  std::ostringstream s;
  s << "mode: " << mode_name(config.mode) << '\n';
  s << "seed: " << config.seed << '\n';
  s << "iterations_run: " << trajectory.records.size() << '\n';
  if (!trajectory.records.empty()) {
    s << "final_train_loss: " << format_double(trajectory.records.back().train_loss) << '\n';
    s << "final_val_loss: " << format_double(trajectory.records.back().val_loss) << '\n';
  }
  s << "diverged: " << from_bool(trajectory.diverged) << '\n';
  if (!trajectory.failure.empty()) s << "failure: " << trajectory.failure << '\n';
  s << "skipped_corrections: " << trajectory.skipped_corrections << '\n';
  const auto& c = trajectory.counters;
  s << "forward_passes: " << c.forward_passes << '\n';
  s << "backward_passes: " << c.backward_passes << '\n';
  s << "weight_gradients: " << c.weight_gradients << '\n';
  s << "alpha_gradients: " << c.alpha_gradients << '\n';
  if (trajectory.genotype) {
    s << "mean_alpha_entropy: "
      << format_double(mean_edge_entropy(AlphaParams(config.cell.edge_count(), trajectory.final_alpha)))
      << '\n';
    s << "genotype:\n" << genotype_summary(*trajectory.genotype);
  } else {
    s << "final_alpha: " << format_double(trajectory.final_alpha.at(0)) << '\n';
    s << "final_w: " << format_double(trajectory.final_weights.at(0)) << '\n';
  }
  s << extra_summary;
  write_text_file(dir / "summary.txt", s.str());
  files.push_back("summary.txt");
  return files;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void finish_manifest(const fs::path& dir, RunManifest manifest, std::vector<std::string> files) {
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  manifest.files = std::move(files);
  write_text_file(dir / "manifest.json", manifest_to_json(manifest));
}

/// Maps exceptions onto exit codes; everything that is not numerical is an input problem.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

std::string scientific_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

std::string test_hygiene_line(const Dataset& data) {
  return "test_rows_read: " + std::to_string(data.access_count(SplitTag::kTest)) + "\n";
}

}  // namespace

int cmd_search(const fs::path& config_path, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const ExperimentConfig config = load_config(config_path);
    RunManifest manifest;
    manifest.config_hash = config_hash(config);
    manifest.seeds = config.run_seeds();

    if (config.task == TaskKind::kToy) {
      if (manifest.seeds.size() != 1) throw ConfigError("the toy task takes a single seed");
      SearchConfig sc = config.search;
      sc.seed = manifest.seeds.front();
      ToyBilevelTask task;
      const Trajectory traj = search(sc, task);
      auto files = write_run_artifacts(out_dir, sc, traj);
      finish_manifest(out_dir, manifest, files);
      if (traj.diverged) {
        err << "search diverged at " << traj.failure << '\n';
        return kExitNumerical;
      }
      out << "alpha=" << format_double(traj.final_alpha.at(0)) << " w=" << format_double(traj.final_weights.at(0))
          << '\n';
      return kExitOk;
    }

    auto data = build_dataset(config);
    manifest.genotype = "genotype.json";

    if (manifest.seeds.size() == 1) {
      SearchConfig sc = config.search;
      sc.seed = manifest.seeds.front();
      CellClassifierTask task(data, sc.cell);
      const Trajectory traj = search(sc, task);
      auto files = write_run_artifacts(out_dir, sc, traj, test_hygiene_line(*data));
      finish_manifest(out_dir, manifest, files);
      if (traj.diverged) {
        err << "search diverged at " << traj.failure << '\n';
        return kExitNumerical;
      }
      out << genotype_summary(*traj.genotype);
      return kExitOk;
    }

    // Several seeds: one subdirectory per search, then selection by retrained validation accuracy.
    std::vector<SearchConfig> runs;
    for (std::uint64_t seed : manifest.seeds) {
      SearchConfig sc = config.search;
      sc.seed = seed;
      runs.push_back(sc);
    }
    std::vector<std::string> files;
    const SelectionResult selection =
        select_architecture(runs, data, [&](std::size_t i, const Trajectory& traj) {
          const std::string sub = "seed_" + std::to_string(runs[i].seed);
          for (const auto& f : write_run_artifacts(out_dir / sub, runs[i], traj)) files.push_back(sub + "/" + f);
        });
    std::string table = "seed,search_val_loss,retrain_val_accuracy,retrain_val_loss,final_entropy,failed\n";
    for (const auto& c : selection.candidates) {
      table += std::to_string(c.seed) + ',' + format_double(c.search_val_loss) + ',' +
               format_double(c.retrain_val_accuracy) + ',' + format_double(c.retrain_val_loss) + ',' +
               format_double(c.final_entropy) + ',' + from_bool(c.failed) + '\n';
    }
    write_text_file(out_dir / "selection.csv", table);
    files.push_back("selection.csv");
    const auto& best = selection.candidates[selection.best_index];
    if (best.failed) {
      finish_manifest(out_dir, manifest, files);
      err << "every search run failed; first failure: " << best.failure << '\n';
      return kExitNumerical;
    }
    write_genotype(out_dir / "genotype.json", selection.best);
    files.push_back("genotype.json");
    std::string summary = "selected_seed: " + std::to_string(best.seed) + "\n" +
                          "retrain_val_accuracy: " + format_double(best.retrain_val_accuracy) + "\n" +
                          test_hygiene_line(*data) + "genotype:\n" + genotype_summary(selection.best);
    write_text_file(out_dir / "summary.txt", summary);
    files.push_back("summary.txt");
    finish_manifest(out_dir, manifest, files);
    out << summary;
    return kExitOk;
  });
}

int cmd_toy_bilevel(const ToyBilevelOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (o.mode == SearchMode::kRandom) throw ConfigError("toy-bilevel: random mode has no scalar analogue");
    if (o.xi && *o.xi < 0.0) throw ConfigError("toy-bilevel: xi must be >= 0");
    if (o.mode == SearchMode::kFirstOrder && o.xi && *o.xi != 0.0) {
      throw ConfigError("toy-bilevel: first-order mode implies xi = 0");
    }
    SearchConfig c = toy_search_config(o.mode);
    if (o.xi) c.xi = *o.xi;
    if (o.eta_w) c.eta_w = *o.eta_w;
    if (o.eta_alpha) c.eta_alpha = *o.eta_alpha;
    c.iterations = o.steps;
    ToyBilevelTask task;
    const Trajectory traj = search(c, task);
    if (!o.trajectory_path.empty()) write_text_file(o.trajectory_path, trajectory_csv(traj));
    if (traj.diverged) {
      err << "toy-bilevel diverged at " << traj.failure << '\n';
      return kExitNumerical;
    }
    out << "alpha=" << format_double(traj.final_alpha.at(0)) << " w=" << format_double(traj.final_weights.at(0))
        << '\n';
    return kExitOk;
  });
}

int cmd_derive(const DeriveOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (o.spec_path.empty() == o.config_path.empty()) {
      throw ConfigError("derive: give exactly one of --spec and --config");
    }
    const CellSpec spec = o.spec_path.empty() ? load_config(o.config_path).search.cell
                                              : cell_spec_from_json(read_text_file(o.spec_path));
    spec.validate();
    const AlphaParams alpha = read_alpha(o.alpha_path, spec);
    const Genotype g = derive_genotype(spec, alpha);
    if (!o.out_path.empty()) write_genotype(o.out_path, g);
    out << genotype_summary(g);
    return kExitOk;
  });
}

int cmd_evaluate(const fs::path& genotype_path, const fs::path& config_path, const fs::path& out_path,
                 std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const ExperimentConfig config = load_config(config_path);
    if (config.task == TaskKind::kToy) throw ConfigError("evaluate: the toy task has no genotype");
    const Genotype g = read_genotype(genotype_path);
    validate_genotype(g);
    const CellSpec& want = config.search.cell;
    if (g.spec.input_arity != want.input_arity || g.spec.intermediates != want.intermediates ||
        g.spec.k != want.k) {
      throw ConfigError("evaluate: genotype cell shape does not match the config's cell");
    }
    auto data = build_dataset(config);
    const RetrainResult r = retrain_genotype(data, g, config.search.retrain);
    // Final measurement: the only read of test rows anywhere in the tool.
    GenotypeClassifier model(data, g);
    std::ostringstream m;
    m << "val_accuracy: " << format_double(r.val_accuracy) << '\n';
    m << "val_loss: " << format_double(r.val_loss) << '\n';
    m << "test_accuracy: " << format_double(model.accuracy(SplitTag::kTest, r.weights)) << '\n';
    m << "test_loss: " << format_double(model.loss(SplitTag::kTest, r.weights)) << '\n';
    m << "test_rows: " << data->count(SplitTag::kTest) << '\n';
    if (!out_path.empty()) write_text_file(out_path, m.str());
    out << m.str();
    return kExitOk;
  });
}

int cmd_random_search(const fs::path& config_path, std::optional<std::size_t> samples, const fs::path& out_dir,
                      std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const ExperimentConfig config = load_config(config_path);
    if (config.task == TaskKind::kToy) throw ConfigError("random-search: the toy task has no cell");
    const std::size_t n = samples.value_or(config.search.random_samples);
    if (n == 0) throw ConfigError("random-search: --samples must be positive");
    auto data = build_dataset(config);
    const RandomSearchResult r = random_search(config.search, data, n);

    std::vector<std::string> files;
    std::string table = "index,val_accuracy,val_loss,genotype\n";
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      std::string compact = genotype_summary(r.samples[i]);
      std::replace(compact.begin(), compact.end(), '\n', ';');
      std::replace(compact.begin(), compact.end(), ',', ' ');
      table += std::to_string(i) + ',' + format_double(r.val_accuracy[i]) + ',' + format_double(r.val_loss[i]) +
               ',' + compact + '\n';
    }
    write_text_file(out_dir / "random_search.csv", table);
    files.push_back("random_search.csv");
    write_genotype(out_dir / "genotype.json", r.best);
    files.push_back("genotype.json");
    const std::string summary = "best_index: " + std::to_string(r.best_index) + "\n" +
                                "best_val_accuracy: " + format_double(r.val_accuracy[r.best_index]) + "\n" +
                                test_hygiene_line(*data) + "genotype:\n" + genotype_summary(r.best);
    write_text_file(out_dir / "summary.txt", summary);
    files.push_back("summary.txt");
    RunManifest manifest;
    manifest.config_hash = config_hash(config);
    manifest.seeds = {config.search.seed};
    manifest.genotype = "genotype.json";
    finish_manifest(out_dir, manifest, files);
    out << summary;
    return kExitOk;
  });
}

int cmd_count(const SpaceQuery& query, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const BigInt discrete = count_discrete(query);
    const BigInt relaxed = count_relaxed(query);
    out << "edges: " << relaxed_edge_count(query.intermediates) << '\n';
    out << "discrete: " << discrete << " (" << scientific(discrete) << ")\n";
    out << "relaxed: " << relaxed << " (" << scientific(relaxed) << ")\n";
    return kExitOk;
  });
}

int cmd_grad_check(const FidelityOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const FidelityReport report = run_fidelity_suite(options);
    for (std::size_t i = 0; i < report.cases.size(); ++i) {
      const auto& c = report.cases[i];
      out << "network " << i << ": params=" << c.parameters << " alpha=" << c.alpha_size
          << " rel_err=" << scientific_double(c.error_eps_rule)
          << " rel_err_exact_hvp=" << scientific_double(c.error_exact_hvp) << '\n';
    }
    out << (report.passed ? "PASS" : "FAIL") << " max_rel_err=" << scientific_double(report.max_error_eps_rule)
        << " (threshold " << scientific_double(options.tolerance_eps_rule) << ")"
        << " max_rel_err_exact_hvp=" << scientific_double(report.max_error_exact_hvp) << " (threshold "
        << scientific_double(options.tolerance_exact_hvp) << ")\n";
    return report.passed ? kExitOk : kExitNumerical;
  });
}

}  // namespace darts
