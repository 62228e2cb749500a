#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sys/wait.h>
#include <sstream>

#include "doctest.h"

#include "darts/harness.hpp"
#include "darts/serialize.hpp"

using namespace darts;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "darts_harness_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct CliResult {
  int status = -1;
  std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli_output.txt";
  const std::string cmd = std::string("\"") + DARTS_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.output = slurp(log);
  return r;
}

const char* kSmallSynthetic = R"(# small cell search
task = synthetic
mode = second-order
seed = 3
iterations = 12
batch_size = 16
eta_alpha = 0.03
cell.intermediates = 2
cell.hidden = 4
retrain.steps = 20
retrain.batch_size = 16
synthetic.samples = 160
synthetic.dims = 4
)";

// Every file under dir except the CLI log, as relative path -> bytes.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "cli_output.txt") {
      out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(kSmallSynthetic);
  CHECK(c.task == TaskKind::kSynthetic);
  CHECK(c.search.iterations == 12);
  CHECK(c.search.cell.hidden == 4);
  CHECK_FALSE(c.search.xi.has_value());
  CHECK(c.run_seeds() == std::vector<std::uint64_t>{3});

  const ExperimentConfig toy = parse_config("task = toy\nmode = first-order\n");
  CHECK(toy.task == TaskKind::kToy);
  CHECK(toy.search.eta_w == 0.5);
  CHECK(toy.search.eta_alpha == 0.1);
  CHECK(toy.search.iterations == 500);

  CHECK(parse_config("seeds = 1, 2,5\n").run_seeds() == std::vector<std::uint64_t>{1, 2, 5});

  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("iterations = 3\nlearning_rate = 0.1\n").find("line 2") != std::string::npos);
  CHECK(message("iterations = 3\nlearning_rate = 0.1\n").find("learning_rate") != std::string::npos);
  CHECK(message("seed = 1\nseed = 2\n").find("line 2") != std::string::npos);
  CHECK_FALSE(message("iterations = many\n").empty());
  CHECK_FALSE(message("no equals sign\n").empty());
  CHECK_FALSE(message("xi = -1\n").empty());
  CHECK_FALSE(message("holdout_fraction = 1.5\n").empty());
  CHECK_FALSE(message("task = csv\n").empty());
  CHECK_FALSE(message("mode = darts\n").empty());
}

TEST_CASE("canonical config text round-trips and hashes stably") {
  const ExperimentConfig c = parse_config(kSmallSynthetic);
  const std::string text = config_to_text(c);
  CHECK(config_to_text(parse_config(text)) == text);
  CHECK(config_hash(c) == config_hash(parse_config(text)));
  CHECK(config_hash(c).size() == 16);

  ExperimentConfig d = c;
  d.search.seed = 4;
  CHECK(config_hash(d) != config_hash(c));
  d = c;
  d.search.xi = 0.01;
  CHECK(parse_config(config_to_text(d)).search.xi == 0.01);

  // Offset basis and one well-known vector of the 64-bit FNV-1a hash.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("the shipped desk-scale config file matches the preset") {
  const ExperimentConfig file = load_config(fs::path(DARTS_SOURCE_DIR) / "configs" / "desk_scale.cfg");
  CHECK(config_to_text(file) == config_to_text(desk_scale_config()));
  CHECK_NOTHROW(load_config(fs::path(DARTS_SOURCE_DIR) / "configs" / "toy.cfg"));
  CHECK_NOTHROW(load_config(fs::path(DARTS_SOURCE_DIR) / "configs" / "quick.cfg"));
}

TEST_CASE("manifest JSON round-trips") {
  RunManifest m;
  m.config_hash = "0123456789abcdef";
  m.seeds = {1, 7};
  m.genotype = "genotype.json";
  m.files = {"alpha/step_000010.tsv", "summary.txt", "trajectory.csv"};
  CHECK(manifest_from_json(manifest_to_json(m)) == m);
  CHECK_THROWS(manifest_from_json("{not json"));
}

TEST_CASE("trajectory CSV for the scalar problem carries alpha and w") {
  ToyBilevelTask toy;
  SearchConfig c = toy_search_config(SearchMode::kSecondOrder);
  c.iterations = 3;
  const std::string csv = trajectory_csv(search(c, toy));
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,train_loss,val_loss,eta_w,xi,epsilon_used,alpha_snapshot_path,alpha,w");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 3);
}

TEST_CASE("search on a missing config exits 2 naming the path") {
  const fs::path dir = scratch("missing");
  std::ostringstream out, err;
  CHECK(cmd_search(dir / "nope.cfg", dir / "run", out, err) == kExitConfig);
  CHECK(err.str().find("nope.cfg") != std::string::npos);

  const CliResult r = run_cli("search --config \"" + (dir / "nope.cfg").string() + "\" --out \"" +
                                  (dir / "run").string() + "\"",
                              dir);
  CHECK(r.status == 2);
  CHECK(r.output.find("nope.cfg") != std::string::npos);
}

TEST_CASE("toy search writes a trajectory and no genotype") {
  const fs::path dir = scratch("toy");
  spit(dir / "toy.cfg", "task = toy\n");
  std::ostringstream out, err;
  REQUIRE(cmd_search(dir / "toy.cfg", dir / "run", out, err) == kExitOk);
  CHECK(fs::exists(dir / "run" / "trajectory.csv"));
  CHECK(fs::exists(dir / "run" / "summary.txt"));
  CHECK_FALSE(fs::exists(dir / "run" / "genotype.json"));
  const RunManifest m = manifest_from_json(slurp(dir / "run" / "manifest.json"));
  CHECK(m.genotype.empty());
  CHECK(m.config_hash == config_hash(load_config(dir / "toy.cfg")));
}

TEST_CASE("synthetic search: genotype re-validates, test rows untouched, artifacts byte-identical") {
  const fs::path dir = scratch("synthetic");
  spit(dir / "run.cfg", kSmallSynthetic);
  const std::string cfg = "\"" + (dir / "run.cfg").string() + "\"";
  const CliResult a = run_cli("search --config " + cfg + " --out \"" + (dir / "a").string() + "\"", dir);
  const CliResult b = run_cli("search --config " + cfg + " --out \"" + (dir / "b").string() + "\"", dir);
  REQUIRE(a.status == 0);
  REQUIRE(b.status == 0);

  const Genotype g = read_genotype(dir / "a" / "genotype.json");
  CHECK(is_valid_genotype(g));
  CHECK(g.spec.intermediates == 2);
  CHECK(slurp(dir / "a" / "summary.txt").find("test_rows_read: 0") != std::string::npos);
  CHECK(fs::exists(dir / "a" / "alpha" / "step_000012.tsv"));

  const auto ta = tree(dir / "a"), tb = tree(dir / "b");
  CHECK(ta.size() == tb.size());
  for (const auto& [name, bytes] : ta) {
    INFO(name);
    REQUIRE(tb.count(name) == 1);
    CHECK(bytes == tb.at(name));
  }
  const RunManifest m = manifest_from_json(slurp(dir / "a" / "manifest.json"));
  for (const auto& f : m.files) CHECK(fs::exists(dir / "a" / f));

  // The snapshot derives back to the search's genotype.
  DeriveOptions d;
  d.alpha_path = dir / "a" / "alpha" / "step_000012.tsv";
  d.config_path = dir / "run.cfg";
  d.out_path = dir / "derived.json";
  std::ostringstream out, err;
  REQUIRE(cmd_derive(d, out, err) == kExitOk);
  CHECK(read_genotype(d.out_path) == g);
}

TEST_CASE("multi-seed search selects one genotype without touching test rows") {
  const fs::path dir = scratch("multi");
  spit(dir / "run.cfg", std::string(kSmallSynthetic) + "seeds = 1,2\n");
  std::ostringstream out, err;
  REQUIRE(cmd_search(dir / "run.cfg", dir / "run", out, err) == kExitOk);
  CHECK(fs::exists(dir / "run" / "seed_1" / "trajectory.csv"));
  CHECK(fs::exists(dir / "run" / "seed_2" / "genotype.json"));
  CHECK(fs::exists(dir / "run" / "selection.csv"));
  CHECK(is_valid_genotype(read_genotype(dir / "run" / "genotype.json")));
  const std::string summary = slurp(dir / "run" / "summary.txt");
  CHECK(summary.find("test_rows_read: 0") != std::string::npos);
  CHECK(summary.find("selected_seed: ") != std::string::npos);
}

TEST_CASE("derive from an all-zero snapshot gives the canonical genotype") {
  const fs::path dir = scratch("derive");
  CellSpec spec;
  spec.intermediates = 3;
  spec.k = 2;
  write_alpha(dir / "zero.tsv", spec, AlphaParams(spec.edge_count()));
  spit(dir / "cell.cfg", "cell.intermediates = 3\ncell.k = 2\n");
  DeriveOptions d;
  d.alpha_path = dir / "zero.tsv";
  d.config_path = dir / "cell.cfg";
  d.out_path = dir / "g.json";
  std::ostringstream out, err;
  REQUIRE(cmd_derive(d, out, err) == kExitOk);
  const Genotype g = read_genotype(d.out_path);
  for (const auto& node : g.nodes) {
    REQUIRE(node.size() == 2);
    CHECK(node[0].pred == 0);
    CHECK(node[1].pred == 1);
    for (const auto& e : node) CHECK(op_name(e.op) == "identity");
  }

  spit(dir / "wrong.cfg", "cell.intermediates = 2\n");
  d.config_path = dir / "wrong.cfg";
  CHECK(cmd_derive(d, out, err) == kExitConfig);
  d.config_path.clear();
  CHECK(cmd_derive(d, out, err) == kExitConfig);
}

TEST_CASE("evaluate is deterministic and the only reader of test rows") {
  const fs::path dir = scratch("evaluate");
  spit(dir / "run.cfg", kSmallSynthetic);
  CellSpec spec;
  spec.intermediates = 2;
  spec.hidden = 4;
  std::mt19937_64 rng(11);
  write_genotype(dir / "g.json", sample_genotype(spec, rng));
  std::ostringstream o1, o2, err;
  REQUIRE(cmd_evaluate(dir / "g.json", dir / "run.cfg", dir / "m1.txt", o1, err) == kExitOk);
  REQUIRE(cmd_evaluate(dir / "g.json", dir / "run.cfg", dir / "m2.txt", o2, err) == kExitOk);
  CHECK(slurp(dir / "m1.txt") == slurp(dir / "m2.txt"));
  CHECK(o1.str() == o2.str());
  CHECK(o1.str().find("test_accuracy") != std::string::npos);

  spit(dir / "other.cfg", std::string(kSmallSynthetic) + "cell.k = 1\n");
  CHECK(cmd_evaluate(dir / "g.json", dir / "other.cfg", dir / "m3.txt", o1, err) == kExitConfig);
}

TEST_CASE("random search command") {
  const fs::path dir = scratch("random");
  spit(dir / "run.cfg", kSmallSynthetic);
  std::ostringstream out, err;
  REQUIRE(cmd_random_search(dir / "run.cfg", 3, dir / "a", out, err) == kExitOk);
  REQUIRE(cmd_random_search(dir / "run.cfg", 3, dir / "b", out, err) == kExitOk);
  CHECK(slurp(dir / "a" / "random_search.csv") == slurp(dir / "b" / "random_search.csv"));
  CHECK(is_valid_genotype(read_genotype(dir / "a" / "genotype.json")));
  CHECK(slurp(dir / "a" / "summary.txt").find("test_rows_read: 0") != std::string::npos);
  CHECK(cmd_random_search(dir / "run.cfg", 0, dir / "c", out, err) == kExitConfig);
}

TEST_CASE("toy-bilevel, count and grad-check through the binary") {
  const fs::path dir = scratch("cli");
  CliResult r = run_cli("toy-bilevel --mode second-order --xi 0.5", dir);
  CHECK(r.status == 0);
  CHECK(r.output.find("alpha=1.0000") != std::string::npos);
  r = run_cli("toy-bilevel --mode first-order --trajectory \"" + (dir / "t.csv").string() + "\"", dir);
  CHECK(r.status == 0);
  CHECK(r.output.find("alpha=2") != std::string::npos);
  CHECK(fs::exists(dir / "t.csv"));
  r = run_cli("toy-bilevel --steps 0", dir);
  CHECK(r.output.find("alpha=2 w=-2") != std::string::npos);
  CHECK(run_cli("toy-bilevel --mode sideways", dir).status == 2);
  CHECK(run_cli("toy-bilevel --xi -1", dir).status == 2);
  CHECK(run_cli("frobnicate", dir).status == 2);

  r = run_cli("count --intermediates 4 --ops 7", dir);
  CHECK(r.status == 0);
  CHECK(r.output.find("1037664180") != std::string::npos);
  CHECK(r.output.find("4398046511104") != std::string::npos);

  r = run_cli("grad-check", dir);
  CHECK(r.status == 0);
  CHECK(r.output.find("PASS max_rel_err=") != std::string::npos);
}

}  // TEST_SUITE
