#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "darts/data.hpp"
#include "darts/search.hpp"
#include "darts/space.hpp"
#include "darts/verify.hpp"

namespace darts {

inline constexpr const char* kToolVersion = "0.3.0";

/// Exit statuses shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumerical = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TaskKind { kToy, kSynthetic, kDelimited };

/// Everything a run needs. Parsed from flat `key = value` text; see
/// config_keys() for the accepted keys.
struct ExperimentConfig {
  TaskKind task = TaskKind::kSynthetic;
  SearchConfig search;
  SyntheticConfig synthetic;
  std::string data_path;          // TaskKind::kDelimited only
  double holdout_fraction = 0.5;  // share of train rows moved to validation
  std::uint64_t split_seed = 0;
  /// Independent search seeds. Empty means {search.seed}.
  std::vector<std::uint64_t> seeds;

  std::vector<std::uint64_t> run_seeds() const;
};

/// Desk-scale synthetic experiment. The cell is narrow (hidden = 8) so the op
/// choice shows up in retrained accuracy; the search runs 600 iterations at
/// eta_alpha = 1e-2 so alpha moves away from uniform. Mirrored by
/// configs/desk_scale.cfg.
ExperimentConfig desk_scale_config();

/// Accepted keys in canonical order.
const std::vector<std::string>& config_keys();

/// Raises ConfigError naming the offending line for any bad key or value.
/// `task = toy` starts from the scalar-problem defaults before applying the other keys.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text: every key in config_keys() order. parse_config(config_to_text(c)) == c.
std::string config_to_text(const ExperimentConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);
/// 16 hex digits of fnv1a64(config_to_text(config)).
std::string config_hash(const ExperimentConfig& config);

/// Train/validation/test data for non-toy tasks. Validation rows come from
/// holdout_split unless the file already tags some rows as validation.
std::shared_ptr<Dataset> build_dataset(const ExperimentConfig& config);

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::string trajectory = "trajectory.csv";
  std::string alpha_dir = "alpha";
  std::string genotype;  // empty when the task has no cell
  std::string summary = "summary.txt";
  std::vector<std::string> files;  // every artifact, relative, sorted

  bool operator==(const RunManifest&) const = default;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

/// iteration,train_loss,val_loss,eta_w,xi,epsilon_used,alpha_snapshot_path and,
/// for the scalar problem, alpha and w after the step.
std::string trajectory_csv(const Trajectory& trajectory);

/// One line per node, e.g. "node 2: 0 linear_tanh, 1 identity".
std::string genotype_summary(const Genotype& genotype);

/// Writes trajectory.csv, alpha snapshots, genotype.json (cell tasks only)
/// and summary.txt under `dir`. Returns the relative paths written.
std::vector<std::string> write_run_artifacts(const std::filesystem::path& dir,
                                             const SearchConfig& config,
                                             const Trajectory& trajectory,
                                             const std::string& extra_summary = {});

// ---------------------------------------------------------------------------
// Subcommands. Each returns an ExitCode and reports on `out` / `err`.

int cmd_search(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
               std::ostream& out, std::ostream& err);

struct ToyBilevelOptions {
  SearchMode mode = SearchMode::kSecondOrder;
  std::optional<double> xi;
  std::uint64_t steps = 500;
  std::optional<double> eta_w;
  std::optional<double> eta_alpha;
  std::filesystem::path trajectory_path;  // empty: do not write
};
int cmd_toy_bilevel(const ToyBilevelOptions& options, std::ostream& out, std::ostream& err);

/// Exactly one of `spec_path` (cell spec JSON) and `config_path` supplies the cell shape.
struct DeriveOptions {
  std::filesystem::path alpha_path;
  std::filesystem::path spec_path;
  std::filesystem::path config_path;
  std::filesystem::path out_path;
};
int cmd_derive(const DeriveOptions& options, std::ostream& out, std::ostream& err);

/// Retrains the genotype on the train split with the config's retrain budget,
/// then reports validation and test metrics. The only command that reads test rows.
int cmd_evaluate(const std::filesystem::path& genotype_path, const std::filesystem::path& config_path,
                 const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);

int cmd_random_search(const std::filesystem::path& config_path, std::optional<std::size_t> samples,
                      const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

int cmd_count(const SpaceQuery& query, std::ostream& out, std::ostream& err);

int cmd_grad_check(const FidelityOptions& options, std::ostream& out, std::ostream& err);

}  // namespace darts
