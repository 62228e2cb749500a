#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "darts/tensor.hpp"

namespace darts {

// ---------------------------------------------------------------------------
// Analytic bilevel problem:
//   L_train(w, a) = w^2 - 2 a w + a^2 = (w - a)^2
//   L_val(w, a)   = a w - 2 a + 1
// Bilevel optimum (a*, w*) = (1, 1).

struct ToyLosses {
  double train = 0.0;
  double val = 0.0;
};

struct AnalyticBilevelProblem {
  double alpha0 = 2.0;
  double w0 = -2.0;
};

ToyLosses toy_losses(double alpha, double w);

/// Same losses recorded on a tape from the given scalar Values.
Value toy_train_loss(const Value& alpha, const Value& w);
Value toy_val_loss(const Value& alpha, const Value& w);

// ---------------------------------------------------------------------------
// Tabular classification data.

enum class SplitTag : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

const char* split_name(SplitTag tag);
SplitTag split_from_name(const std::string& name);

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rows of features with integer labels and a split tag per row.
/// Reads through gather() are counted per split so callers can prove a code
/// path never touched test rows. Counters are atomic; the data is immutable.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Tensor features, std::vector<int> labels, std::vector<SplitTag> tags,
          std::size_t classes);
  Dataset(const Dataset& other);
  Dataset& operator=(const Dataset& other);

  std::size_t rows() const { return labels_.size(); }
  std::size_t dims() const { return rows() ? features_.dim(1) : 0; }
  std::size_t classes() const { return classes_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<SplitTag>& tags() const { return tags_; }

  /// Row ids carrying `tag`, in storage order.
  std::vector<std::size_t> indices(SplitTag tag) const;
  std::size_t count(SplitTag tag) const;

  struct Batch {
    Tensor features;  // (n, dims)
    Tensor labels;    // (n), integral doubles
  };
  /// Copies the given rows. Counts one access per row against its tag.
  Batch gather(std::span<const std::size_t> rows) const;

  /// Unaudited access for persistence and tests.
  const Tensor& raw_features() const { return features_; }

  std::uint64_t access_count(SplitTag tag) const {
    return access_[static_cast<std::size_t>(tag)].load();
  }
  void reset_access_counts() const;

 private:
  Tensor features_;
  std::vector<int> labels_;
  std::vector<SplitTag> tags_;
  std::size_t classes_ = 0;
  mutable std::array<std::atomic<std::uint64_t>, 3> access_{};
};

struct SyntheticConfig {
  std::size_t samples = 2000;
  std::size_t dims = 8;
  std::size_t classes = 2;
  /// Gaussian cluster centres per class. Centres are drawn N(0, I).
  std::size_t clusters_per_class = 4;
  /// Standard deviation of points around their centre.
  double noise = 0.5;
  /// Fraction of rows tagged test; the rest are tagged train.
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Gaussian-cluster data, labels balanced to within one row.
Dataset make_synthetic_classification(const SyntheticConfig& config);

/// Moves a seeded-random `fraction` of the train rows into validation.
/// Test rows are left alone.
Dataset holdout_split(const Dataset& dataset, double fraction, std::uint64_t seed);

struct DelimitedSchema {
  std::string label_column = "label";
  /// Optional split column holding train/val/test. Rows default to train.
  std::string split_column = "split";
  /// Empty means "every column except label and split".
  std::vector<std::string> feature_columns;
};

/// Comma-separated with a header row.
Dataset load_delimited(const std::filesystem::path& path, const DelimitedSchema& schema = {});
Dataset parse_delimited(const std::string& text, const DelimitedSchema& schema = {});
std::string to_delimited(const Dataset& dataset);
void write_delimited(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace darts
