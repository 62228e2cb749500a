#include "darts/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "darts/serialize.hpp"

namespace darts {

ToyLosses toy_losses(double alpha, double w) {
  return {w * w - 2.0 * alpha * w + alpha * alpha, alpha * w - 2.0 * alpha + 1.0};
}

Value toy_train_loss(const Value& alpha, const Value& w) {
  Value ww = multiply(w, w);
  Value aw = scale(multiply(alpha, w), 2.0);
  Value aa = multiply(alpha, alpha);
  return add(subtract(ww, aw), aa);
}

Value toy_val_loss(const Value& alpha, const Value& w) {
  Value aw = multiply(alpha, w);
  Value two_a = scale(alpha, 2.0);
  return add(subtract(aw, two_a), Value(Tensor::scalar(1.0)));
}

const char* split_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kValidation: return "val";
    case SplitTag::kTest: return "test";
  }
  return "unknown";
}

SplitTag split_from_name(const std::string& name) {
  if (name == "train") return SplitTag::kTrain;
  if (name == "val" || name == "validation") return SplitTag::kValidation;
  if (name == "test") return SplitTag::kTest;
  throw DataError("unknown split tag '" + name + "'");
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(Tensor features, std::vector<int> labels, std::vector<SplitTag> tags,
                 std::size_t classes)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      tags_(std::move(tags)),
      classes_(classes) {
  if (features_.rank() != 2 || features_.dim(0) != labels_.size() || tags_.size() != labels_.size()) {
    throw DataError("dataset: features " + to_string(features_.shape()) + ", " +
                    std::to_string(labels_.size()) + " labels and " + std::to_string(tags_.size()) +
                    " split tags are inconsistent");
  }
  for (int l : labels_) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes_) {
      throw DataError("dataset: label " + std::to_string(l) + " outside [0, " +
                      std::to_string(classes_) + ")");
    }
  }
}

Dataset::Dataset(const Dataset& other)
    : features_(other.features_),
      labels_(other.labels_),
      tags_(other.tags_),
      classes_(other.classes_) {}

Dataset& Dataset::operator=(const Dataset& other) {
  if (this != &other) {
    features_ = other.features_;
    labels_ = other.labels_;
    tags_ = other.tags_;
    classes_ = other.classes_;
    reset_access_counts();
  }
  return *this;
}

std::vector<std::size_t> Dataset::indices(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (tags_[i] == tag) out.push_back(i);
  }
  return out;
}

std::size_t Dataset::count(SplitTag tag) const {
  return static_cast<std::size_t>(std::count(tags_.begin(), tags_.end(), tag));
}

Dataset::Batch Dataset::gather(std::span<const std::size_t> rows) const {
  if (rows.empty()) throw DataError("dataset: empty batch");
  const std::size_t d = dims();
  Batch b{Tensor(Shape{rows.size(), d}), Tensor(Shape{rows.size()})};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r];
    if (src >= labels_.size()) throw DataError("dataset: row " + std::to_string(src) + " out of range");
    access_[static_cast<std::size_t>(tags_[src])].fetch_add(1);
    std::copy_n(features_.data().data() + src * d, d, b.features.data().data() + r * d);
    b.labels[r] = static_cast<double>(labels_[src]);
  }
  return b;
}

void Dataset::reset_access_counts() const {
  for (auto& c : access_) c.store(0);
}

// ---------------------------------------------------------------------------
// Generators

Dataset make_synthetic_classification(const SyntheticConfig& c) {
  if (c.classes < 2) throw DataError("synthetic: need at least 2 classes");
  if (c.samples < c.classes) throw DataError("synthetic: fewer samples than classes");
  if (c.dims < 1) throw DataError("synthetic: dims must be >= 1");
  if (c.clusters_per_class < 1) throw DataError("synthetic: clusters_per_class must be >= 1");
  if (c.noise < 0.0) throw DataError("synthetic: noise must be non-negative");
  if (c.test_fraction < 0.0 || c.test_fraction >= 1.0) {
    throw DataError("synthetic: test_fraction must lie in [0, 1)");
  }
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> centres(c.classes * c.clusters_per_class * c.dims);
  for (double& v : centres) v = normal(rng);

  std::vector<std::size_t> order(c.samples);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  Tensor features(Shape{c.samples, c.dims});
  std::vector<int> labels(c.samples);
  std::uniform_int_distribution<std::size_t> pick_cluster(0, c.clusters_per_class - 1);
  for (std::size_t i = 0; i < c.samples; ++i) {
    const std::size_t row = order[i];
    const std::size_t label = i % c.classes;
    const std::size_t cluster = label * c.clusters_per_class + pick_cluster(rng);
    labels[row] = static_cast<int>(label);
    for (std::size_t d = 0; d < c.dims; ++d) {
      features.at(row, d) = centres[cluster * c.dims + d] + c.noise * normal(rng);
    }
  }

  const auto n_test = static_cast<std::size_t>(c.test_fraction * static_cast<double>(c.samples));
  std::vector<SplitTag> tags(c.samples, SplitTag::kTrain);
  for (std::size_t i = 0; i < n_test; ++i) tags[order[i]] = SplitTag::kTest;
  return Dataset(std::move(features), std::move(labels), std::move(tags), c.classes);
}

Dataset holdout_split(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DataError("holdout_split: fraction must lie in (0, 1)");
  std::vector<std::size_t> train = dataset.indices(SplitTag::kTrain);
  std::mt19937_64 rng(seed);
  std::shuffle(train.begin(), train.end(), rng);
  const auto n_val = static_cast<std::size_t>(fraction * static_cast<double>(train.size()) + 0.5);
  if (n_val == 0 || n_val == train.size()) {
    throw DataError("holdout_split: fraction " + format_double(fraction) + " of " +
                    std::to_string(train.size()) + " train rows leaves an empty side");
  }
  std::vector<SplitTag> tags = dataset.tags();
  for (std::size_t i = 0; i < n_val; ++i) tags[train[i]] = SplitTag::kValidation;
  return Dataset(dataset.raw_features(), dataset.labels(), std::move(tags), dataset.classes());
}

// ---------------------------------------------------------------------------
// Delimited text

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset parse_delimited(const std::string& text, const DelimitedSchema& schema) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw DataError("delimited: empty file, no header or rows");
  for (auto& h : header) h = trim(h);

  auto find_col = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const std::ptrdiff_t label_col = find_col(schema.label_column);
  if (label_col < 0) throw DataError("delimited: header has no '" + schema.label_column + "' column");
  const std::ptrdiff_t split_col = schema.split_column.empty() ? -1 : find_col(schema.split_column);

  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) != label_col && static_cast<std::ptrdiff_t>(c) != split_col) {
        feature_cols.push_back(c);
      }
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      const auto c = find_col(name);
      if (c < 0) throw DataError("delimited: header has no '" + name + "' column");
      feature_cols.push_back(static_cast<std::size_t>(c));
    }
  }
  if (feature_cols.empty()) throw DataError("delimited: no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<SplitTag> tags;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = "delimited line " + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c : feature_cols) {
      const std::string f = trim(fields[c]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
        throw DataError(where + ": column '" + header[c] + "' value '" + f + "' is not numeric");
      }
      values.push_back(v);
    }
    const std::string lf = trim(fields[static_cast<std::size_t>(label_col)]);
    int label = 0;
    auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (lf.empty() || ec != std::errc() || ptr != lf.data() + lf.size() || label < 0) {
      throw DataError(where + ": label '" + lf + "' is not a non-negative integer");
    }
    labels.push_back(label);
    max_label = std::max(max_label, label);
    if (split_col >= 0) {
      try {
        tags.push_back(split_from_name(trim(fields[static_cast<std::size_t>(split_col)])));
      } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
      }
    } else {
      tags.push_back(SplitTag::kTrain);
    }
  }
  if (labels.empty()) throw DataError("delimited: empty dataset, header but no rows");
  const std::size_t n = labels.size();
  const auto classes = static_cast<std::size_t>(std::max(max_label + 1, 2));
  return Dataset(Tensor(Shape{n, feature_cols.size()}, std::move(values)), std::move(labels),
                 std::move(tags), classes);
}

Dataset load_delimited(const std::filesystem::path& path, const DelimitedSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("delimited: cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_delimited(ss.str(), schema);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string to_delimited(const Dataset& d) {
  std::ostringstream os;
  for (std::size_t c = 0; c < d.dims(); ++c) os << 'x' << c << ',';
  os << "label,split\n";
  const Tensor& f = d.raw_features();
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.dims(); ++c) os << format_double(f.at(r, c)) << ',';
    os << d.labels()[r] << ',' << split_name(d.tags()[r]) << '\n';
  }
  return os.str();
}

void write_delimited(const std::filesystem::path& path, const Dataset& dataset) {
  write_text_file(path, to_delimited(dataset));
}

}  // namespace darts
