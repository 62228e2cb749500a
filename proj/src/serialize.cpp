#include "darts/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace darts {

using nlohmann::json;

namespace {

json spec_json(const CellSpec& s) {
  return json{{"input_arity", s.input_arity},
              {"intermediates", s.intermediates},
              {"hidden", s.hidden},
              {"k", s.k},
              {"reduction", s.reduction == OutputReduction::kMean ? "mean" : "concat"}};
}

CellSpec spec_from(const json& j) {
  CellSpec s;
  s.input_arity = j.at("input_arity").get<std::size_t>();
  s.intermediates = j.at("intermediates").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::size_t>();
  s.k = j.at("k").get<std::size_t>();
  const auto red = j.at("reduction").get<std::string>();
  if (red == "mean") {
    s.reduction = OutputReduction::kMean;
  } else if (red == "concat") {
    s.reduction = OutputReduction::kConcat;
  } else {
    throw FormatError("unknown reduction '" + red + "'");
  }
  s.validate();
  return s;
}

template <typename F>
auto parse_json(const std::string& text, const char* what, F f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

double parse_double(const std::string& field, const std::string& context) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(context + ": '" + field + "' is not a number");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string cell_spec_to_json(const CellSpec& spec) { return spec_json(spec).dump(); }

CellSpec cell_spec_from_json(const std::string& text) {
  return parse_json(text, "cell spec", [](const json& j) { return spec_from(j); });
}

std::string genotype_to_json(const Genotype& g) {
  json nodes = json::array();
  for (const auto& pairs : g.nodes) {
    json node = json::array();
    for (const auto& p : pairs) node.push_back({{"pred", p.pred}, {"op", std::string(op_name(p.op))}});
    nodes.push_back(node);
  }
  json doc{{"spec", spec_json(g.spec)}, {"nodes", nodes}};
  return doc.dump(2) + "\n";
}

Genotype genotype_from_json(const std::string& text) {
  return parse_json(text, "genotype", [](const json& doc) {
    Genotype g;
    g.spec = spec_from(doc.at("spec"));
    for (const auto& node : doc.at("nodes")) {
      auto& pairs = g.nodes.emplace_back();
      for (const auto& p : node) {
        try {
          pairs.push_back({p.at("pred").get<std::size_t>(), op_from_name(p.at("op").get<std::string>())});
        } catch (const std::invalid_argument& e) {
          throw FormatError(std::string("genotype: ") + e.what());
        }
      }
    }
    validate_genotype(g);
    return g;
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_genotype(const std::filesystem::path& path, const Genotype& genotype) {
  write_text_file(path, genotype_to_json(genotype));
}

Genotype read_genotype(const std::filesystem::path& path) {
  return genotype_from_json(read_text_file(path));
}

std::string alpha_to_tsv(const CellSpec& spec, const AlphaParams& alpha) {
  if (alpha.edge_count() != spec.edge_count()) {
    throw std::invalid_argument("alpha_to_tsv: alpha does not match the cell spec");
  }
  std::ostringstream os;
  os << "edge\tpred\tnode";
  for (OpKind k : kOpRegistry) os << '\t' << op_name(k);
  os << '\n';
  const auto edges = edge_list(spec);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    os << e << '\t' << edges[e].first << '\t' << edges[e].second;
    for (double v : alpha.row(e)) os << '\t' << format_double(v);
    os << '\n';
  }
  return os.str();
}

AlphaParams alpha_from_tsv(const CellSpec& spec, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw FormatError("alpha table: empty input");
  const auto header = split(line, '\t');
  if (header.size() != 3 + kNumOps) throw FormatError("alpha table: bad header '" + line + "'");
  for (std::size_t o = 0; o < kNumOps; ++o) {
    if (header[3 + o] != op_name(kOpRegistry[o])) {
      throw FormatError("alpha table: column " + std::to_string(3 + o) + " is '" + header[3 + o] +
                        "', expected '" + std::string(op_name(kOpRegistry[o])) + "'");
    }
  }
  const auto edges = edge_list(spec);
  AlphaParams alpha(spec.edge_count());
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = "alpha table line " + std::to_string(line_no);
    const auto fields = split(line, '\t');
    if (fields.size() != 3 + kNumOps) throw FormatError(ctx + ": wrong column count");
    if (row >= edges.size()) throw FormatError(ctx + ": more rows than the cell has edges");
    if (parse_double(fields[1], ctx) != static_cast<double>(edges[row].first) ||
        parse_double(fields[2], ctx) != static_cast<double>(edges[row].second)) {
      throw FormatError(ctx + ": edge does not match the cell spec");
    }
    for (std::size_t o = 0; o < kNumOps; ++o) alpha.row(row)[o] = parse_double(fields[3 + o], ctx);
    ++row;
  }
  if (row != edges.size()) {
    throw FormatError("alpha table: " + std::to_string(row) + " rows, spec needs " +
                      std::to_string(edges.size()));
  }
  return alpha;
}

void write_alpha(const std::filesystem::path& path, const CellSpec& spec, const AlphaParams& alpha) {
  write_text_file(path, alpha_to_tsv(spec, alpha));
}

AlphaParams read_alpha(const std::filesystem::path& path, const CellSpec& spec) {
  return alpha_from_tsv(spec, read_text_file(path));
}

std::string adam_state_to_json(const AdamState& s) {
  json j{{"learning_rate", s.learning_rate}, {"beta1", s.beta1},
         {"beta2", s.beta2},                 {"weight_decay", s.weight_decay},
         {"epsilon", s.epsilon},             {"step", s.step},
         {"first_moment", s.first_moment},   {"second_moment", s.second_moment}};
  return j.dump();
}

AdamState adam_state_from_json(const std::string& text) {
  return parse_json(text, "adam state", [](const json& j) {
    AdamState s;
    s.learning_rate = j.at("learning_rate").get<double>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.weight_decay = j.at("weight_decay").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    s.step = j.at("step").get<std::uint64_t>();
    s.first_moment = j.at("first_moment").get<std::vector<double>>();
    s.second_moment = j.at("second_moment").get<std::vector<double>>();
    return s;
  });
}

std::string sgd_state_to_json(const SgdMomentumState& s) {
  json j{{"learning_rate", s.learning_rate},
         {"momentum", s.momentum},
         {"weight_decay", s.weight_decay},
         {"velocity", s.velocity}};
  return j.dump();
}

SgdMomentumState sgd_state_from_json(const std::string& text) {
  return parse_json(text, "sgd state", [](const json& j) {
    SgdMomentumState s;
    s.learning_rate = j.at("learning_rate").get<double>();
    s.momentum = j.at("momentum").get<double>();
    s.weight_decay = j.at("weight_decay").get<double>();
    s.velocity = j.at("velocity").get<std::vector<double>>();
    return s;
  });
}

}  // namespace darts
