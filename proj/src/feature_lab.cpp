#include "ownet/feature_lab.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>

#include "ownet/csv.hpp"

namespace ownet {

std::string_view to_string(FeatureGroup group) {
  switch (group) {
    case FeatureGroup::individual: return "individual";
    case FeatureGroup::network: return "network";
    default: return "combined";
  }
}

FeatureGroup parse_feature_group(std::string_view text) {
  if (text == "individual") return FeatureGroup::individual;
  if (text == "network") return FeatureGroup::network;
  if (text == "combined") return FeatureGroup::combined;
  throw std::invalid_argument("unknown feature group '" + std::string(text) + "'");
}

bool is_complete(const FirmAttributes& attributes) {
  if (!attributes.registered_capital) return false;
  for (const auto& c : attributes.categorical) {
    if (!c) return false;
  }
  return true;
}

double capital_transform(double capital) {
  if (!(capital >= 0) || !std::isfinite(capital)) {
    throw Error(fmt::format("registered_capital must be a finite nonnegative number, got {}", capital));
  }
  return std::log1p(capital);
}

std::vector<double> encode_individual(const FirmAttributes& attributes, const FeatureSchema& schema) {
  std::vector<double> x(schema.individual_dimension(), 0.0);
  if (!attributes.registered_capital) throw Error("attribute 'registered_capital' is missing");
  x[0] = capital_transform(*attributes.registered_capital);
  for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
    const auto& value = attributes.categorical[a];
    if (!value) throw Error(fmt::format("attribute '{}' is missing", kCategoricalAttributes[a]));
    const auto k = schema.index_of(a, *value);
    if (!k) {
      throw Error(fmt::format("attribute '{}' has value '{}' outside the schema vocabulary",
                              kCategoricalAttributes[a], *value));
    }
    x[schema.block_offset(a) + *k] = 1.0;
  }
  return x;
}

// ---------------------------------------------------------------------------

std::vector<std::string> network_feature_names() {
  std::vector<std::string> names;
  for (auto set : kNetworkSets) {
    names.push_back(fmt::format("net_{}_count", set));
    names.push_back(fmt::format("net_{}_frac", set));
  }
  return names;
}

namespace {

class NetworkScratch {
 public:
  explicit NetworkScratch(std::size_t n) : nbr_in_(n, 0), nbr_out_(n, 0), first_(n, 0), second_(n, 0) {}

  NetworkFeatures compute(const FirmGraph& g, NodeId i) {
    if (++tick_ == 0) {
      for (auto* v : {&nbr_in_, &nbr_out_, &first_, &second_}) std::fill(v->begin(), v->end(), 0);
      tick_ = 1;
    }
    const auto labels = g.labels();
    NetworkFeatures f{};
    auto put = [&](std::size_t set, std::size_t bad, std::size_t size) {
      f[2 * set] = static_cast<double>(bad);
      f[2 * set + 1] = size ? static_cast<double>(bad) / static_cast<double>(size) : 0.0;
    };
    auto count_list = [&](std::span<const NodeId> list) {
      std::size_t bad = 0;
      for (NodeId w : list) bad += labels[w];
      return bad;
    };
    const auto inv = g.in(i), out = g.out(i), und = g.undirected(i);
    put(0, count_list(inv), inv.size());
    put(1, count_list(out), out.size());
    put(2, count_list(und), und.size());

    first_[i] = tick_;
    for (NodeId j : und) first_[j] = tick_;
    std::size_t in_size = 0, in_bad = 0, out_size = 0, out_bad = 0, sec_size = 0, sec_bad = 0;
    for (NodeId j : und) {
      for (NodeId k : g.in(j)) {
        if (k != i && nbr_in_[k] != tick_) {
          nbr_in_[k] = tick_;
          ++in_size;
          in_bad += labels[k];
        }
      }
      for (NodeId k : g.out(j)) {
        if (k != i && nbr_out_[k] != tick_) {
          nbr_out_[k] = tick_;
          ++out_size;
          out_bad += labels[k];
        }
      }
      for (NodeId k : g.undirected(j)) {
        if (first_[k] != tick_ && second_[k] != tick_) {
          second_[k] = tick_;
          ++sec_size;
          sec_bad += labels[k];
        }
      }
    }
    put(3, in_bad, in_size);
    put(4, out_bad, out_size);
    put(5, sec_bad, sec_size);
    return f;
  }

 private:
  std::vector<std::uint32_t> nbr_in_, nbr_out_, first_, second_;
  std::uint32_t tick_ = 0;
};

}  // namespace

NetworkFeatures network_features(const FirmGraph& graph, NodeId node) {
  if (node >= graph.node_count()) throw std::out_of_range("node index out of range");
  NetworkScratch scratch(graph.node_count());
  return scratch.compute(graph, node);
}

std::vector<NetworkFeatures> network_feature_table(const FirmGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<NetworkFeatures> table(n);
#pragma omp parallel
  {
    NetworkScratch scratch(n);
#pragma omp for schedule(dynamic, 4096)
    for (std::size_t i = 0; i < n; ++i) table[i] = scratch.compute(graph, static_cast<NodeId>(i));
  }
  return table;
}

// ---------------------------------------------------------------------------

LabeledDataset::LabeledDataset(FeatureGroup group, std::vector<std::string> feature_names,
                               std::vector<std::uint32_t> standardized_columns)
    : group_(group), names_(std::move(feature_names)), standardized_(std::move(standardized_columns)) {}

void LabeledDataset::add_row(NodeId firm, std::uint8_t label, std::span<const Entry> entries) {
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (e.column >= names_.size() || (k > 0 && e.column <= entries[k - 1].column)) {
      throw std::invalid_argument("dataset row columns must be ascending and in range");
    }
    if (!std::isfinite(e.value)) {
      throw Error(fmt::format("non-finite value in feature '{}' for firm {}", names_[e.column], firm));
    }
  }
  std::size_t s = 0;
  for (const auto& e : entries) {
    while (s < standardized_.size() && standardized_[s] < e.column) ++s;
    const bool keep = e.value != 0.0 || (s < standardized_.size() && standardized_[s] == e.column);
    if (keep) entries_.push_back(e);
  }
  offsets_.push_back(entries_.size());
  labels_.push_back(label);
  firms_.push_back(firm);
}

std::vector<double> LabeledDataset::dense_row(std::size_t r) const {
  std::vector<double> x(cols(), 0.0);
  for (const auto& e : row(r)) x[e.column] = e.value;
  return x;
}

void LabeledDataset::write_csv(std::ostream& out) const {
  std::vector<std::string> fields(names_.begin(), names_.end());
  fields.emplace_back("label");
  write_csv_row(out, fields);
  for (std::size_t r = 0; r < rows(); ++r) {
    const auto x = dense_row(r);
    fields.clear();
    for (double v : x) fields.push_back(fmt::format("{}", v));
    fields.push_back(label(r) ? "1" : "0");
    write_csv_row(out, fields);
  }
}

LabeledDataset assemble_dataset(const FirmGraph& graph, const AttributeTable* attributes,
                                const FeatureSchema& schema, FeatureGroup group) {
  const bool individual = group != FeatureGroup::network;
  const bool network = group != FeatureGroup::individual;
  const std::size_t n = graph.node_count();
  if (individual && !attributes) throw Error("individual features need an attribute table");
  if (individual && attributes->node_count() != n) throw Error("attribute table does not match the graph");

  std::vector<std::string> names;
  std::vector<std::uint32_t> standardized;
  std::uint32_t net_offset = 0;
  if (individual) {
    names = schema.individual_feature_names();
    standardized.push_back(0);
    net_offset = static_cast<std::uint32_t>(names.size());
  }
  if (network) {
    for (auto& name : network_feature_names()) names.push_back(std::move(name));
  }
  LabeledDataset data(group, std::move(names), std::move(standardized));

  // Table code -> schema column, -1 for values outside the vocabulary.
  std::array<std::vector<std::int64_t>, kCategoricalAttributeCount> column_of;
  if (individual) {
    for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
      for (const auto& value : attributes->dictionary(a)) {
        const auto k = schema.index_of(a, value);
        column_of[a].push_back(k ? static_cast<std::int64_t>(schema.block_offset(a) + *k) : -1);
      }
    }
  }

  std::vector<NetworkFeatures> net;
  if (network) net = network_feature_table(graph);

  std::vector<LabeledDataset::Entry> entries;
  const auto labels = graph.labels();
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<NodeId>(i);
    entries.clear();
    if (individual) {
      if (!attributes->has_row(v)) continue;
      const auto capital = attributes->capital(v);
      bool complete = capital.has_value();
      for (std::size_t a = 0; a < kCategoricalAttributeCount && complete; ++a) {
        complete = attributes->code(v, a) >= 0;
      }
      if (!complete) continue;
      entries.push_back({0, capital_transform(*capital)});
      for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
        const auto code = attributes->code(v, a);
        const auto col = column_of[a][static_cast<std::size_t>(code)];
        if (col < 0) {
          throw Error(fmt::format("firm '{}': attribute '{}' has value '{}' outside the schema vocabulary",
                                  graph.external_id(v), kCategoricalAttributes[a],
                                  attributes->dictionary(a)[static_cast<std::size_t>(code)]));
        }
        entries.push_back({static_cast<std::uint32_t>(col), 1.0});
      }
    }
    if (network) {
      for (std::size_t k = 0; k < kNetworkFeatureCount; ++k) {
        entries.push_back({net_offset + static_cast<std::uint32_t>(k), net[i][k]});
      }
    }
    data.add_row(v, labels[i], entries);
  }
  if (data.rows() == 0) throw Error("dataset is empty: no firm has complete features");
  return data;
}

}  // namespace ownet
