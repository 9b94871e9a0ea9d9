#include "ownet/synthgen.hpp"

#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "ownet/csv.hpp"

namespace ownet {

namespace {

constexpr std::size_t kSurvivalTable = 20000;

double hzeta(double s, double q) {
  gsl_set_error_handler_off();
  gsl_sf_result r;
  const int status = gsl_sf_hzeta_e(s, q, &r);
  if (status != GSL_SUCCESS && status != GSL_EUNDRFLW) {
    throw Error(fmt::format("Hurwitz zeta({}, {}) failed: {}", s, q, gsl_strerror(status)));
  }
  return r.val;
}

double normal(SplitMix64& rng) {
  // Box-Muller; one variate per call keeps streams simple.
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Sampler over a fixed weight vector by cumulative search.
class Categorical {
 public:
  explicit Categorical(std::span<const double> weights) : cumulative_(weights.size()) {
    double acc = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) cumulative_[k] = acc += weights[k];
    if (!(acc > 0)) throw Error("categorical weights sum to zero");
  }
  std::size_t operator()(SplitMix64& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

void check_probability(double p, const char* name) {
  if (!(p >= 0 && p <= 1)) throw Error(fmt::format("{} must be in [0, 1], got {}", name, p));
}

}  // namespace

void GenParams::validate() const {
  if (n_nodes < 2) throw Error("n_nodes must be at least 2");
  if (!(target_avg_degree > 0)) throw Error("target_avg_degree must be positive");
  if (!(in_degree_exponent > 1)) throw Error("in_degree_exponent must exceed 1");
  if (!(out_activity_exponent > 1)) throw Error("out_activity_exponent must exceed 1");
  if (!(small_zipf_exponent > 0)) throw Error("small_zipf_exponent must be positive");
  if (small_size_cap < 2) throw Error("small_size_cap must be at least 2");
  check_probability(giant_fraction, "giant_fraction");
  check_probability(labels.base_rate, "base_rate");
  check_probability(labels.beta, "beta");
  check_probability(labels.decay, "decay");
  check_probability(missing_attr_rate, "missing_attr_rate");
  check_probability(label_attr_correlation, "label_attr_correlation");
  if (!(labels.investee_bias > 0)) throw Error("investee_bias must be positive");
}

// ---------------------------------------------------------------------------

DiscretePowerLaw::DiscretePowerLaw(double alpha, std::uint64_t xmin, std::uint64_t cap)
    : alpha_(alpha), xmin_(xmin), cap_(cap) {
  if (!(alpha > 1) || xmin == 0 || cap < xmin) throw Error("invalid discrete power-law parameters");
  const double norm = hzeta(alpha, static_cast<double>(xmin));
  const std::size_t len = static_cast<std::size_t>(std::min<std::uint64_t>(cap - xmin + 1, kSurvivalTable));
  survival_.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    survival_[i] = hzeta(alpha, static_cast<double>(xmin + i)) / norm;
  }
}

std::uint64_t DiscretePowerLaw::operator()(SplitMix64& rng) const {
  for (;;) {
    const double u = rng.uniform();
    // First index with survival <= u; X = xmin + index - 1.
    const auto it = std::lower_bound(survival_.begin(), survival_.end(), u, std::greater<>());
    std::uint64_t x;
    if (it != survival_.end()) {
      x = xmin_ + static_cast<std::uint64_t>(it - survival_.begin()) - 1;
    } else {
      // Beyond the table: continuous tail approximation from its end.
      const double t = static_cast<double>(xmin_ + survival_.size()) - 0.5;
      const double s_end = survival_.back();
      const double v = u / s_end;  // conditional uniform in (0, 1)
      const double y = t * std::pow(v, -1.0 / (alpha_ - 1.0));
      x = static_cast<std::uint64_t>(std::min(std::floor(y + 0.5), 1e18));
      x = std::max<std::uint64_t>(x, xmin_ + survival_.size());
    }
    if (x <= cap_) return x;  // resample above the cap
  }
}

double DiscretePowerLaw::mean(double alpha, std::uint64_t xmin) {
  if (alpha <= 2) return std::numeric_limits<double>::infinity();
  return hzeta(alpha - 1, static_cast<double>(xmin)) / hzeta(alpha, static_cast<double>(xmin));
}

// ---------------------------------------------------------------------------

Corpus generate_graph(const GenParams& params) {
  params.validate();
  SplitMix64 rng(named_stream(params.seed, "topology"));
  const std::size_t n = params.n_nodes;

  std::size_t giant = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(params.giant_fraction * static_cast<double>(n))));
  giant = std::min(giant, n);
  if (n - giant == 1) ++giant;  // a single leftover node cannot form a component

  GroundTruth truth;
  truth.params = params;
  truth.node_count = n;
  truth.giant_size = giant;

  // Zero-inflated power-law in-degrees hitting the target mean.
  const double mu = DiscretePowerLaw::mean(params.in_degree_exponent, 1);
  const double target = params.target_avg_degree;
  if (target < 1.0 - 1.0 / static_cast<double>(giant)) {
    throw Error(fmt::format("target_avg_degree {} is below what a connected giant component needs", target));
  }
  if (!(target <= mu)) {
    throw Error(fmt::format("target_avg_degree {} exceeds the in-degree law's mean {}", target, mu));
  }
  const double p0 = 1.0 - target / mu;
  truth.zero_in_degree_probability = p0;
  const DiscretePowerLaw in_law(params.in_degree_exponent, 1, giant - 1);

  std::vector<std::uint64_t> remaining(giant);
  for (auto& k : remaining) k = rng.uniform() < p0 ? 0 : in_law(rng);

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(target * static_cast<double>(giant)) + n);
  std::vector<std::vector<NodeId>> sources(giant);
  auto link = [&](NodeId s, NodeId t) {
    edges.push_back({s, t});
    sources[t].push_back(s);
  };

  // Random-order spanning tree keeps the giant block connected.
  std::vector<NodeId> order(giant);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = giant; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<NodeId> pool;  // connected nodes with unused in-stubs
  if (remaining[order[0]] > 0) pool.push_back(order[0]);
  for (std::size_t pos = 1; pos < giant; ++pos) {
    const NodeId v = order[pos];
    if (remaining[v] == 0) {
      bool attached = false;
      while (!pool.empty() && !attached) {
        const auto slot = rng.below(pool.size());
        const NodeId t = pool[slot];
        if (remaining[t] > 0) {
          link(v, t);
          --remaining[t];
          attached = true;
        }
        if (remaining[t] == 0) {
          pool[slot] = pool.back();
          pool.pop_back();
        }
      }
      if (attached) continue;
      remaining[v] = 1;  // nothing to attach to: take one in-link instead
    }
    const NodeId u = order[rng.below(pos)];
    link(u, v);
    if (--remaining[v] > 0) pool.push_back(v);
  }

  // Remaining stubs: distinct sources weighted by Pareto activity.
  std::vector<double> activity(giant);
  for (auto& a : activity) a = std::pow(1.0 - rng.uniform(), -1.0 / (params.out_activity_exponent - 1.0));
  const Categorical pick(activity);
  for (NodeId v = 0; v < giant; ++v) {
    std::uint64_t need = std::min<std::uint64_t>(remaining[v], giant - 1 - sources[v].size());
    std::size_t attempts = 0;
    while (need > 0) {
      const NodeId u = attempts < 64 * (need + 8) ? static_cast<NodeId>(pick(rng))
                                                  : static_cast<NodeId>(rng.below(giant));
      ++attempts;
      if (u == v || std::find(sources[v].begin(), sources[v].end(), u) != sources[v].end()) continue;
      link(u, v);
      --need;
    }
  }
  truth.giant_edges = edges.size();
  sources.clear();
  sources.shrink_to_fit();

  // Small components: power-law sizes, random recursive trees.
  const double size_alpha = 1.0 + 1.0 / params.small_zipf_exponent;
  const DiscretePowerLaw size_law(size_alpha, 2, std::max<std::size_t>(2, params.small_size_cap));
  std::size_t next = giant;
  while (next < n) {
    std::size_t s = static_cast<std::size_t>(size_law(rng));
    const std::size_t left = n - next;
    if (s > left || left - s == 1) s = left;
    truth.small_component_sizes.push_back(s);
    for (std::size_t j = 1; j < s; ++j) {
      const auto a = static_cast<NodeId>(next + rng.below(j));
      const auto b = static_cast<NodeId>(next + j);
      if (rng.uniform() < 0.5) edges.push_back({a, b});
      else edges.push_back({b, a});
    }
    next += s;
  }

  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = fmt::format("F{:07}", i);
  Corpus corpus;
  corpus.graph = FirmGraph::from_edges(n, std::move(edges), {}, std::move(ids));
  truth.edge_count = corpus.graph.edge_count();
  corpus.truth = std::move(truth);
  return corpus;
}

std::vector<std::uint8_t> plant_labels(const FirmGraph& graph, const LabelParams& params, std::uint64_t seed,
                                       std::vector<std::uint8_t>* origin) {
  const std::size_t n = graph.node_count();
  SplitMix64 rng(named_stream(seed, "labels"));
  std::vector<std::uint8_t> labels(n, 0), how(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < params.base_rate) labels[i] = how[i] = 1;
  }
  const double b = params.investee_bias;
  const double w_out = 2.0 * b / (b + 1.0), w_in = 2.0 / (b + 1.0);
  double beta = params.beta;
  for (unsigned sweep = 0; sweep < params.sweeps; ++sweep) {
    const std::vector<std::uint8_t> before = labels;
    const double log_keep = std::log1p(-std::min(beta, 1.0 - 1e-300));
    for (std::size_t i = 0; i < n; ++i) {
      // One draw per node per sweep keeps the stream layout independent of
      // the labels.
      const double u = rng.uniform();
      if (before[i]) continue;
      std::size_t k_out = 0, k_in = 0;
      for (NodeId j : graph.out(static_cast<NodeId>(i))) k_out += before[j];
      for (NodeId j : graph.in(static_cast<NodeId>(i))) k_in += before[j];
      if (k_out + k_in == 0) continue;
      const double exposure = w_out * static_cast<double>(k_out) + w_in * static_cast<double>(k_in);
      const double p = beta >= 1.0 ? 1.0 : -std::expm1(exposure * log_keep);
      if (u < p) {
        labels[i] = 1;
        how[i] = 2;
      }
    }
    beta *= params.decay;
  }
  if (origin) *origin = std::move(how);
  return labels;
}

AttributeTable generate_attributes(const FirmGraph& graph, const FeatureSchema& schema, double missing_rate,
                                   double label_correlation, std::uint64_t seed, std::size_t* incomplete_rows) {
  check_probability(missing_rate, "missing_attr_rate");
  check_probability(label_correlation, "label_attr_correlation");
  const std::size_t n = graph.node_count();
  SplitMix64 risk_rng(named_stream(seed, "attribute_risk"));
  SplitMix64 rng(named_stream(seed, "attributes"));

  // Marginals and their label-tilted versions per attribute.
  std::vector<Categorical> clean, tilted;
  for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
    const auto h = schema.vocabulary(a).size();
    std::vector<double> w(h);
    if (a == 1 && h == 5) {
      w = {0.02, 0.08, 0.30, 0.50, 0.10};
    } else {
      const double offset = a == 0 ? 10.0 : a == 2 ? 5.0 : 3.0;
      for (std::size_t k = 0; k < h; ++k) w[k] = 1.0 / (static_cast<double>(k) + offset);
    }
    std::vector<double> t(h);
    for (std::size_t k = 0; k < h; ++k) t[k] = w[k] * std::exp(label_correlation * normal(risk_rng));
    clean.emplace_back(w);
    tilted.emplace_back(t);
  }

  AttributeTable table(n);
  std::size_t incomplete = 0;
  const auto labels = graph.labels();
  for (std::size_t i = 0; i < n; ++i) {
    FirmAttributes row;
    const bool bad = labels[i] != 0;
    const double log_capital = 13.0 - (bad ? label_correlation : 0.0) + 1.5 * normal(rng);
    row.registered_capital = std::round(std::exp(log_capital) * 100.0) / 100.0;
    for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
      const auto k = (bad ? tilted[a] : clean[a])(rng);
      row.categorical[a] = schema.vocabulary(a)[k];
    }
    const double u = rng.uniform();
    const auto field = rng.below(kCategoricalAttributeCount + 1);
    if (u < missing_rate) {
      ++incomplete;
      if (field == 0) row.registered_capital.reset();
      else row.categorical[field - 1].reset();
    }
    table.set(static_cast<NodeId>(i), row);
  }
  if (incomplete_rows) *incomplete_rows = incomplete;
  return table;
}

Corpus generate_corpus(const GenParams& params, const FeatureSchema& schema) {
  Corpus corpus = generate_graph(params);
  auto labels = plant_labels(corpus.graph, params.labels, params.seed, &corpus.label_origin);
  corpus.graph = corpus.graph.with_labels(std::move(labels));
  for (auto o : corpus.label_origin) {
    if (o == 1) ++corpus.truth.seeded;
    if (o == 2) ++corpus.truth.induced;
  }
  corpus.attributes = generate_attributes(corpus.graph, schema, params.missing_attr_rate,
                                          params.label_attr_correlation, params.seed,
                                          &corpus.truth.incomplete_attribute_rows);
  return corpus;
}

std::string GroundTruth::to_json() const {
  nlohmann::ordered_json doc;
  const auto& p = params;
  doc["params"] = {{"n_nodes", p.n_nodes},
                   {"target_avg_degree", p.target_avg_degree},
                   {"in_degree_exponent", p.in_degree_exponent},
                   {"giant_fraction", p.giant_fraction},
                   {"small_zipf_exponent", p.small_zipf_exponent},
                   {"small_size_cap", p.small_size_cap},
                   {"out_activity_exponent", p.out_activity_exponent},
                   {"base_rate", p.labels.base_rate},
                   {"beta", p.labels.beta},
                   {"decay", p.labels.decay},
                   {"sweeps", p.labels.sweeps},
                   {"investee_bias", p.labels.investee_bias},
                   {"missing_attr_rate", p.missing_attr_rate},
                   {"label_attr_correlation", p.label_attr_correlation},
                   {"seed", p.seed}};
  doc["node_count"] = node_count;
  doc["edge_count"] = edge_count;
  doc["giant_size"] = giant_size;
  doc["giant_edges"] = giant_edges;
  doc["giant_avg_degree"] = giant_size ? static_cast<double>(giant_edges) / static_cast<double>(giant_size) : 0.0;
  doc["zero_in_degree_probability"] = zero_in_degree_probability;
  doc["small_components"] = small_component_sizes.size();
  doc["seeded"] = seeded;
  doc["induced"] = induced;
  doc["discreditable"] = seeded + induced;
  doc["incomplete_attribute_rows"] = incomplete_attribute_rows;
  doc["small_component_sizes"] = small_component_sizes;
  return doc.dump(2) + "\n";
}

void write_corpus(const Corpus& corpus, const FeatureSchema& schema, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& g = corpus.graph;
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", (dir / name).string()));
    return out;
  };
  {
    auto out = open("edges.csv");
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "investor_id,investee_id\n");
    for (NodeId v = 0; v < g.node_count(); ++v) {
      for (NodeId t : g.out(v)) fmt::format_to(std::back_inserter(buf), "{},{}\n", g.external_id(v), g.external_id(t));
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  {
    auto out = open("labels.csv");
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "firm_id,discreditable\n");
    for (NodeId v = 0; v < g.node_count(); ++v) {
      fmt::format_to(std::back_inserter(buf), "{},{}\n", g.external_id(v), g.is_discreditable(v) ? 1 : 0);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  {
    auto out = open("attributes.csv");
    std::vector<std::string> fields{"firm_id", std::string(kCapitalFeature)};
    for (auto a : kCategoricalAttributes) fields.emplace_back(a);
    write_csv_row(out, fields);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      if (!corpus.attributes.has_row(v)) continue;
      const auto row = corpus.attributes.get(v);
      fields.assign({g.external_id(v), row.registered_capital ? fmt::format("{}", *row.registered_capital) : ""});
      for (const auto& c : row.categorical) fields.push_back(c.value_or(""));
      write_csv_row(out, fields);
    }
  }
  {
    auto out = open("schema.json");
    out << schema.to_json();
  }
  {
    auto out = open("ground_truth.json");
    out << corpus.truth.to_json();
  }
}

}  // namespace ownet
