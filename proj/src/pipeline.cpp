#include "ownet/pipeline.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <chrono>
#include <fstream>
#include <json.hpp>
#include <algorithm>
#include <map>
#include <sstream>

#include "ownet/aggregation.hpp"
#include "ownet/checksum.hpp"
#include "ownet/classifier.hpp"
#include "ownet/csv.hpp"
#include "ownet/graph_store.hpp"
#include "ownet/rng.hpp"
#include "ownet/topology.hpp"

namespace ownet {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 6> kStageNames = {"ingest", "stats", "aggregation",
                                                          "propagation", "features", "classify"};

std::string num(double v) { return fmt::format("{}", v); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

class Bundle {
 public:
  explicit Bundle(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, std::string_view content) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + (dir_ / name).string());
    files_[name] = sha256_hex(content);
  }

  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::string text;
    auto append = [&](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) text.push_back(',');
        text += csv_escape(fields[i]);
      }
      text.push_back('\n');
    };
    append(header);
    for (const auto& r : rows) append(r);
    write(name, text);
  }

  void write_json(const std::string& name, const Json& doc) { write(name, doc.dump(2) + "\n"); }

  const std::map<std::string, std::string>& files() const noexcept { return files_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

/// Analysis state shared between stages.
struct Context {
  const RunConfig& config;
  Bundle& bundle;
  LoadedNetwork network;
  std::optional<ComponentIndex> components;
  /// Scope graph, its parent indices (empty for Scope::all) and attributes.
  std::optional<FirmGraph> scoped;
  std::vector<NodeId> scoped_parent;
  std::optional<AttributeTable> scoped_attributes;
  std::optional<FeatureSchema> schema;
  std::map<FeatureGroup, LabeledDataset> datasets;
  std::vector<std::string> warnings;
};

const ComponentIndex& components_of(Context& ctx) {
  if (!ctx.components) ctx.components = weak_components(ctx.network.graph);
  return *ctx.components;
}

const FirmGraph& scoped_graph(Context& ctx) {
  if (ctx.scoped) return *ctx.scoped;
  const auto& g = ctx.network.graph;
  if (ctx.config.scope == Scope::all || g.node_count() == 0) {
    ctx.scoped = g;
    ctx.scoped_attributes = ctx.network.attributes;
    return *ctx.scoped;
  }
  const auto& comp = components_of(ctx);
  const auto giant = comp.largest();
  auto sub = induced_subgraph_if(g, [&](NodeId v) { return comp.assignment[v] == giant; });
  ctx.scoped = std::move(sub.graph);
  ctx.scoped_parent = std::move(sub.parent_index);
  if (ctx.network.attributes) {
    AttributeTable table(ctx.scoped->node_count());
    for (std::size_t i = 0; i < ctx.scoped_parent.size(); ++i) {
      const auto parent = ctx.scoped_parent[i];
      if (ctx.network.attributes->has_row(parent)) table.set(static_cast<NodeId>(i), ctx.network.attributes->get(parent));
    }
    ctx.scoped_attributes = std::move(table);
  }
  return *ctx.scoped;
}

XminPolicy xmin_policy(const std::string& text) {
  if (text == "scan") return XminPolicy::scanning();
  const auto v = parse_integer(text);
  if (!v || *v < 1) throw Error("xmin must be 'scan' or a positive integer");
  return XminPolicy::fixed(static_cast<std::uint64_t>(*v));
}

PowerLawEstimator estimator_of(const std::string& text) {
  if (text == "exact") return PowerLawEstimator::exact;
  if (text == "approximate") return PowerLawEstimator::approximate;
  throw Error("estimator must be 'exact' or 'approximate'");
}

// ---------------------------------------------------------------------------
// Stages

void stage_ingest(Context& ctx) {
  std::ostringstream cache;
  save_graph_cache(ctx.network.graph, cache);
  ctx.bundle.write("graph.ownetgr", cache.str());
  const auto& r = ctx.network.report;
  Json doc;
  doc["nodes"] = ctx.network.graph.node_count();
  doc["edges"] = ctx.network.graph.edge_count();
  doc["discreditable"] = ctx.network.graph.discreditable_count();
  doc["edge_rows"] = r.edge_rows;
  doc["self_loops_dropped"] = r.self_loops_dropped;
  doc["duplicate_edges_dropped"] = r.duplicate_edges_dropped;
  doc["natural_person_rows_dropped"] = r.natural_person_rows_dropped;
  doc["label_rows"] = r.label_rows;
  doc["unknown_labels_ignored"] = r.unknown_labels_ignored;
  doc["attribute_rows"] = r.attribute_rows;
  doc["unknown_attribute_rows_ignored"] = r.unknown_attribute_rows_ignored;
  doc["warnings"] = r.warnings;
  ctx.bundle.write_json("load_report.json", doc);
}

void write_degrees(Context& ctx, const FirmGraph& g, Direction dir) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [degree, count] : degree_distribution(g, dir)) {
    rows.push_back({std::to_string(degree), std::to_string(count)});
  }
  ctx.bundle.write_csv(fmt::format("degree_{}.csv", to_string(dir)), {"degree", "count"}, rows);
}

void stage_stats(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto& g = ctx.network.graph;
  const auto& comp = components_of(ctx);
  const auto& scope = scoped_graph(ctx);

  {
    std::vector<std::vector<std::string>> rows;
    std::size_t rank = 1;
    for (auto c : comp.rank_order) {
      rows.push_back({std::to_string(rank++), std::to_string(c), std::to_string(comp.sizes[c])});
    }
    ctx.bundle.write_csv("component_sizes.csv", {"rank", "component_id", "size"}, rows);
  }
  for (auto dir : {Direction::in, Direction::out, Direction::undirected}) write_degrees(ctx, scope, dir);

  Json doc;
  std::vector<std::pair<std::string, std::string>> flat;
  auto put = [&](const std::string& key, Json value, std::string text) {
    doc[key] = std::move(value);
    flat.emplace_back(key, std::move(text));
  };
  auto put_count = [&](const std::string& key, std::size_t v) { put(key, v, std::to_string(v)); };
  auto put_real = [&](const std::string& key, std::optional<double> v) { put(key, opt(v), num(v)); };

  put_count("nodes", g.node_count());
  put_count("edges", g.edge_count());
  put_count("discreditable", g.discreditable_count());
  put_count("components", comp.count());
  put("scope", std::string(to_string(cfg.scope)), std::string(to_string(cfg.scope)));
  put_count("scope_nodes", scope.node_count());
  put_count("scope_edges", scope.edge_count());
  put_count("scope_discreditable", scope.discreditable_count());
  put_real("scope_base_rate", scope.node_count() ? std::optional<double>(static_cast<double>(scope.discreditable_count()) /
                                                                        static_cast<double>(scope.node_count()))
                                                  : std::nullopt);

  const auto gs = graph_stats(scope);
  put_real("avg_degree", gs.avg_degree);
  put_real("avg_undirected_degree", gs.avg_undirected_degree);
  put_real("clustering_coefficient", gs.clustering_coefficient);
  put_real("assortativity", gs.assortativity);

  const auto policy = xmin_policy(cfg.xmin);
  const auto estimator = estimator_of(cfg.estimator);
  for (auto dir : {Direction::in, Direction::out}) {
    const std::string prefix = fmt::format("{}_degree_", to_string(dir));
    const auto seq = degree_sequence(scope, dir);
    try {
      const auto fit = fit_power_law_mle(seq, policy, estimator);
      put_real(prefix + "alpha", fit.alpha);
      put_count(prefix + "xmin", fit.xmin);
      put_count(prefix + "n_tail", fit.n_tail);
      put_real(prefix + "ks", fit.ks_distance);
    } catch (const std::invalid_argument& e) {
      ctx.warnings.push_back(fmt::format("{} degree power-law fit skipped: {}", to_string(dir), e.what()));
      put_real(prefix + "alpha", std::nullopt);
    }
  }
  try {
    const auto sizes = comp.ranked_sizes();
    const auto z = fit_zipf(sizes, cfg.zipf_exclude_top);
    put_real("zipf_exponent", z.zipf_exponent);
    put_real("zipf_r_squared", z.r_squared);
    put_count("zipf_points", z.points);
    put_real("component_size_powerlaw_exponent", zipf_to_powerlaw_exponent(z.zipf_exponent));
  } catch (const std::exception& e) {
    ctx.warnings.push_back(fmt::format("Zipf fit skipped: {}", e.what()));
    put_real("zipf_exponent", std::nullopt);
  }

  const auto scc = strong_components(scope);
  put_count("strong_components", scc.count());
  const auto cycle = cycle_effect(scope);
  put_count("nodes_on_cycles", cycle.nodes_on_cycles);
  put_real("cycle_discreditable_rate", cycle.p_on_cycle);
  put_real("cycle_increment_rate", cycle.increment_rate);

  std::vector<std::vector<std::string>> rows;
  for (auto& [k, v] : flat) rows.push_back({k, v});
  ctx.bundle.write_csv("stats.csv", {"stat", "value"}, rows);
  ctx.bundle.write_json("stats.json", doc);
}

void stage_aggregation(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto& g = ctx.network.graph;
  const auto& comp = components_of(ctx);
  const auto report = aggregation_report(g, comp, cfg.trials, named_stream(cfg.seed, "aggregation"));

  std::vector<std::vector<std::string>> rows;
  for (const auto& r : report.records) {
    rows.push_back({std::to_string(r.component_id), std::to_string(r.size), std::to_string(r.n_discreditable),
                    std::to_string(r.largest_cluster), num(r.r), num(r.null_mean), num(r.null_std)});
  }
  ctx.bundle.write_csv("aggregation.csv", {"component_id", "size", "N_c", "S_c", "r_c", "null_mean", "null_std"}, rows);

  Json doc;
  doc["trials"] = cfg.trials;
  doc["eligible_components"] = report.records.size();
  if (report.summary) {
    const auto& s = *report.summary;
    doc["mean_r"] = s.mean_r;
    doc["mean_null_r"] = s.mean_null_r;
    doc["frac_r_equal_1"] = s.frac_r_equal_1;
    doc["null_frac_r_equal_1"] = s.null_frac_r_equal_1;
    doc["sigma_diff"] = s.sigma_diff;
    doc["separation_sigmas"] = s.separation_sigmas;
  } else {
    doc["mean_r"] = nullptr;
    ctx.warnings.push_back("aggregation: no eligible component");
  }
  ctx.bundle.write_json("aggregation_summary.json", doc);

  rows.clear();
  for (const auto& b : aggregation_histogram(report, cfg.hist_bin_width)) {
    rows.push_back({num(b.lo), num(b.hi), num(b.p_real), num(b.p_null)});
  }
  ctx.bundle.write_csv("aggregation_hist.csv", {"lo", "hi", "p_real", "p_null"}, rows);

  // Component sizes of the discreditable-induced subgraph, observed vs one
  // uniform relabeling.
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> counts;
  for (auto s : discreditable_subgraph_sizes(g)) ++counts[s].first;
  const auto null_labels = null_relabeling(g, named_stream(cfg.seed, "null_relabeling"));
  for (auto s : discreditable_subgraph_sizes(g, null_labels)) ++counts[s].second;
  rows.clear();
  for (const auto& [size, c] : counts) {
    rows.push_back({std::to_string(size), std::to_string(c.first), std::to_string(c.second)});
  }
  ctx.bundle.write_csv("discreditable_components.csv", {"size", "count_real", "count_null"}, rows);
}

void stage_propagation(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto& g = scoped_graph(ctx);
  std::vector<std::vector<std::string>> rows;
  for (auto dir : {Direction::out, Direction::in, Direction::undirected}) {
    const auto curve = lm_curve(g, dir, cfg.m_max, cfg.min_denominator);
    for (const auto& p : curve.points) {
      rows.push_back({std::string(to_string(dir)), std::to_string(p.m), std::to_string(p.denominator),
                      std::to_string(p.numerator), num(p.L)});
    }
  }
  ctx.bundle.write_csv("lm_curve.csv", {"direction", "m", "denominator", "numerator", "L"}, rows);

  auto patterns = directed_patterns(cfg.d_max);
  for (auto& p : undirected_patterns(cfg.d_max)) patterns.push_back(std::move(p));
  const auto influence = influence_by_distance(g, patterns, cfg.semantics);
  rows.clear();
  for (const auto& e : influence) {
    rows.push_back({e.pattern.name(), num(e.baseline), num(e.conditional), num(e.increment_rate),
                    std::to_string(e.denominator)});
  }
  ctx.bundle.write_csv("influence.csv", {"pattern", "baseline", "conditional", "increment_rate", "denominator"}, rows);
}

const FeatureSchema& schema_of(Context& ctx) {
  if (!ctx.schema) ctx.schema = ctx.config.schema ? FeatureSchema::load(*ctx.config.schema) : FeatureSchema::standard();
  return *ctx.schema;
}

void build_datasets(Context& ctx) {
  if (!ctx.datasets.empty()) return;
  const auto& g = scoped_graph(ctx);
  const auto& schema = schema_of(ctx);
  for (auto group : ctx.config.groups) {
    const AttributeTable* attrs = ctx.scoped_attributes ? &*ctx.scoped_attributes : nullptr;
    if (group != FeatureGroup::network && !attrs) {
      throw Error(fmt::format("feature group '{}' needs an attributes file", to_string(group)));
    }
    ctx.datasets.emplace(group, assemble_dataset(g, attrs, schema, group));
  }
}

void stage_features(Context& ctx) {
  build_datasets(ctx);
  const auto& g = scoped_graph(ctx);
  Json doc;
  doc["scope_nodes"] = g.node_count();
  doc["capital_transform"] = "log1p, z-scored with training-fold statistics";
  Json groups = Json::object();
  for (const auto& [group, data] : ctx.datasets) {
    Json entry;
    entry["rows"] = data.rows();
    entry["dimension"] = data.cols();
    entry["completeness"] = g.node_count() ? static_cast<double>(data.rows()) / static_cast<double>(g.node_count()) : 0.0;
    std::size_t positives = 0;
    for (auto y : data.labels()) positives += y;
    entry["discreditable"] = positives;
    entry["feature_names"] = data.feature_names();
    groups[std::string(to_string(group))] = entry;
    if (ctx.config.export_datasets) {
      std::ostringstream out;
      data.write_csv(out);
      ctx.bundle.write(fmt::format("dataset_{}.csv", to_string(group)), out.str());
    }
  }
  doc["groups"] = groups;
  ctx.bundle.write_json("features.json", doc);
}

void stage_classify(Context& ctx) {
  const auto& cfg = ctx.config;
  build_datasets(ctx);
  std::vector<GridValue> grid;
  for (const auto& s : cfg.s_grid) grid.push_back(GridValue::parse(s));
  TrainHyper hyper{cfg.l2, cfg.tol, cfg.max_iter};
  const auto cv_seed = named_stream(cfg.seed, "cross_validation");

  std::vector<std::vector<std::string>> rows;
  for (const auto& [group, data] : ctx.datasets) {
    const auto report = cross_validate(data, cfg.folds, cv_seed, grid, hyper);
    for (const auto& w : report.warnings) ctx.warnings.push_back(fmt::format("{}: {}", to_string(group), w));
    for (const auto& p : report.curve) {
      rows.push_back({std::string(to_string(group)), std::to_string(p.S), num(p.P_mean), num(p.P_std)});
    }
  }
  ctx.bundle.write_csv("precision.csv", {"feature_group", "S", "P_mean", "P_std"}, rows);

  // Weight ranking from a model fit on all rows of the widest group.
  const auto it = ctx.datasets.count(FeatureGroup::combined) ? ctx.datasets.find(FeatureGroup::combined)
                                                              : std::prev(ctx.datasets.end());
  const auto model = train(it->second, hyper);
  if (!model.converged()) {
    ctx.warnings.push_back(fmt::format("full-data model stopped by {} after {} iterations (gradient {})",
                                       to_string(model.stop), model.iterations, model.gradient_norm));
  }
  rows.clear();
  std::size_t rank = 1;
  for (const auto& e : weight_report(model).entries) {
    rows.push_back({std::to_string(rank++), e.feature, num(e.weight)});
  }
  ctx.bundle.write_csv("weights.csv", {"rank", "feature", "weight"}, rows);
  ctx.bundle.write("model.json", model_to_json(model, it->first));
}

Json config_json(const RunConfig& c) {
  Json doc;
  doc["edges"] = c.edges.string();
  doc["labels"] = c.labels ? Json(c.labels->string()) : Json(nullptr);
  doc["attributes"] = c.attributes ? Json(c.attributes->string()) : Json(nullptr);
  doc["schema"] = c.schema ? Json(c.schema->string()) : Json(nullptr);
  doc["scope"] = std::string(to_string(c.scope));
  doc["zipf_exclude_top"] = c.zipf_exclude_top;
  doc["xmin"] = c.xmin;
  doc["estimator"] = c.estimator;
  doc["trials"] = c.trials;
  doc["hist_bin_width"] = c.hist_bin_width;
  doc["m_max"] = c.m_max ? Json(*c.m_max) : Json(nullptr);
  doc["min_denominator"] = c.min_denominator;
  doc["d_max"] = c.d_max;
  doc["semantics"] = std::string(to_string(c.semantics));
  std::vector<std::string> groups;
  for (auto g : c.groups) groups.emplace_back(to_string(g));
  doc["groups"] = groups;
  doc["export_datasets"] = c.export_datasets;
  doc["folds"] = c.folds;
  doc["s_grid"] = c.s_grid;
  doc["l2"] = c.l2;
  doc["tol"] = c.tol;
  doc["max_iter"] = c.max_iter;
  return doc;
}

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

Stage parse_stage(std::string_view text) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == text) return static_cast<Stage>(i);
  }
  if (text == "topology") return Stage::stats;
  if (text == "neighbor-effect") return Stage::propagation;
  if (text == "train-eval") return Stage::classify;
  throw std::invalid_argument("unknown stage '" + std::string(text) + "'");
}

std::vector<Stage> all_analysis_stages() {
  return {Stage::stats, Stage::aggregation, Stage::propagation, Stage::features, Stage::classify};
}

std::string_view to_string(Scope scope) { return scope == Scope::giant ? "giant" : "all"; }

Scope parse_scope(std::string_view text) {
  if (text == "giant") return Scope::giant;
  if (text == "all") return Scope::all;
  throw std::invalid_argument("scope must be 'giant' or 'all'");
}

void RunConfig::validate() const {
  auto need_file = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::is_regular_file(p)) throw Error(fmt::format("{} file not found: {}", what, p.string()));
  };
  need_file(edges, "edges");
  if (labels) need_file(*labels, "labels");
  if (attributes) need_file(*attributes, "attributes");
  if (schema) need_file(*schema, "schema");
  if (stages.empty()) throw Error("no stage requested");
  if (trials == 0) throw Error("trials must be positive");
  if (d_max == 0 || d_max > kMaxPatternLength) throw Error(fmt::format("d_max must be in [1, {}]", kMaxPatternLength));
  if (folds < 2) throw Error("folds must be at least 2");
  if (groups.empty()) throw Error("no feature group requested");
  if (!(hist_bin_width > 0 && hist_bin_width <= 1)) throw Error("hist_bin_width must be in (0, 1]");
  if (l2 < 0 || !(tol > 0) || max_iter == 0) throw Error("invalid training hyperparameters");
  for (const auto& s : s_grid) GridValue::parse(s);
  xmin_policy(xmin);
  estimator_of(estimator);
}

RunResult run_pipeline(const RunConfig& config) {
  using Clock = std::chrono::steady_clock;
  RunResult result;
  std::filesystem::create_directories(config.output_dir);
  Bundle bundle(config.output_dir);
  if (config.threads > 0) omp_set_num_threads(config.threads);

  std::vector<Stage> stages = config.stages;
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());

  Json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["seed"] = config.seed;
  manifest["config"] = config_json(config);
  Json timings = Json::object();
  std::vector<std::string> completed;
  std::optional<Context> ctx;

  auto timed = [&](const std::string& name, auto&& fn) {
    const auto start = Clock::now();
    fn();
    timings[name] = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };

  Json inputs = Json::array();
  try {
    config.validate();
    auto add_input = [&](const char* role, const std::filesystem::path& p) {
      inputs.push_back({{"role", role}, {"path", p.string()}, {"sha256", sha256_file_hex(p)}});
    };
    add_input("edges", config.edges);
    if (config.labels) add_input("labels", *config.labels);
    if (config.attributes) add_input("attributes", *config.attributes);
    if (config.schema) add_input("schema", *config.schema);
    timed("load", [&] {
      ctx.emplace(Context{config, bundle, load_graph_files(config.edges, config.labels, config.attributes), {}, {}, {}, {}, {}, {}, {}});
    });
    completed.emplace_back("load");
  } catch (const std::exception& e) {
    result.ok = false;
    result.load_failed = true;
    result.error = e.what();
  }
  manifest["inputs"] = inputs;

  if (ctx) {
    for (auto stage : stages) {
      try {
        timed(std::string(to_string(stage)), [&] {
          switch (stage) {
            case Stage::ingest: stage_ingest(*ctx); break;
            case Stage::stats: stage_stats(*ctx); break;
            case Stage::aggregation: stage_aggregation(*ctx); break;
            case Stage::propagation: stage_propagation(*ctx); break;
            case Stage::features: stage_features(*ctx); break;
            case Stage::classify: stage_classify(*ctx); break;
          }
        });
        completed.emplace_back(to_string(stage));
      } catch (const std::exception& e) {
        result.ok = false;
        result.failed_stage = stage;
        result.error = e.what();
        break;
      }
    }
  }

  std::vector<std::string> requested{"load"};
  for (auto s : stages) requested.emplace_back(to_string(s));
  manifest["stages_requested"] = requested;
  manifest["stages_completed"] = completed;
  if (result.ok) {
    manifest["failed_stage"] = nullptr;
    manifest["error"] = nullptr;
  } else {
    manifest["failed_stage"] = result.load_failed ? std::string("load") : std::string(to_string(*result.failed_stage));
    manifest["error"] = result.error;
  }
  if (ctx) {
    const auto& g = ctx->network.graph;
    manifest["load"] = {{"nodes", g.node_count()},
                        {"edges", g.edge_count()},
                        {"discreditable", g.discreditable_count()},
                        {"attribute_rows", ctx->network.attributes ? ctx->network.attributes->row_count() : 0},
                        {"warnings", ctx->network.report.warnings.size()}};
    manifest["warnings"] = ctx->warnings;
  }
  Json outputs = Json::array();
  for (const auto& [name, hash] : bundle.files()) {
    outputs.push_back({{"file", name}, {"sha256", hash}});
    result.outputs.push_back(name);
  }
  manifest["outputs"] = outputs;
  manifest["stage_timings_ms"] = timings;
  bundle.write_json("manifest.json", manifest);
  return result;
}

}  // namespace ownet
