// Command-line front end: one subcommand per analysis stage plus `run`
// (all stages, optionally from a key=value config file) and `synth`.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <iostream>

#include "ownet/pipeline.hpp"
#include "ownet/synthgen.hpp"

namespace {

using namespace ownet;

/// String-typed mirror of RunConfig so optional and enum fields can be
/// validated after parsing.
struct Flags {
  RunConfig cfg;
  std::string labels, attributes, schema, m_max, semantics = "exact_distance", scope = "giant";
  std::vector<std::string> groups, stages;
  std::string grid;
};

void add_inputs(CLI::App* app, Flags& f) {
  app->add_option("--edges", f.cfg.edges, "Edges CSV (investor_id,investee_id[,share][,investor_type])")->required();
  app->add_option("--labels", f.labels, "Labels CSV (firm_id[,discreditable])");
  app->add_option("--attributes", f.attributes, "Attributes CSV");
  app->add_option("--out,-o", f.cfg.output_dir, "Output directory")->capture_default_str();
  app->add_option("--seed", f.cfg.seed, "Master seed")->capture_default_str();
  app->add_option("--threads", f.cfg.threads, "Worker threads (0 = OpenMP default)")->capture_default_str();
  app->add_option("--scope", f.scope, "giant | all")->capture_default_str();
}

void add_topology(CLI::App* app, Flags& f) {
  app->add_option("--zipf-exclude-top", f.cfg.zipf_exclude_top, "Largest components left out of the Zipf fit")
      ->capture_default_str();
  app->add_option("--xmin", f.cfg.xmin, "Power-law xmin: 'scan' or an integer")->capture_default_str();
  app->add_option("--estimator", f.cfg.estimator, "exact | approximate")->capture_default_str();
}

void add_aggregation(CLI::App* app, Flags& f) {
  app->add_option("--trials", f.cfg.trials, "Null-model trials per component")->capture_default_str();
  app->add_option("--hist-bin-width", f.cfg.hist_bin_width, "Histogram bin width for r")->capture_default_str();
}

void add_propagation(CLI::App* app, Flags& f) {
  app->add_option("--m-max", f.m_max, "Largest m for L(m) (default: denominator >= min)");
  app->add_option("--min-denominator", f.cfg.min_denominator, "Denominator floor for the default m_max")
      ->capture_default_str();
  app->add_option("--d-max", f.cfg.d_max, "Longest distance pattern")->capture_default_str();
  app->add_option("--semantics", f.semantics, "exact_distance | walk")->capture_default_str();
}

void add_features(CLI::App* app, Flags& f) {
  app->add_option("--schema", f.schema, "Schema JSON (default: built-in vocabularies)");
  app->add_option("--groups", f.groups, "Feature groups: individual network combined")->delimiter(',');
  app->add_flag("--export-datasets", f.cfg.export_datasets, "Write dataset_<group>.csv");
}

void add_classifier(CLI::App* app, Flags& f) {
  app->add_option("--folds", f.cfg.folds, "Cross-validation folds")->capture_default_str();
  app->add_option("--s-grid", f.grid, "Comma-separated S values: counts or fractions like 1%");
  app->add_option("--l2", f.cfg.l2, "Ridge penalty on w")->capture_default_str();
  app->add_option("--tol", f.cfg.tol, "Gradient tolerance")->capture_default_str();
  app->add_option("--max-iter", f.cfg.max_iter, "Newton iteration cap")->capture_default_str();
}

RunConfig finish(Flags& f, std::vector<Stage> stages) {
  RunConfig cfg = f.cfg;
  if (!f.labels.empty()) cfg.labels = f.labels;
  if (!f.attributes.empty()) cfg.attributes = f.attributes;
  if (!f.schema.empty()) cfg.schema = f.schema;
  if (!f.m_max.empty()) cfg.m_max = static_cast<std::uint32_t>(std::stoul(f.m_max));
  cfg.semantics = parse_pattern_semantics(f.semantics);
  cfg.scope = parse_scope(f.scope);
  if (!f.groups.empty()) {
    cfg.groups.clear();
    for (const auto& g : f.groups) cfg.groups.push_back(parse_feature_group(g));
  }
  if (!f.grid.empty()) {
    cfg.s_grid.clear();
    std::string item;
    for (char c : f.grid + ",") {
      if (c == ',') {
        if (!item.empty()) cfg.s_grid.push_back(item);
        item.clear();
      } else if (c != ' ') {
        item.push_back(c);
      }
    }
  }
  if (!f.stages.empty()) {
    stages.clear();
    for (const auto& s : f.stages) stages.push_back(parse_stage(s));
  }
  cfg.stages = std::move(stages);
  return cfg;
}

/// Config files hold bare `key=value` lines meant for the `run` subcommand;
/// CLI11 only reads config at the top level, so each key is re-homed there.
class RunConfigFile : public CLI::ConfigINI {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    for (auto& item : items) {
      if (item.parents.empty() && item.name != "++" && item.name != "--") item.parents = {"run"};
    }
    return items;
  }
};

int execute(const RunConfig& cfg) {
  const auto result = run_pipeline(cfg);
  for (const auto& name : result.outputs) fmt::print("{}\n", (cfg.output_dir / name).string());
  if (!result.ok) {
    const std::string stage = result.load_failed ? "load" : std::string(to_string(*result.failed_stage));
    fmt::print(stderr, "error in stage '{}': {}\n", stage, result.error);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ownership-network analytics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  struct Command {
    CLI::App* app;
    Flags flags;
    std::vector<Stage> stages;
  };
  std::vector<std::unique_ptr<Command>> commands;
  auto command = [&](const char* name, const char* help, std::vector<Stage> stages) {
    auto c = std::make_unique<Command>();
    c->app = app.add_subcommand(name, help);
    c->stages = std::move(stages);
    add_inputs(c->app, c->flags);
    commands.push_back(std::move(c));
    return commands.back().get();
  };

  command("ingest", "Load and validate inputs; write a binary graph cache and load report", {Stage::ingest});
  auto* stats = command("stats", "Components, degree distributions, power-law and Zipf fits", {Stage::stats});
  add_topology(stats->app, stats->flags);
  auto* agg = command("aggregation", "Aggregation degree per component against the label null model",
                      {Stage::aggregation});
  add_aggregation(agg->app, agg->flags);
  auto* prop = command("neighbor-effect", "L(m) curves and d-order influence", {Stage::propagation});
  add_propagation(prop->app, prop->flags);
  auto* feat = command("features", "Assemble feature datasets", {Stage::features});
  add_features(feat->app, feat->flags);
  auto* clf = command("train-eval", "Cross-validated precision@S and weight ranking", {Stage::classify});
  add_features(clf->app, clf->flags);
  add_classifier(clf->app, clf->flags);
  auto* run = command("run", "Run several stages in dependency order", all_analysis_stages());
  add_topology(run->app, run->flags);
  add_aggregation(run->app, run->flags);
  add_propagation(run->app, run->flags);
  add_features(run->app, run->flags);
  add_classifier(run->app, run->flags);
  run->app->add_option("--stages", run->flags.stages, "Stages: ingest stats aggregation propagation features classify")
      ->delimiter(',');
  app.config_formatter(std::make_shared<RunConfigFile>());
  app.set_config("--config", "", "Flat key=value file for `run`; command-line flags override it");
  run->app->fallthrough();

  GenParams gen;
  std::filesystem::path synth_out = "corpus";
  std::string schema_path;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted labels");
  synth->add_option("--nodes,-n", gen.n_nodes, "Number of firms")->capture_default_str();
  synth->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  synth->add_option("--out,-o", synth_out, "Output directory")->capture_default_str();
  synth->add_option("--schema", schema_path, "Schema JSON (default: built-in vocabularies)");
  synth->add_option("--avg-degree", gen.target_avg_degree, "Links per node in the giant component")->capture_default_str();
  synth->add_option("--in-degree-exponent", gen.in_degree_exponent, "In-degree power-law exponent")->capture_default_str();
  synth->add_option("--giant-fraction", gen.giant_fraction, "Share of nodes in the giant component")->capture_default_str();
  synth->add_option("--small-zipf", gen.small_zipf_exponent, "Rank-size exponent of small components")->capture_default_str();
  synth->add_option("--small-cap", gen.small_size_cap, "Largest small component")->capture_default_str();
  synth->add_option("--activity-exponent", gen.out_activity_exponent, "Investor activity Pareto exponent")->capture_default_str();
  synth->add_option("--base-rate", gen.labels.base_rate, "Seed label rate q0")->capture_default_str();
  synth->add_option("--beta", gen.labels.beta, "Contagion per discreditable neighbor")->capture_default_str();
  synth->add_option("--decay", gen.labels.decay, "Beta multiplier per extra sweep")->capture_default_str();
  synth->add_option("--sweeps", gen.labels.sweeps, "Propagation sweeps")->capture_default_str();
  synth->add_option("--investee-bias", gen.labels.investee_bias, "Investee vs investor weight")->capture_default_str();
  synth->add_option("--missing-rate", gen.missing_attr_rate, "Share of firms with one missing attribute")->capture_default_str();
  synth->add_option("--attr-correlation", gen.label_attr_correlation, "Label-attribute correlation")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      const auto schema = schema_path.empty() ? FeatureSchema::standard() : FeatureSchema::load(schema_path);
      const auto corpus = generate_corpus(gen, schema);
      write_corpus(corpus, schema, synth_out);
      fmt::print("{} firms, {} links, {} discreditable -> {}\n", corpus.graph.node_count(), corpus.graph.edge_count(),
                 corpus.graph.discreditable_count(), synth_out.string());
      return 0;
    }
    for (auto& c : commands) {
      if (c->app->parsed()) return execute(finish(c->flags, c->stages));
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
