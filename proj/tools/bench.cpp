// bench: lambda sweeps over the random-walk CF variants, plus dataset
// inspection and recommendation dumps.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bicf/bicf.hpp"

namespace {

struct DataOptions {
  std::string path;
  std::string format = "ml1m";
  int threshold = 3;
};

void add_data_options(CLI::App& app, DataOptions& d, bool required) {
  auto* data = app.add_option("--data", d.path, "Rating file");
  if (required) data->required();
  app.add_option("--format", d.format, "Rating file format")->check(CLI::IsMember({"ml1m", "ml100k"}));
  app.add_option("--threshold", d.threshold, "Minimum rating that counts as a link")->check(CLI::Range(1, 5));
}

int inspect(const DataOptions& d) {
  const auto records = bicf::load_ratings(d.path, bicf::parse_rating_format(d.format));
  const auto graph = bicf::coarse_grain(records, d.threshold);
  const auto s = bicf::dataset_stats(records, graph);
  std::printf("records            %zu\n", s.records);
  std::printf("users (raw)        %zu\n", s.raw_users);
  std::printf("objects (raw)      %zu\n", s.raw_objects);
  std::printf("max user id        %lld\n", static_cast<long long>(s.max_user_id));
  std::printf("max object id      %lld\n", static_cast<long long>(s.max_object_id));
  std::printf("users (linked)     %zu\n", s.users);
  std::printf("objects (linked)   %zu\n", s.objects);
  std::printf("links              %zu\n", s.links);
  std::printf("sparsity (linked)  %.3e\n", s.linked_sparsity());
  std::printf("sparsity (raw)     %.3e\n", s.raw_sparsity());
  std::printf("sparsity (catalog) %.3e\n", s.catalog_sparsity());
  return 0;
}

int recommend(const DataOptions& d, const std::string& variant, double lambda, std::size_t length,
              const std::string& output, unsigned threads) {
  const auto graph = bicf::coarse_grain(bicf::load_ratings(d.path, bicf::parse_rating_format(d.format)), d.threshold);
  const bicf::AlgorithmSpec spec{bicf::parse_variant(variant), lambda};
  const auto s = bicf::first_order(graph, threads);
  std::vector<bicf::RecommendationList> lists;
  if (spec.variant == bicf::Variant::cf) {
    lists = bicf::recommend_all(s, graph, spec, length, threads);
  } else {
    auto h = bicf::second_order(s, lambda, threads);
    if (spec.variant == bicf::Variant::mhcf) h = bicf::max_symmetrize(h);
    lists = bicf::recommend_all(h, graph, spec, length, threads);
  }
  if (output.empty() || output == "-") {
    bicf::write_recommendations(std::cout, lists, graph);
  } else {
    std::ofstream out(output);
    if (!out) throw std::runtime_error("cannot open '" + output + "' for writing");
    bicf::write_recommendations(out, lists, graph);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-walk collaborative filtering benchmark"};
  app.require_subcommand(0, 1);

  DataOptions data;
  std::string variants = "cf,hcf,hdcf,mhcf";
  std::string grid = "-1.0:0.0:0.05";
  std::string ranking_mode = "per-entry";
  std::string output_format = "csv";
  bicf::ExperimentConfig config;
  add_data_options(app, data, false);
  app.add_option("--train-fraction", config.train_fraction, "Share of links used for training");
  app.add_option("--runs", config.runs, "Independent splits per cell");
  app.add_option("--seed", config.base_seed, "Seed of run 0; run r uses seed + r");
  app.add_option("--variants", variants, "Comma-separated subset of cf,hcf,hdcf,mhcf");
  app.add_option("--lambda-grid", grid, "start:stop:step or comma-separated list");
  app.add_option("--list-length", config.list_length, "Recommendation list length L");
  app.add_option("--ranking-mode", ranking_mode, "Ranking score averaging")
      ->check(CLI::IsMember({"per-entry", "per-user"}));
  app.add_option("--output", config.output_path, "Report path ('-' for stdout)");
  app.add_option("--output-format", output_format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", config.threads, "Worker threads (0 = all cores)");
  app.add_flag("-v,--verbose", config.verbose, "Per-cell progress on stderr");

  auto* inspect_cmd = app.add_subcommand("inspect", "Print dataset statistics");
  DataOptions inspect_data;
  add_data_options(*inspect_cmd, inspect_data, true);

  auto* rec_cmd = app.add_subcommand("recommend", "Dump top-L lists for every user of the full graph");
  DataOptions rec_data;
  std::string rec_variant = "hdcf";
  double rec_lambda = -0.8;
  std::size_t rec_length = 10;
  std::string rec_output;
  add_data_options(*rec_cmd, rec_data, true);
  rec_cmd->add_option("--variant", rec_variant, "cf, hcf, hdcf or mhcf");
  rec_cmd->add_option("--lambda", rec_lambda, "Second-order weight");
  rec_cmd->add_option("--list-length", rec_length, "List length L");
  rec_cmd->add_option("--output", rec_output, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (inspect_cmd->parsed()) return inspect(inspect_data);
    if (rec_cmd->parsed()) return recommend(rec_data, rec_variant, rec_lambda, rec_length, rec_output, config.threads);

    if (data.path.empty()) throw std::invalid_argument("--data is required");
    config.dataset_path = data.path;
    config.format = bicf::parse_rating_format(data.format);
    config.threshold = data.threshold;
    config.variants = bicf::parse_variants(variants);
    config.lambda_grid = bicf::parse_lambda_grid(grid);
    config.ranking_mode = bicf::parse_ranking_mode(ranking_mode);
    config.output_format = bicf::parse_output_format(output_format);
    config.validate();

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    const auto graph = bicf::load_graph(config);
    std::clog << "loaded " << graph.users() << " users, " << graph.objects() << " objects, " << graph.links()
              << " links in " << elapsed() << " s\n";
    bicf::ProgressFn progress;
    if (config.verbose) {
      progress = [&](const bicf::RunRow& row) {
        const auto& m = row.metrics;
        std::clog << "[" << elapsed() << " s] " << bicf::to_string(row.variant) << " lambda=" << row.lambda
                  << " run=" << row.run << " r=" << m.ranking_score << " (entry " << m.ranking_score_per_entry
                  << ", user " << m.ranking_score_per_user << ") S=" << m.diversity << " k=" << m.popularity
                  << " P=" << m.precision << " R=" << m.recall << '\n';
      };
    }
    const auto result = bicf::lambda_sweep(config, graph, progress);
    if (config.output_path.empty() || config.output_path == "-")
      bicf::emit_report(result, config.output_format, std::cout);
    else
      bicf::emit_report(result, config.output_format, config.output_path);
    std::clog << "sweep finished in " << elapsed() << " s\n";
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
