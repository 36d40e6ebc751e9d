#pragma once

// Experiment runner: split -> similarity -> recommend -> metrics, repeated
// over seeds, variants and a lambda grid, with CSV/JSON reports.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "bicf/ingest.hpp"
#include "bicf/metrics.hpp"
#include "bicf/recommend.hpp"
#include "bicf/simkernel.hpp"

namespace bicf {

enum class OutputFormat { csv, json };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw std::invalid_argument("unknown output format '" + std::string(s) + "'");
}

struct ExperimentConfig {
  std::string dataset_path;
  RatingFormat format = RatingFormat::double_colon;
  int threshold = 3;
  double train_fraction = 0.9;
  std::size_t runs = 10;
  std::uint64_t base_seed = 42;
  std::vector<Variant> variants{Variant::cf, Variant::hcf, Variant::hdcf, Variant::mhcf};
  std::vector<double> lambda_grid;
  std::size_t list_length = 10;
  std::string output_path;
  OutputFormat output_format = OutputFormat::csv;
  RankingMode ranking_mode = RankingMode::per_entry;
  unsigned threads = 0;  // 0 = hardware concurrency
  bool verbose = false;

  void validate() const {
    if (runs < 1) throw std::invalid_argument("runs must be at least 1");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
      throw std::invalid_argument("train fraction must lie in (0,1]");
    if (list_length < 1) throw std::invalid_argument("list length must be at least 1");
    if (variants.empty()) throw std::invalid_argument("no variants selected");
    if (lambda_grid.empty()) throw std::invalid_argument("empty lambda grid");
    for (double l : lambda_grid) check_lambda(l);
  }
};

/// "start:stop:step" (inclusive) or a comma-separated list. Grid points are
/// rounded to 12 decimals so -1 + 3*0.05 prints as -0.85.
inline std::vector<double> parse_lambda_grid(std::string_view text) {
  auto to_double = [](std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("bad number '" + std::string(s) + "' in lambda grid");
    return v;
  };
  std::vector<double> grid;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = detail::split_fields(text, ":");
    if (parts.size() != 3) throw std::invalid_argument("lambda range must be start:stop:step");
    const double start = to_double(parts[0]), stop = to_double(parts[1]), step = to_double(parts[2]);
    if (!(step > 0.0) || stop < start) throw std::invalid_argument("lambda range needs step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) {
      const double v = std::round((start + static_cast<double>(k) * step) * 1e12) / 1e12;
      grid.push_back(v == 0.0 ? 0.0 : v);
    }
  } else {
    for (auto part : detail::split_fields(text, ",")) grid.push_back(to_double(detail::trim(part)));
  }
  if (grid.empty()) throw std::invalid_argument("empty lambda grid");
  return grid;
}

inline std::vector<Variant> parse_variants(std::string_view text) {
  std::vector<Variant> out;
  for (auto part : detail::split_fields(text, ",")) out.push_back(parse_variant(detail::trim(part)));
  return out;
}

/// Everything one (graph, fraction, seed) division needs: the split, the
/// first-order matrix, and its square on demand. S and S^2 do not depend
/// on lambda, so every grid point reuses them.
class RunContext {
public:
  RunContext(const BipartiteGraph& graph, double fraction, std::uint64_t seed, unsigned threads = 0)
      : split_(split(graph, fraction, seed)), threads_(threads) {
    probe_by_user_ = probe_by_user(split_);
    if (split_.probe.empty()) throw std::invalid_argument("probe set is empty; lower the train fraction");
    s_ = first_order(split_.train, threads_);
  }

  const Split& data_split() const noexcept { return split_; }
  const SimilarityMatrix& first() const noexcept { return s_; }

  const DenseMatrix& squared() {
    if (!s2_) s2_ = square(s_, threads_);
    return *s2_;
  }

  /// Metrics for one variant. Weights are formed entrywise from S and S^2
  /// with the same expressions as second_order / max_symmetrize, so the
  /// result matches recommend_all on the materialised matrix exactly.
  MetricsReport evaluate(const AlgorithmSpec& spec, std::size_t length, RankingMode mode) {
    const auto& train = split_.train;
    const DenseMatrix& s = s_.values();
    const DenseMatrix* s2 = spec.variant == Variant::cf ? nullptr : &squared();
    const double lambda = spec.lambda;

    std::vector<RecommendationList> lists(train.users());
    std::vector<std::vector<ProbeRank>> ranks(train.users());
    auto visit = [&](Index i, std::span<const double> scores) {
      lists[i] = top_l(scores, train, i, length);
      const std::size_t candidates = train.objects() - train.user_degree(i);
      for (Index l : probe_by_user_[i]) ranks[i].push_back({i, rank_of(scores, train, i, l), candidates});
    };
    switch (spec.variant) {
      case Variant::cf:
        for_each_user_scores(train, threads_, [&](std::size_t i, std::size_t j) { return s(j, i); }, visit);
        break;
      case Variant::hcf:
        for_each_user_scores(
            train, threads_,
            [&](std::size_t i, std::size_t j) { return second_order_entry(s(j, i), (*s2)(j, i), lambda); }, visit);
        break;
      case Variant::hdcf:
        for_each_user_scores(
            train, threads_,
            [&](std::size_t i, std::size_t j) { return second_order_entry(s(i, j), (*s2)(i, j), lambda); }, visit);
        break;
      case Variant::mhcf:
        for_each_user_scores(
            train, threads_,
            [&](std::size_t i, std::size_t j) {
              return std::max(second_order_entry(s(i, j), (*s2)(i, j), lambda),
                              second_order_entry(s(j, i), (*s2)(j, i), lambda));
            },
            visit);
        break;
    }
    std::vector<ProbeRank> flat;
    flat.reserve(split_.probe.size());
    for (auto& r : ranks) flat.insert(flat.end(), r.begin(), r.end());
    return bicf::evaluate(lists, flat, split_.probe, train, length, mode);
  }

private:
  Split split_;
  std::vector<std::vector<Index>> probe_by_user_;
  unsigned threads_;
  SimilarityMatrix s_;
  std::optional<DenseMatrix> s2_;
};

inline BipartiteGraph load_graph(const ExperimentConfig& config) {
  try {
    const auto records = load_ratings(config.dataset_path, config.format);
    return coarse_grain(records, config.threshold);
  } catch (const std::exception& e) {
    throw std::runtime_error("ingesting '" + config.dataset_path + "': " + e.what());
  }
}

inline MetricsReport run_single(const ExperimentConfig& config, const BipartiteGraph& graph, Variant variant,
                                double lambda, std::uint64_t seed) {
  RunContext ctx(graph, config.train_fraction, seed, config.threads);
  return ctx.evaluate({variant, variant == Variant::cf ? 0.0 : lambda}, config.list_length, config.ranking_mode);
}

inline MetricsReport run_single(const ExperimentConfig& config, Variant variant, double lambda, std::uint64_t seed) {
  return run_single(config, load_graph(config), variant, lambda, seed);
}

struct RunRow {
  Variant variant = Variant::cf;
  double lambda = 0.0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  MetricsReport metrics;

  friend bool operator==(const RunRow&, const RunRow&) = default;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;

  friend bool operator==(const MeanStd&, const MeanStd&) = default;
};

struct Aggregate {
  Variant variant = Variant::cf;
  double lambda = 0.0;
  std::size_t runs = 0;
  std::size_t list_length = 0;
  MeanStd ranking_score, diversity, popularity, precision, recall;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct SweepResult {
  std::vector<RunRow> rows;  // ordered by (variant, lambda, run)
  std::vector<Aggregate> aggregates;

  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

/// Arithmetic mean and sample standard deviation (0 for a single value).
inline MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

/// Aggregate over rows that share (variant, lambda).
inline Aggregate aggregate_rows(std::span<const RunRow> rows) {
  Aggregate a;
  a.variant = rows.front().variant;
  a.lambda = rows.front().lambda;
  a.runs = rows.size();
  a.list_length = rows.front().metrics.list_length;
  std::vector<double> v(rows.size());
  auto column = [&](auto field) {
    for (std::size_t k = 0; k < rows.size(); ++k) v[k] = rows[k].metrics.*field;
    return mean_std(v);
  };
  a.ranking_score = column(&MetricsReport::ranking_score);
  a.diversity = column(&MetricsReport::diversity);
  a.popularity = column(&MetricsReport::popularity);
  a.precision = column(&MetricsReport::precision);
  a.recall = column(&MetricsReport::recall);
  return a;
}

using ProgressFn = std::function<void(const RunRow&)>;

/// Every (variant, lambda, run) cell, run seeds base_seed + run. All variants
/// of one run share the same split.
inline SweepResult lambda_sweep(const ExperimentConfig& config, const BipartiteGraph& graph,
                                const ProgressFn& progress = {}) {
  config.validate();
  const std::size_t nv = config.variants.size();
  const std::size_t nl = config.lambda_grid.size();
  const std::size_t nr = config.runs;
  SweepResult result;
  result.rows.resize(nv * nl * nr);
  for (std::size_t run = 0; run < nr; ++run) {
    const std::uint64_t seed = config.base_seed + run;
    RunContext ctx(graph, config.train_fraction, seed, config.threads);
    std::optional<MetricsReport> cf_report;
    for (std::size_t v = 0; v < nv; ++v) {
      const Variant variant = config.variants[v];
      for (std::size_t k = 0; k < nl; ++k) {
        const double lambda = config.lambda_grid[k];
        MetricsReport report;
        try {
          if (variant == Variant::cf) {
            // lambda does not enter CF; one evaluation serves the whole grid
            if (!cf_report) cf_report = ctx.evaluate({Variant::cf, 0.0}, config.list_length, config.ranking_mode);
            report = *cf_report;
          } else {
            report = ctx.evaluate({variant, lambda}, config.list_length, config.ranking_mode);
          }
        } catch (const std::exception& e) {
          throw std::runtime_error(std::string("sweep cell (") + to_string(variant) + ", lambda=" +
                                   std::to_string(lambda) + ", run=" + std::to_string(run) + ") failed: " + e.what());
        }
        RunRow& row = result.rows[(v * nl + k) * nr + run];
        row = {variant, lambda, run, seed, report};
        if (progress) progress(row);
      }
    }
  }
  for (std::size_t cell = 0; cell < nv * nl; ++cell)
    result.aggregates.push_back(aggregate_rows(std::span<const RunRow>(result.rows).subspan(cell * nr, nr)));
  return result;
}

inline SweepResult lambda_sweep(const ExperimentConfig& config, const ProgressFn& progress = {}) {
  return lambda_sweep(config, load_graph(config), progress);
}

// Reports -------------------------------------------------------------------

/// Shortest decimal that reads back to the same double (at most 17
/// significant digits).
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw FormatError("bad number '" + std::string(s) + "'");
  return v;
}

inline constexpr std::string_view kCsvHeader =
    "variant,lambda,r_mean,r_std,S_mean,S_std,k_mean,k_std,P_mean,P_std,R_mean,R_std,runs,L";

inline void write_csv(std::ostream& out, const SweepResult& result) {
  out << kCsvHeader << '\n';
  for (const Aggregate& a : result.aggregates) {
    out << to_string(a.variant) << ',' << format_double(a.lambda);
    for (const MeanStd* m : {&a.ranking_score, &a.diversity, &a.popularity, &a.precision, &a.recall})
      out << ',' << format_double(m->mean) << ',' << format_double(m->std);
    out << ',' << a.runs << ',' << a.list_length << '\n';
  }
}

inline std::vector<Aggregate> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kCsvHeader) throw FormatError("unexpected CSV header");
  std::vector<Aggregate> out;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_fields(detail::trim(line), ",");
    if (f.size() != 14) throw FormatError("expected 14 CSV columns");
    Aggregate a;
    a.variant = parse_variant(f[0]);
    a.lambda = parse_double(f[1]);
    MeanStd* fields[] = {&a.ranking_score, &a.diversity, &a.popularity, &a.precision, &a.recall};
    for (std::size_t k = 0; k < 5; ++k) {
      fields[k]->mean = parse_double(f[2 + 2 * k]);
      fields[k]->std = parse_double(f[3 + 2 * k]);
    }
    a.runs = static_cast<std::size_t>(parse_double(f[12]));
    a.list_length = static_cast<std::size_t>(parse_double(f[13]));
    out.push_back(a);
  }
  return out;
}

inline nlohmann::json to_json(const SweepResult& result) {
  using nlohmann::json;
  json aggregates = json::array();
  std::size_t row = 0;
  for (const Aggregate& a : result.aggregates) {
    json runs = json::array();
    for (std::size_t k = 0; k < a.runs; ++k, ++row) {
      const RunRow& r = result.rows.at(row);
      const MetricsReport& m = r.metrics;
      runs.push_back({{"run", r.run},
                      {"seed", r.seed},
                      {"r", m.ranking_score},
                      {"r_per_entry", m.ranking_score_per_entry},
                      {"r_per_user", m.ranking_score_per_user},
                      {"S", m.diversity},
                      {"k", m.popularity},
                      {"P", m.precision},
                      {"R", m.recall},
                      {"users_evaluated", m.users_evaluated},
                      {"probe_entries", m.probe_entries}});
    }
    auto ms = [](const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}}; };
    aggregates.push_back({{"variant", to_string(a.variant)},
                          {"lambda", a.lambda},
                          {"L", a.list_length},
                          {"runs", a.runs},
                          {"r", ms(a.ranking_score)},
                          {"S", ms(a.diversity)},
                          {"k", ms(a.popularity)},
                          {"P", ms(a.precision)},
                          {"R", ms(a.recall)},
                          {"per_run", std::move(runs)}});
  }
  return json{{"aggregates", std::move(aggregates)}};
}

inline SweepResult from_json(const nlohmann::json& j) {
  SweepResult result;
  for (const auto& a : j.at("aggregates")) {
    Aggregate agg;
    agg.variant = parse_variant(a.at("variant").get<std::string>());
    agg.lambda = a.at("lambda").get<double>();
    agg.list_length = a.at("L").get<std::size_t>();
    agg.runs = a.at("runs").get<std::size_t>();
    auto ms = [](const nlohmann::json& m) { return MeanStd{m.at("mean").get<double>(), m.at("std").get<double>()}; };
    agg.ranking_score = ms(a.at("r"));
    agg.diversity = ms(a.at("S"));
    agg.popularity = ms(a.at("k"));
    agg.precision = ms(a.at("P"));
    agg.recall = ms(a.at("R"));
    for (const auto& r : a.at("per_run")) {
      RunRow row;
      row.variant = agg.variant;
      row.lambda = agg.lambda;
      row.run = r.at("run").get<std::size_t>();
      row.seed = r.at("seed").get<std::uint64_t>();
      MetricsReport& m = row.metrics;
      m.ranking_score = r.at("r").get<double>();
      m.ranking_score_per_entry = r.at("r_per_entry").get<double>();
      m.ranking_score_per_user = r.at("r_per_user").get<double>();
      m.diversity = r.at("S").get<double>();
      m.popularity = r.at("k").get<double>();
      m.precision = r.at("P").get<double>();
      m.recall = r.at("R").get<double>();
      m.list_length = agg.list_length;
      m.users_evaluated = r.at("users_evaluated").get<std::size_t>();
      m.probe_entries = r.at("probe_entries").get<std::size_t>();
      result.rows.push_back(row);
    }
    result.aggregates.push_back(agg);
  }
  return result;
}

inline void emit_report(const SweepResult& result, OutputFormat format, std::ostream& out) {
  if (result.aggregates.empty()) throw std::invalid_argument("empty sweep result");
  if (format == OutputFormat::csv)
    write_csv(out, result);
  else
    out << to_json(result).dump(2) << '\n';
}

inline void emit_report(const SweepResult& result, OutputFormat format, const std::string& path) {
  if (result.aggregates.empty()) throw std::invalid_argument("empty sweep result");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit_report(result, format, out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace bicf
