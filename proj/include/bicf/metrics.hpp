#pragma once

// Accuracy, diversity and novelty of top-L recommendations measured
// against the probe set.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bicf/ingest.hpp"
#include "bicf/recommend.hpp"

namespace bicf {

enum class RankingMode {
  per_entry,  // mean of r over all probe entries
  per_user,   // mean over users of each user's mean r
};

inline const char* to_string(RankingMode m) { return m == RankingMode::per_entry ? "per-entry" : "per-user"; }

inline RankingMode parse_ranking_mode(std::string_view s) {
  if (s == "per-entry") return RankingMode::per_entry;
  if (s == "per-user") return RankingMode::per_user;
  throw std::invalid_argument("unknown ranking mode '" + std::string(s) + "'");
}

/// Position of one probe object among the user's uncollected objects.
struct ProbeRank {
  Index user = 0;
  std::size_t rank = 0;        // 1-based
  std::size_t candidates = 0;  // objects the user has not collected in train
};

struct MetricsReport {
  double ranking_score = 0.0;  // in the requested mode
  double ranking_score_per_entry = 0.0;
  double ranking_score_per_user = 0.0;
  double diversity = 0.0;
  double popularity = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t list_length = 0;
  std::size_t users_evaluated = 0;  // users with at least one probe entry
  std::size_t probe_entries = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Averages r = rank / candidates. Entries must be grouped by user (the
/// canonical probe order satisfies this).
inline double ranking_score(std::span<const ProbeRank> ranks, RankingMode mode) {
  if (ranks.empty()) throw std::invalid_argument("ranking_score: empty probe set");
  if (mode == RankingMode::per_entry) {
    double sum = 0.0;
    for (const ProbeRank& r : ranks) sum += static_cast<double>(r.rank) / static_cast<double>(r.candidates);
    return sum / static_cast<double>(ranks.size());
  }
  double total = 0.0;
  std::size_t users = 0;
  std::size_t k = 0;
  std::vector<char> seen;
  while (k < ranks.size()) {
    const Index u = ranks[k].user;
    if (u >= seen.size()) seen.resize(u + 1, 0);
    if (seen[u]) throw std::invalid_argument("ranking_score: probe ranks not grouped by user");
    seen[u] = 1;
    double sum = 0.0;
    std::size_t count = 0;
    for (; k < ranks.size() && ranks[k].user == u; ++k, ++count)
      sum += static_cast<double>(ranks[k].rank) / static_cast<double>(ranks[k].candidates);
    total += sum / static_cast<double>(count);
    ++users;
  }
  return total / static_cast<double>(users);
}

/// Looks every probe entry up in its user's full ranking of uncollected
/// objects (as produced by full_ranking, indexed by user).
inline std::vector<ProbeRank> probe_ranks(std::span<const std::vector<Index>> rankings, std::span<const Edge> probe,
                                          const BipartiteGraph& train) {
  if (rankings.size() != train.users()) throw std::invalid_argument("one ranking per user required");
  std::vector<ProbeRank> out;
  out.reserve(probe.size());
  for (const Edge& e : probe) {
    if (e.user >= train.users()) throw std::out_of_range("probe entry has unknown user index");
    if (e.object >= train.objects()) throw std::out_of_range("probe entry has unknown object index");
    if (train.has_link(e.user, e.object)) throw std::invalid_argument("probe entry is collected in train");
    const auto& ranking = rankings[e.user];
    const auto it = std::find(ranking.begin(), ranking.end(), e.object);
    if (it == ranking.end()) throw std::invalid_argument("probe object missing from user's ranking");
    out.push_back({e.user, static_cast<std::size_t>(it - ranking.begin()) + 1,
                   train.objects() - train.user_degree(e.user)});
  }
  return out;
}

inline double ranking_score(std::span<const std::vector<Index>> rankings, std::span<const Edge> probe,
                            const BipartiteGraph& train, RankingMode mode) {
  const auto ranks = probe_ranks(rankings, probe, train);
  return ranking_score(ranks, mode);
}

/// S = 1 - <Q_ij>/L over all unordered pairs of non-empty lists. Summing
/// C(c_a, 2) over objects a, where c_a counts the lists containing a, gives
/// the total pairwise overlap exactly.
inline double diversity(std::span<const RecommendationList> lists, std::size_t length) {
  if (length == 0) throw std::invalid_argument("diversity: list length must be positive");
  std::vector<std::uint64_t> count;
  std::uint64_t nonempty = 0;
  for (const auto& list : lists) {
    if (list.objects.empty()) continue;
    if (list.objects.size() > length) throw std::invalid_argument("diversity: list longer than L");
    ++nonempty;
    for (Index l : list.objects) {
      if (l >= count.size()) count.resize(l + 1, 0);
      ++count[l];
    }
  }
  if (nonempty < 2) throw std::invalid_argument("diversity: need at least two non-empty lists");
  std::uint64_t overlap = 0;
  for (std::uint64_t c : count) if (c > 1) overlap += c * (c - 1) / 2;
  const std::uint64_t pairs = nonempty * (nonempty - 1) / 2;
  const double mean_q = static_cast<double>(overlap) / static_cast<double>(pairs);
  return 1.0 - mean_q / static_cast<double>(length);
}

/// Mean over users with a non-empty list of the mean training degree of
/// their recommended objects.
inline double popularity(std::span<const RecommendationList> lists, const BipartiteGraph& train) {
  double total = 0.0;
  std::size_t users = 0;
  for (const auto& list : lists) {
    if (list.objects.empty()) continue;
    std::uint64_t degree_sum = 0;
    for (Index l : list.objects) degree_sum += train.object_degree(l);
    total += static_cast<double>(degree_sum) / static_cast<double>(list.objects.size());
    ++users;
  }
  if (users == 0) throw std::invalid_argument("popularity: no non-empty lists");
  return total / static_cast<double>(users);
}

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t users = 0;  // users with D_i >= 1
};

/// P = mean d_i/L, R = mean d_i/D_i over users with at least one probe
/// entry. `lists` is indexed by user.
inline PrecisionRecall precision_recall(std::span<const RecommendationList> lists, std::span<const Edge> probe,
                                        std::size_t length) {
  if (length == 0) throw std::invalid_argument("precision_recall: list length must be positive");
  std::vector<std::vector<Index>> by_user;
  for (const Edge& e : probe) {
    if (e.user >= by_user.size()) by_user.resize(e.user + 1);
    by_user[e.user].push_back(e.object);
  }
  PrecisionRecall pr;
  for (Index u = 0; u < by_user.size(); ++u) {
    const auto& relevant = by_user[u];
    if (relevant.empty()) continue;
    if (u >= lists.size() || lists[u].user != u)
      throw std::invalid_argument("precision_recall: lists must be indexed by user");
    std::size_t hits = 0;
    for (Index l : lists[u].objects)
      if (std::find(relevant.begin(), relevant.end(), l) != relevant.end()) ++hits;
    pr.precision += static_cast<double>(hits) / static_cast<double>(length);
    pr.recall += static_cast<double>(hits) / static_cast<double>(relevant.size());
    ++pr.users;
  }
  if (pr.users > 0) {
    pr.precision /= static_cast<double>(pr.users);
    pr.recall /= static_cast<double>(pr.users);
  }
  return pr;
}

/// All five metrics for one run.
inline MetricsReport evaluate(std::span<const RecommendationList> lists, std::span<const ProbeRank> ranks,
                              std::span<const Edge> probe, const BipartiteGraph& train, std::size_t length,
                              RankingMode mode) {
  MetricsReport r;
  r.ranking_score_per_entry = ranking_score(ranks, RankingMode::per_entry);
  r.ranking_score_per_user = ranking_score(ranks, RankingMode::per_user);
  r.ranking_score = mode == RankingMode::per_entry ? r.ranking_score_per_entry : r.ranking_score_per_user;
  r.diversity = diversity(lists, length);
  r.popularity = popularity(lists, train);
  const auto pr = precision_recall(lists, probe, length);
  r.precision = pr.precision;
  r.recall = pr.recall;
  r.list_length = length;
  r.users_evaluated = pr.users;
  r.probe_entries = probe.size();
  return r;
}

}  // namespace bicf
