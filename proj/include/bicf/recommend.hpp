#pragma once

// Predicted scores and top-L lists for the four collaborative filtering
// variants. The score of object a for target user i is
//
//   v_ia = sum_j w(i, j) a_aj
//
// where the weight w(i, j) depends on the variant:
//   CF    s_ji        (first order, target -> neighbour)
//   HCF   h_ji        (second order, target -> neighbour)
//   HDCF  h_ij        (second order, neighbour -> target)
//   MHCF  max(h_ij, h_ji)
//
// The normalising denominator sum_j w(i, j) does not depend on a, so
// rankings are built from the raw numerators.

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bicf/ingest.hpp"
#include "bicf/parallel.hpp"
#include "bicf/simkernel.hpp"

namespace bicf {

enum class Variant { cf, hcf, hdcf, mhcf };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::cf: return "cf";
    case Variant::hcf: return "hcf";
    case Variant::hdcf: return "hdcf";
    case Variant::mhcf: return "mhcf";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "cf") return Variant::cf;
  if (s == "hcf") return Variant::hcf;
  if (s == "hdcf") return Variant::hdcf;
  if (s == "mhcf") return Variant::mhcf;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

struct AlgorithmSpec {
  Variant variant = Variant::cf;
  double lambda = 0.0;  // ignored by CF

  friend bool operator==(const AlgorithmSpec&, const AlgorithmSpec&) = default;
};

/// Which similarity matrix a variant scores with.
inline SimilarityKind required_kind(Variant v) {
  switch (v) {
    case Variant::cf: return SimilarityKind::first_order;
    case Variant::hcf:
    case Variant::hdcf: return SimilarityKind::second_order;
    case Variant::mhcf: return SimilarityKind::max_symmetrized;
  }
  return SimilarityKind::first_order;
}

/// True when the weight on neighbour j is sim(i, j) rather than sim(j, i).
inline bool uses_neighbour_to_target(Variant v) { return v == Variant::hdcf || v == Variant::mhcf; }

struct ScoreVector {
  Index user = 0;
  std::vector<double> values;  // raw numerator per object
  std::vector<char> excluded;  // 1 for objects the user already collected
  double denominator = 0.0;

  bool has_candidates() const { return std::find(excluded.begin(), excluded.end(), 0) != excluded.end(); }
};

struct RecommendationList {
  Index user = 0;
  std::vector<Index> objects;  // rank order
  std::vector<double> scores;  // raw numerators, parallel to objects

  friend bool operator==(const RecommendationList&, const RecommendationList&) = default;
};

/// Strict ranking order: higher score first, ties by ascending object index.
inline bool ranks_before(double score_a, Index a, double score_b, Index b) {
  if (score_a != score_b) return score_a > score_b;
  return a < b;
}

namespace detail {

inline void check_spec(const SimilarityMatrix& sim, const BipartiteGraph& train, const AlgorithmSpec& spec) {
  if (sim.kind() != required_kind(spec.variant))
    throw std::invalid_argument(std::string("variant ") + to_string(spec.variant) + " needs a " +
                                to_string(required_kind(spec.variant)) + " matrix, got " + to_string(sim.kind()));
  if (sim.users() != train.users()) throw std::invalid_argument("similarity and graph disagree on user count");
}

}  // namespace detail

/// out[l * width + b] = sum over users j of object l (ascending) of
/// panel[j * width + b]. The order of the sum per entry does not depend on
/// width, so scoring one user or a block of users gives identical bits.
inline void gather_scores(const BipartiteGraph& g, std::span<const double> panel, std::size_t width,
                          std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (Index l = 0; l < g.objects(); ++l) {
    double* acc = out.data() + static_cast<std::size_t>(l) * width;
    for (Index j : g.users_of(l)) {
      const double* w = panel.data() + static_cast<std::size_t>(j) * width;
      for (std::size_t b = 0; b < width; ++b) acc[b] += w[b];
    }
  }
}

inline constexpr std::size_t kUserBlock = 32;

/// Computes raw scores for every user in blocks and hands each user's score
/// row to visit(i, scores). weight(i, j) supplies the weight of neighbour j
/// for target i. visit runs concurrently for different users.
template <typename WeightFn, typename Visit>
void for_each_user_scores(const BipartiteGraph& train, unsigned threads, WeightFn&& weight, Visit&& visit) {
  const std::size_t n = train.users();
  const std::size_t m = train.objects();
  const std::size_t blocks = (n + kUserBlock - 1) / kUserBlock;
  const unsigned workers = resolve_threads(threads);
  std::vector<std::vector<double>> panels(workers), outs(workers), rows(workers);
  parallel_for(blocks, threads, [&](std::size_t blk, unsigned worker) {
    const std::size_t i0 = blk * kUserBlock;
    const std::size_t width = std::min(kUserBlock, n - i0);
    auto& panel = panels[worker];
    auto& out = outs[worker];
    auto& row = rows[worker];
    panel.resize(n * width);
    out.resize(m * width);
    row.resize(m);
    for (std::size_t b = 0; b < width; ++b)
      for (std::size_t j = 0; j < n; ++j) panel[j * width + b] = weight(i0 + b, j);
    gather_scores(train, panel, width, out);
    for (std::size_t b = 0; b < width; ++b) {
      for (std::size_t l = 0; l < m; ++l) row[l] = out[l * width + b];
      visit(static_cast<Index>(i0 + b), std::span<const double>(row));
    }
  });
}

/// Weight accessor for a similarity matrix under a variant's direction.
inline auto weight_fn(const SimilarityMatrix& sim, Variant v) {
  const bool forward = uses_neighbour_to_target(v);
  return [&sim, forward](std::size_t i, std::size_t j) { return forward ? sim(i, j) : sim(j, i); };
}

inline ScoreVector predict_scores(const SimilarityMatrix& sim, const BipartiteGraph& train,
                                  const AlgorithmSpec& spec, Index user) {
  detail::check_spec(sim, train, spec);
  if (user >= train.users()) throw std::out_of_range("user index out of range");
  const std::size_t n = train.users();
  auto weight = weight_fn(sim, spec.variant);
  std::vector<double> panel(n);
  for (std::size_t j = 0; j < n; ++j) panel[j] = weight(user, j);

  ScoreVector sv;
  sv.user = user;
  sv.values.resize(train.objects());
  gather_scores(train, panel, 1, sv.values);
  for (double w : panel) sv.denominator += w;
  sv.excluded.assign(train.objects(), 0);
  for (Index l : train.objects_of(user)) sv.excluded[l] = 1;
  return sv;
}

/// Candidates (objects the user has not collected) in full rank order.
inline std::vector<Index> full_ranking(std::span<const double> scores, const BipartiteGraph& train, Index user) {
  std::vector<Index> cand;
  cand.reserve(train.objects());
  const auto own = train.objects_of(user);
  auto it = own.begin();
  for (Index l = 0; l < train.objects(); ++l) {
    if (it != own.end() && *it == l) {
      ++it;
      continue;
    }
    cand.push_back(l);
  }
  std::sort(cand.begin(), cand.end(),
            [&](Index a, Index b) { return ranks_before(scores[a], a, scores[b], b); });
  return cand;
}

/// 1-based position of candidate `object` in the user's full ranking.
inline std::size_t rank_of(std::span<const double> scores, const BipartiteGraph& train, Index user, Index object) {
  const auto own = train.objects_of(user);
  std::size_t better = 0;
  auto it = own.begin();
  const double s = scores[object];
  for (Index l = 0; l < train.objects(); ++l) {
    if (it != own.end() && *it == l) {
      ++it;
      continue;
    }
    if (ranks_before(scores[l], l, s, object)) ++better;
  }
  return better + 1;
}

inline RecommendationList top_l(std::span<const double> scores, const BipartiteGraph& train, Index user,
                                std::size_t length) {
  if (length < 1) throw std::invalid_argument("list length must be at least 1");
  std::vector<Index> cand;
  cand.reserve(train.objects());
  const auto own = train.objects_of(user);
  auto it = own.begin();
  for (Index l = 0; l < train.objects(); ++l) {
    if (it != own.end() && *it == l) {
      ++it;
      continue;
    }
    cand.push_back(l);
  }
  const std::size_t keep = std::min(length, cand.size());
  auto cmp = [&](Index a, Index b) { return ranks_before(scores[a], a, scores[b], b); };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), cmp);
  cand.resize(keep);

  RecommendationList out;
  out.user = user;
  out.scores.reserve(keep);
  for (Index l : cand) out.scores.push_back(scores[l]);
  out.objects = std::move(cand);
  return out;
}

inline RecommendationList top_l(const ScoreVector& scores, const BipartiteGraph& train, std::size_t length) {
  return top_l(scores.values, train, scores.user, length);
}

struct RecommendDiagnostics {
  std::vector<Index> no_candidates;     // users who collected every object
  std::vector<Index> zero_denominator;  // users with no similarity mass
};

inline std::vector<RecommendationList> recommend_all(const SimilarityMatrix& sim, const BipartiteGraph& train,
                                                     const AlgorithmSpec& spec, std::size_t length,
                                                     unsigned threads = 0,
                                                     RecommendDiagnostics* diagnostics = nullptr) {
  detail::check_spec(sim, train, spec);
  if (length < 1) throw std::invalid_argument("list length must be at least 1");
  std::vector<RecommendationList> lists(train.users());
  auto weight = weight_fn(sim, spec.variant);
  for_each_user_scores(train, threads, weight, [&](Index i, std::span<const double> scores) {
    lists[i] = top_l(scores, train, i, length);
  });
  if (diagnostics) {
    for (Index i = 0; i < train.users(); ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < train.users(); ++j) d += weight(i, j);
      if (d == 0.0) diagnostics->zero_denominator.push_back(i);
      if (train.user_degree(i) == train.objects()) diagnostics->no_candidates.push_back(i);
    }
  }
  return lists;
}

/// One line per user: "user_ext<TAB>obj_ext,obj_ext,..." in rank order.
inline void write_recommendations(std::ostream& out, std::span<const RecommendationList> lists,
                                  const BipartiteGraph& train) {
  for (const auto& list : lists) {
    out << train.user_ids()[list.user] << '\t';
    for (std::size_t k = 0; k < list.objects.size(); ++k) {
      if (k) out << ',';
      out << train.object_ids()[list.objects[k]];
    }
    out << '\n';
  }
}

}  // namespace bicf
