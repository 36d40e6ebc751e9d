#pragma once

// Test-only generators and brute-force oracles. Nothing here calls into the
// similarity or scoring code it is used to check.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bicf/ingest.hpp"

namespace bicf::testing {

using Dense = std::vector<std::vector<double>>;

/// Random graph with up to max_users users and max_objects objects; every
/// link present with probability `density`. Isolated users and objects are
/// allowed, at least one link is guaranteed.
inline BipartiteGraph random_graph(std::mt19937_64& rng, std::size_t max_users, std::size_t max_objects,
                                   double density = 0.35) {
  std::uniform_int_distribution<std::size_t> nu(2, max_users), no(1, max_objects);
  std::bernoulli_distribution link(density);
  const std::size_t n = nu(rng), m = no(rng);
  std::vector<Edge> edges;
  for (Index j = 0; j < n; ++j)
    for (Index l = 0; l < m; ++l)
      if (link(rng)) edges.push_back({j, l});
  if (edges.empty()) edges.push_back({0, 0});
  std::vector<ExternalId> users(n), objects(m);
  for (std::size_t k = 0; k < n; ++k) users[k] = static_cast<ExternalId>(k + 1);
  for (std::size_t k = 0; k < m; ++k) objects[k] = static_cast<ExternalId>(100 + k);
  return BipartiteGraph(users, objects, edges);
}

/// Dense 0/1 adjacency a[l][j] rebuilt from the edge list.
inline std::vector<std::vector<int>> adjacency(const BipartiteGraph& g) {
  std::vector<std::vector<int>> a(g.objects(), std::vector<int>(g.users(), 0));
  for (const Edge& e : g.edges()) a[e.object][e.user] = 1;
  return a;
}

/// One resource-spreading step: every user splits its resource evenly over
/// its objects, every object splits what it holds evenly over its users.
inline std::vector<double> spread(const std::vector<std::vector<int>>& a, const std::vector<double>& resource) {
  const std::size_t m = a.size();
  const std::size_t n = resource.size();
  std::vector<int> ku(n, 0), ko(m, 0);
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t j = 0; j < n; ++j) {
      ku[j] += a[l][j];
      ko[l] += a[l][j];
    }
  std::vector<double> on_objects(m, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    if (ku[j] > 0)
      for (std::size_t l = 0; l < m; ++l)
        if (a[l][j]) on_objects[l] += resource[j] / ku[j];
  std::vector<double> out(n, 0.0);
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t i = 0; i < n; ++i)
      if (a[l][i]) out[i] += on_objects[l] / ko[l];
  return out;
}

/// oracle[i][j]: share of a unit placed on user j found at user i after
/// `steps` spreading steps.
inline Dense propagation_oracle(const BipartiteGraph& g, int steps) {
  const auto a = adjacency(g);
  const std::size_t n = g.users();
  Dense out(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> r(n, 0.0);
    r[j] = 1.0;
    for (int s = 0; s < steps; ++s) r = spread(a, r);
    for (std::size_t i = 0; i < n; ++i) out[i][j] = r[i];
  }
  return out;
}

/// Score oracle: v_ia = sum_j w[i][j] a_aj enumerated directly.
inline std::vector<double> score_oracle(const BipartiteGraph& g, const Dense& w, Index user) {
  const auto a = adjacency(g);
  std::vector<double> v(g.objects(), 0.0);
  for (std::size_t l = 0; l < g.objects(); ++l)
    for (std::size_t j = 0; j < g.users(); ++j)
      if (a[l][j]) v[l] += w[user][j];
  return v;
}

/// Ratings with heterogeneous user activity and object popularity plus a
/// taste structure (each user prefers one of a few genres), so that the
/// similarity variants behave differently.
inline std::vector<RatingRecord> synthetic_ratings(std::size_t users, std::size_t objects, std::uint64_t seed,
                                                   std::size_t genres = 6) {
  std::mt19937_64 rng(seed);
  std::vector<double> popularity(objects);
  std::vector<std::size_t> genre(objects);
  std::uniform_int_distribution<std::size_t> pick_genre(0, genres - 1);
  for (std::size_t l = 0; l < objects; ++l) {
    popularity[l] = 1.0 / std::pow(static_cast<double>(l + 1), 0.8);
    genre[l] = pick_genre(rng);
  }
  std::lognormal_distribution<double> activity(3.0, 0.8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<RatingRecord> out;
  for (std::size_t u = 0; u < users; ++u) {
    const std::size_t taste = pick_genre(rng);
    const auto want = std::min<std::size_t>(objects / 2, 5 + static_cast<std::size_t>(activity(rng)));
    std::vector<double> weight(objects);
    for (std::size_t l = 0; l < objects; ++l) weight[l] = popularity[l] * (genre[l] == taste ? 6.0 : 1.0);
    std::discrete_distribution<std::size_t> draw(weight.begin(), weight.end());
    std::vector<char> taken(objects, 0);
    for (std::size_t k = 0; k < want; ++k) {
      const std::size_t l = draw(rng);
      if (taken[l]) continue;
      taken[l] = 1;
      const double like = genre[l] == taste ? 0.85 : 0.45;
      const int rating = unit(rng) < like ? 3 + static_cast<int>(unit(rng) * 3) : 1 + static_cast<int>(unit(rng) * 2);
      out.push_back({static_cast<ExternalId>(u + 1), static_cast<ExternalId>(l + 1), std::min(rating, 5),
                     static_cast<std::int64_t>(978300000 + k)});
    }
  }
  return out;
}

}  // namespace bicf::testing
