#include <catch_amalgamated.hpp>

#include <sstream>

#include "bicf/simkernel.hpp"
#include "support.hpp"

using namespace bicf;
using Catch::Matchers::WithinAbs;

namespace {

// u1 -> {o1}, u2 -> {o1, o2}, u3 -> {o2}
BipartiteGraph g0() { return BipartiteGraph({1, 2, 3}, {1, 2}, {{0, 0}, {1, 0}, {1, 1}, {2, 1}}); }

}  // namespace

TEST_CASE("first_order on the three-user graph") {
  const auto s = first_order(g0());
  // hand evaluation of s_ij = (1/k_j) sum_l a_li a_lj / k_l
  CHECK(s(0, 1) == 0.25);
  CHECK(s(1, 0) == 0.5);
  CHECK(s(0, 2) == 0.0);
  CHECK(s(2, 0) == 0.0);
  CHECK(s(1, 2) == 0.5);
  CHECK(s(2, 1) == 0.25);
  for (int i = 0; i < 3; ++i) CHECK(s(i, i) == 0.5);

  const auto oracle = testing::propagation_oracle(g0(), 1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK_THAT(s(i, j), WithinAbs(oracle[i][j], 1e-15));
}

TEST_CASE("second_order on the three-user graph") {
  const auto s = first_order(g0());
  const auto s2 = square(s);
  const auto two_step = testing::propagation_oracle(g0(), 2);
  CHECK_THAT(s2(0, 1), WithinAbs(0.25, 1e-15));
  CHECK_THAT(two_step[0][1], WithinAbs(0.25, 1e-15));

  const auto h = second_order(s, s2, -0.5);
  CHECK(h.kind() == SimilarityKind::second_order);
  CHECK_THAT(h(0, 1), WithinAbs(0.125, 1e-15));
  CHECK_THAT(h(1, 0), WithinAbs(0.25, 1e-15));

  const auto hmax = max_symmetrize(h);
  CHECK_THAT(hmax(0, 1), WithinAbs(0.25, 1e-15));
  CHECK_THAT(hmax(1, 0), WithinAbs(0.25, 1e-15));
}

TEST_CASE("lambda zero reproduces S") {
  std::mt19937_64 rng(1);
  const auto g = testing::random_graph(rng, 20, 15);
  const auto s = first_order(g);
  const auto h = second_order(s, 0.0);
  CHECK(h.values() == s.values());
}

TEST_CASE("isolated users have zero rows and columns") {
  const BipartiteGraph g({1, 2, 3}, {1}, {{0, 0}, {2, 0}});
  const auto s = first_order(g);
  for (int k = 0; k < 3; ++k) {
    CHECK(s(1, k) == 0.0);
    CHECK(s(k, 1) == 0.0);
  }
  CHECK_THROWS_AS(first_order(BipartiteGraph({1}, {1}, {})), GraphError);
}

TEST_CASE("users without common objects have zero similarity") {
  const BipartiteGraph g({1, 2}, {1, 2}, {{0, 0}, {1, 1}});
  const auto s = first_order(g);
  CHECK(s(0, 1) == 0.0);
  CHECK(s(1, 0) == 0.0);
}

TEST_CASE("first order and its square match the propagation oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = testing::random_graph(rng, 10, 8);
    const auto s = first_order(g, 1);
    const auto s2 = square(s, 1);
    const auto one = testing::propagation_oracle(g, 1);
    const auto two = testing::propagation_oracle(g, 2);
    for (std::size_t i = 0; i < g.users(); ++i)
      for (std::size_t j = 0; j < g.users(); ++j) {
        REQUIRE_THAT(s(i, j), WithinAbs(one[i][j], 1e-12));
        REQUIRE_THAT(s2(i, j), WithinAbs(two[i][j], 1e-12));
      }
  }
}

TEST_CASE("column sums: S to 1, H to 1 + lambda") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = testing::random_graph(rng, 50, 40, 0.15);
    const auto s = first_order(g);
    const auto s2 = square(s);
    for (double lambda : {-1.0, -0.5, 0.0}) {
      const auto h = second_order(s, s2, lambda);
      for (Index j = 0; j < g.users(); ++j) {
        if (g.user_degree(j) == 0) continue;
        double cs = 0.0, ch = 0.0;
        for (Index i = 0; i < g.users(); ++i) {
          cs += s(i, j);
          ch += h(i, j);
          REQUIRE(s(i, j) >= 0.0);
        }
        REQUIRE_THAT(cs, WithinAbs(1.0, 1e-9));
        REQUIRE_THAT(ch, WithinAbs(1.0 + lambda, 1e-9));
      }
    }
  }
}

TEST_CASE("degree-ratio identity h_ij k_j = h_ji k_i") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = testing::random_graph(rng, 50, 40, 0.2);
    const auto s = first_order(g);
    const auto s2 = square(s);
    for (double lambda : {-1.0, -0.85, -0.5, -0.2, 0.0}) {
      const auto h = second_order(s, s2, lambda);
      for (Index i = 0; i < g.users(); ++i)
        for (Index j = 0; j < g.users(); ++j) {
          if (!g.user_degree(i) || !g.user_degree(j)) continue;
          const double lhs = h(i, j) * g.user_degree(j);
          const double rhs = h(j, i) * g.user_degree(i);
          const double scale = std::max({1.0, std::abs(h(i, j)), std::abs(h(j, i))});
          REQUIRE(std::abs(lhs - rhs) <= 1e-9 * scale);
        }
    }
  }
}

TEST_CASE("similarity flows more strongly toward larger-degree users") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = testing::random_graph(rng, 30, 20, 0.3);
    const auto s = first_order(g);
    for (Index i = 0; i < g.users(); ++i)
      for (Index j = 0; j < g.users(); ++j) {
        if (s(i, j) <= 0.0 || i == j) continue;
        CHECK((s(i, j) > s(j, i)) == (g.user_degree(i) > g.user_degree(j)));
      }
  }
}

TEST_CASE("max_symmetrize picks the larger-degree side for non-negative H") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = testing::random_graph(rng, 12, 10, 0.4);
    const auto s = first_order(g);
    const auto h = second_order(s, -0.1);
    const auto hmax = max_symmetrize(h);
    bool nonnegative = true;
    for (double v : h.values().data()) nonnegative = nonnegative && v >= 0.0;
    for (Index i = 0; i < g.users(); ++i)
      for (Index j = 0; j < g.users(); ++j) {
        CHECK(hmax(i, j) == hmax(j, i));
        if (nonnegative && g.user_degree(i) > g.user_degree(j) && h(i, j) > 0.0) CHECK(hmax(i, j) == h(i, j));
      }
  }
}

TEST_CASE("max_symmetrize leaves a symmetric matrix unchanged") {
  DenseMatrix sym(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) sym(i, j) = 1.0 / (1 + i + j);
  const SimilarityMatrix h(SimilarityKind::second_order, -0.5, sym);
  CHECK(max_symmetrize(h).values() == sym);
}

TEST_CASE("kernels are independent of the thread count") {
  std::mt19937_64 rng(19);
  const auto g = testing::random_graph(rng, 120, 60, 0.1);
  const auto s1 = first_order(g, 1);
  const auto s4 = first_order(g, 4);
  CHECK(s1 == s4);
  CHECK(square(s1, 1) == square(s1, 3));
}

TEST_CASE("lambda outside [-1, 0] is accepted") {
  const auto s = first_order(g0());
  CHECK_NOTHROW(second_order(s, 0.5));
  CHECK_THROWS_AS(second_order(second_order(s, -0.5), -0.5), std::invalid_argument);
}

TEST_CASE("similarity cache round-trips and checks the graph") {
  std::mt19937_64 rng(23);
  const auto g = testing::random_graph(rng, 15, 10);
  const auto h = second_order(first_order(g), -0.7);
  std::stringstream buf;
  write_similarity(buf, h, g.content_hash());
  const auto back = read_similarity(buf, g);
  CHECK(back == h);

  std::stringstream again;
  write_similarity(again, h, g.content_hash());
  const BipartiteGraph other({1, 2}, {1}, {{0, 0}, {1, 0}});
  CHECK_THROWS_AS(read_similarity(again, other), FormatError);
}
