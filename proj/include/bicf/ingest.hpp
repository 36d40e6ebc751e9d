#pragma once

// Rating ingestion, coarse-graining into a binary user-object network,
// and seeded train/probe splitting.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bicf/error.hpp"

namespace bicf {

using Index = std::uint32_t;
using ExternalId = std::int64_t;

enum class RatingFormat {
  double_colon,  // MovieLens 1M: UserID::MovieID::Rating::Timestamp
  tab,           // MovieLens 100K: user \t item \t rating \t timestamp
};

inline RatingFormat parse_rating_format(std::string_view name) {
  if (name == "ml1m" || name == "double-colon") return RatingFormat::double_colon;
  if (name == "ml100k" || name == "tab") return RatingFormat::tab;
  throw std::invalid_argument("unknown rating format '" + std::string(name) + "'");
}

struct RatingRecord {
  ExternalId user_ext = 0;
  ExternalId object_ext = 0;
  int rating = 0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(delim, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + delim.size();
  }
}

template <typename T>
bool parse_int(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses one rating per line. Blank lines are only accepted at the end of
/// the stream; a blank line followed by more data is reported as malformed.
inline std::vector<RatingRecord> parse_ratings(std::istream& in, RatingFormat format) {
  const std::string_view delim = format == RatingFormat::double_colon ? "::" : "\t";
  std::vector<RatingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::size_t first_blank = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = detail::trim(line);
    if (body.empty()) {
      if (first_blank == 0) first_blank = line_no;
      continue;
    }
    if (first_blank != 0) throw ParseError(first_blank, "blank line inside rating data");

    const auto fields = detail::split_fields(body, delim);
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError(line_no, "malformed rating line, expected 3 or 4 fields, got " +
                                    std::to_string(fields.size()));
    RatingRecord rec;
    if (!detail::parse_int(fields[0], rec.user_ext)) throw ParseError(line_no, "malformed user id");
    if (!detail::parse_int(fields[1], rec.object_ext)) throw ParseError(line_no, "malformed object id");
    if (!detail::parse_int(fields[2], rec.rating)) throw ParseError(line_no, "malformed rating");
    if (rec.rating < 1 || rec.rating > 5)
      throw ParseError(line_no, "rating " + std::to_string(rec.rating) + " outside [1,5]");
    if (fields.size() == 4) {
      std::int64_t ts = 0;
      if (!detail::parse_int(fields[3], ts)) throw ParseError(line_no, "malformed timestamp");
      rec.timestamp = ts;
    }
    records.push_back(rec);
  }
  if (in.bad()) throw std::runtime_error("read error after line " + std::to_string(line_no));
  return records;
}

inline std::vector<RatingRecord> load_ratings(const std::string& path, RatingFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rating file '" + path + "'");
  return parse_ratings(in, format);
}

struct Edge {
  Index user = 0;
  Index object = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable binary user-object network with adjacency in both directions.
/// Users and objects are addressed by dense indices; the external ids they
/// came from are kept in both directions.
class BipartiteGraph {
public:
  BipartiteGraph() = default;

  /// Builds the graph from dense-index edges. Duplicate edges are rejected;
  /// the edge order does not matter.
  BipartiteGraph(std::vector<ExternalId> user_ids, std::vector<ExternalId> object_ids,
                 std::vector<Edge> edges)
      : user_ids_(std::move(user_ids)), object_ids_(std::move(object_ids)) {
    const std::size_t n = user_ids_.size();
    const std::size_t m = object_ids_.size();
    if (n > std::numeric_limits<Index>::max() || m > std::numeric_limits<Index>::max())
      throw GraphError("graph too large for 32-bit indices");
    for (Index j = 0; j < n; ++j)
      if (!user_index_.emplace(user_ids_[j], j).second)
        throw GraphError("duplicate user id " + std::to_string(user_ids_[j]));
    for (Index l = 0; l < m; ++l)
      if (!object_index_.emplace(object_ids_[l], l).second)
        throw GraphError("duplicate object id " + std::to_string(object_ids_[l]));

    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
      throw GraphError("duplicate edge");
    user_degree_.assign(n, 0);
    object_degree_.assign(m, 0);
    for (const Edge& e : edges) {
      if (e.user >= n || e.object >= m) throw GraphError("edge index out of range");
      ++user_degree_[e.user];
      ++object_degree_[e.object];
    }

    user_offset_.assign(n + 1, 0);
    for (std::size_t j = 0; j < n; ++j) user_offset_[j + 1] = user_offset_[j] + user_degree_[j];
    user_objects_.resize(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) user_objects_[k] = edges[k].object;

    object_offset_.assign(m + 1, 0);
    for (std::size_t l = 0; l < m; ++l) object_offset_[l + 1] = object_offset_[l] + object_degree_[l];
    object_users_.resize(edges.size());
    std::vector<std::size_t> fill(object_offset_.begin(), object_offset_.end() - 1);
    // edges are user-major, so each object's user list comes out ascending
    for (const Edge& e : edges) object_users_[fill[e.object]++] = e.user;
  }

  std::size_t users() const noexcept { return user_ids_.size(); }
  std::size_t objects() const noexcept { return object_ids_.size(); }
  std::size_t links() const noexcept { return user_objects_.size(); }

  std::uint32_t user_degree(Index j) const { return user_degree_[j]; }
  std::uint32_t object_degree(Index l) const { return object_degree_[l]; }
  std::span<const std::uint32_t> user_degrees() const noexcept { return user_degree_; }
  std::span<const std::uint32_t> object_degrees() const noexcept { return object_degree_; }

  /// Sorted object indices collected by user j.
  std::span<const Index> objects_of(Index j) const {
    return {user_objects_.data() + user_offset_[j], user_degree_[j]};
  }
  /// Sorted user indices that collected object l.
  std::span<const Index> users_of(Index l) const {
    return {object_users_.data() + object_offset_[l], object_degree_[l]};
  }

  bool has_link(Index j, Index l) const {
    const auto objs = objects_of(j);
    return std::binary_search(objs.begin(), objs.end(), l);
  }

  /// Canonical (user-major, ascending) edge list.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(links());
    for (Index j = 0; j < users(); ++j)
      for (Index l : objects_of(j)) out.push_back({j, l});
    return out;
  }

  const std::vector<ExternalId>& user_ids() const noexcept { return user_ids_; }
  const std::vector<ExternalId>& object_ids() const noexcept { return object_ids_; }

  std::optional<Index> user_index(ExternalId id) const {
    auto it = user_index_.find(id);
    if (it == user_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<Index> object_index(ExternalId id) const {
    auto it = object_index_.find(id);
    if (it == object_index_.end()) return std::nullopt;
    return it->second;
  }

  /// p / (n m) over the dense index space.
  double sparsity() const {
    if (users() == 0 || objects() == 0) return 0.0;
    return static_cast<double>(links()) / (static_cast<double>(users()) * static_cast<double>(objects()));
  }

  /// FNV-1a over the index-space sizes and the canonical edge list.
  std::uint64_t content_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffU;
        h *= 1099511628211ULL;
      }
    };
    mix(users());
    mix(objects());
    mix(links());
    for (Index j = 0; j < users(); ++j)
      for (Index l : objects_of(j)) mix((static_cast<std::uint64_t>(j) << 32) | l);
    return h;
  }

  friend bool operator==(const BipartiteGraph& a, const BipartiteGraph& b) {
    return a.user_ids_ == b.user_ids_ && a.object_ids_ == b.object_ids_ &&
           a.user_offset_ == b.user_offset_ && a.user_objects_ == b.user_objects_;
  }

private:
  std::vector<ExternalId> user_ids_;
  std::vector<ExternalId> object_ids_;
  std::unordered_map<ExternalId, Index> user_index_;
  std::unordered_map<ExternalId, Index> object_index_;
  std::vector<std::uint32_t> user_degree_;
  std::vector<std::uint32_t> object_degree_;
  std::vector<std::size_t> user_offset_;
  std::vector<Index> user_objects_;
  std::vector<std::size_t> object_offset_;
  std::vector<Index> object_users_;
};

/// Keeps a link for every (user, object) pair with some rating >= threshold.
/// Users and objects without a qualifying rating get no index; indices are
/// assigned in ascending external-id order.
inline BipartiteGraph coarse_grain(std::span<const RatingRecord> records, int threshold = 3) {
  if (threshold < 1 || threshold > 5)
    throw std::invalid_argument("threshold " + std::to_string(threshold) + " outside [1,5]");
  std::vector<std::pair<ExternalId, ExternalId>> pairs;
  for (const RatingRecord& r : records)
    if (r.rating >= threshold) pairs.emplace_back(r.user_ext, r.object_ext);
  if (pairs.empty()) throw GraphError("empty graph: no rating reaches threshold " + std::to_string(threshold));
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<ExternalId> users;
  std::vector<ExternalId> objects;
  for (const auto& [u, o] : pairs) {
    users.push_back(u);
    objects.push_back(o);
  }
  for (auto* ids : {&users, &objects}) {
    std::sort(ids->begin(), ids->end());
    ids->erase(std::unique(ids->begin(), ids->end()), ids->end());
  }
  auto dense = [](const std::vector<ExternalId>& ids, ExternalId id) {
    return static_cast<Index>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [u, o] : pairs) edges.push_back({dense(users, u), dense(objects, o)});
  return BipartiteGraph(std::move(users), std::move(objects), std::move(edges));
}

/// Raw versus linked counts, to reconcile catalog-size statistics with the
/// coarse-grained index space.
struct DatasetStats {
  std::size_t records = 0;
  std::size_t raw_users = 0;    // distinct users in the rating file
  std::size_t raw_objects = 0;  // distinct objects in the rating file
  ExternalId max_user_id = 0;
  ExternalId max_object_id = 0;
  std::size_t users = 0;  // users with at least one link
  std::size_t objects = 0;
  std::size_t links = 0;

  double linked_sparsity() const {
    return static_cast<double>(links) / (static_cast<double>(users) * static_cast<double>(objects));
  }
  double raw_sparsity() const {
    return static_cast<double>(links) / (static_cast<double>(raw_users) * static_cast<double>(raw_objects));
  }
  /// Sparsity against the id span, i.e. the catalog size when ids are 1..max.
  double catalog_sparsity() const {
    return static_cast<double>(links) /
           (static_cast<double>(max_user_id) * static_cast<double>(max_object_id));
  }
};

inline DatasetStats dataset_stats(std::span<const RatingRecord> records, const BipartiteGraph& graph) {
  DatasetStats s;
  s.records = records.size();
  std::unordered_set<ExternalId> users;
  std::unordered_set<ExternalId> objects;
  for (const RatingRecord& r : records) {
    users.insert(r.user_ext);
    objects.insert(r.object_ext);
    s.max_user_id = std::max(s.max_user_id, r.user_ext);
    s.max_object_id = std::max(s.max_object_id, r.object_ext);
  }
  s.raw_users = users.size();
  s.raw_objects = objects.size();
  s.users = graph.users();
  s.objects = graph.objects();
  s.links = graph.links();
  return s;
}

struct Split {
  BipartiteGraph train;
  std::vector<Edge> probe;  // canonical order
  double fraction = 1.0;
  std::uint64_t seed = 0;
};

namespace detail {

// Unbiased draw in [0, bound) from a 64-bit engine, identical on every
// platform (std::uniform_int_distribution is implementation-defined).
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace detail

/// Shuffles the canonical edge list with a seeded Fisher-Yates pass and cuts
/// it at round(fraction * p). The train graph keeps the source index maps.
inline Split split(const BipartiteGraph& graph, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("train fraction must lie in (0,1]");
  std::vector<Edge> edges = graph.edges();
  std::mt19937_64 rng(seed);
  for (std::size_t i = edges.size(); i > 1; --i) {
    const std::size_t k = detail::bounded(rng, i);
    std::swap(edges[i - 1], edges[k]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(edges.size())));
  std::vector<Edge> train(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Edge> probe(edges.begin() + static_cast<std::ptrdiff_t>(n_train), edges.end());
  std::sort(probe.begin(), probe.end());
  return Split{BipartiteGraph(graph.user_ids(), graph.object_ids(), std::move(train)), std::move(probe),
               fraction, seed};
}

/// Probe objects grouped by user, each list ascending.
inline std::vector<std::vector<Index>> probe_by_user(const Split& s) {
  std::vector<std::vector<Index>> out(s.train.users());
  for (const Edge& e : s.probe) out[e.user].push_back(e.object);
  return out;
}

// Graph cache: a line-oriented edge list.
//   BICF-GRAPH 1
//   n m p
//   n lines of user external ids, m lines of object external ids,
//   p lines "user_idx object_idx"
inline void write_graph(std::ostream& out, const BipartiteGraph& g) {
  out << "BICF-GRAPH 1\n" << g.users() << ' ' << g.objects() << ' ' << g.links() << '\n';
  for (ExternalId id : g.user_ids()) out << id << '\n';
  for (ExternalId id : g.object_ids()) out << id << '\n';
  for (Index j = 0; j < g.users(); ++j)
    for (Index l : g.objects_of(j)) out << j << ' ' << l << '\n';
  if (!out) throw std::runtime_error("failed writing graph cache");
}

inline BipartiteGraph read_graph(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "BICF-GRAPH" || version != 1)
    throw FormatError("not a BICF-GRAPH v1 file");
  std::size_t n = 0, m = 0, p = 0;
  if (!(in >> n >> m >> p)) throw FormatError("bad graph header");
  std::vector<ExternalId> users(n), objects(m);
  for (auto& id : users)
    if (!(in >> id)) throw FormatError("truncated user id table");
  for (auto& id : objects)
    if (!(in >> id)) throw FormatError("truncated object id table");
  std::vector<Edge> edges(p);
  for (auto& e : edges)
    if (!(in >> e.user >> e.object)) throw FormatError("truncated edge list");
  try {
    return BipartiteGraph(std::move(users), std::move(objects), std::move(edges));
  } catch (const GraphError& e) {
    throw FormatError(std::string("invalid graph cache: ") + e.what());
  }
}

}  // namespace bicf
