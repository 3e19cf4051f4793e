#include "dehnfill/metric_space.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include <nlohmann/json.hpp>

#include "dehnfill/errors.hpp"

namespace dehnfill {

namespace {

constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max();

BigInt lcm_of_denominators(const std::vector<Rat>& values) {
  BigInt l = 1;
  for (const auto& v : values) {
    l = boost::multiprecision::lcm(l, boost::multiprecision::denominator(v));
  }
  return l;
}

std::int64_t to_ticks(const Rat& v, const BigInt& l) {
  BigInt t = boost::multiprecision::numerator(v) *
             (l / boost::multiprecision::denominator(v));
  if (t > BigInt(std::int64_t(1) << 40)) {
    throw input_error("distance value too large for the tick representation");
  }
  return to_int64(t);
}

}  // namespace

const std::string& FiniteMetricSpace::name(PointId p) const {
  check_point(p);
  return names_[static_cast<std::size_t>(p)];
}

PointId FiniteMetricSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<PointId>(i);
  }
  throw input_error("unknown point identifier '" + name + "'");
}

void FiniteMetricSpace::check_point(PointId p) const {
  if (p < 0 || p >= size()) {
    throw input_error("point index " + std::to_string(p) + " out of range");
  }
}

bool FiniteMetricSpace::adjacent(PointId a, PointId b) const {
  for (const auto& [u, v] : edges_) {
    if ((u == a && v == b) || (u == b && v == a)) return true;
  }
  return false;
}

bool FiniteMetricSpace::is_tree_metric() const {
  return has_adjacency() &&
         edges_.size() + 1 == static_cast<std::size_t>(size());
}

FiniteMetricSpace FiniteMetricSpace::from_matrix(
    std::vector<std::string> names, const std::vector<std::vector<Rat>>& m) {
  const std::size_t n = names.size();
  if (m.size() != n) throw input_error("matrix size does not match point count");
  std::vector<Rat> flat;
  flat.reserve(n * n);
  for (const auto& row : m) {
    if (row.size() != n) throw input_error("matrix is not square");
    for (const auto& v : row) flat.push_back(v);
  }
  const BigInt l = lcm_of_denominators(flat);

  FiniteMetricSpace s;
  s.names_ = std::move(names);
  s.scale_ = Rat(BigInt(1), l);
  s.ticks_.resize(n * n);
  for (std::size_t i = 0; i < n * n; ++i) s.ticks_[i] = to_ticks(flat[i], l);

  for (std::size_t i = 0; i < n; ++i) {
    if (s.ticks_[i * n + i] != 0) {
      throw input_error("nonzero diagonal entry at point " + std::to_string(i));
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (s.ticks_[i * n + j] != s.ticks_[j * n + i]) {
        throw input_error("distance matrix is not symmetric");
      }
      if (i != j && s.ticks_[i * n + j] <= 0) {
        throw input_error("non-positive off-diagonal distance");
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (s.ticks_[i * n + j] > s.ticks_[i * n + k] + s.ticks_[k * n + j]) {
          throw input_error("triangle inequality fails on (" +
                            std::to_string(i) + "," + std::to_string(j) + "," +
                            std::to_string(k) + ")");
        }
      }
    }
  }
  return s;
}

FiniteMetricSpace FiniteMetricSpace::from_graph(
    std::vector<std::string> names,
    std::vector<std::tuple<int, int, Rat>> edges) {
  const std::size_t n = names.size();
  if (n == 0) throw input_error("empty point set");
  std::vector<Rat> weights;
  weights.reserve(edges.size());
  for (const auto& [u, v, w] : edges) {
    if (u < 0 || v < 0 || u >= static_cast<int>(n) || v >= static_cast<int>(n)) {
      throw input_error("edge endpoint out of range");
    }
    if (u == v) throw input_error("self-loop edge");
    if (w <= 0) throw input_error("non-positive edge weight");
    weights.push_back(w);
  }
  const BigInt l = lcm_of_denominators(weights);

  FiniteMetricSpace s;
  s.names_ = std::move(names);
  s.scale_ = Rat(BigInt(1), l);
  s.ticks_.assign(n * n, kUnreachable);

  struct Arc {
    int to;
    std::int64_t w;
  };
  std::vector<std::vector<Arc>> adj(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& [u, v, w] = edges[e];
    const std::int64_t t = to_ticks(w, l);
    adj[static_cast<std::size_t>(u)].push_back({v, t});
    adj[static_cast<std::size_t>(v)].push_back({u, t});
    s.edges_.emplace_back(u, v);
  }

  using Item = std::pair<std::int64_t, int>;
  for (std::size_t src = 0; src < n; ++src) {
    auto* row = s.ticks_.data() + src * n;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    row[src] = 0;
    pq.emplace(0, static_cast<int>(src));
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > row[u]) continue;
      for (const auto& a : adj[static_cast<std::size_t>(u)]) {
        if (d + a.w < row[a.to]) {
          row[a.to] = d + a.w;
          pq.emplace(row[a.to], a.to);
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (row[j] == kUnreachable) {
        throw input_error("graph is not connected (point " +
                          std::to_string(j) + " unreachable)");
      }
    }
  }
  return s;
}

FiniteMetricSpace FiniteMetricSpace::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw input_error("space document must be an object");

  auto parse_entry = [](const nlohmann::json& v) -> Rat {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return rat(v.get<std::int64_t>());
    throw input_error("distances must be integers or \"p/q\" strings");
  };

  std::vector<std::string> names;
  if (doc.contains("points")) {
    for (const auto& p : doc.at("points")) names.push_back(p.get<std::string>());
  }

  if (doc.contains("matrix")) {
    const auto& m = doc.at("matrix");
    std::vector<std::vector<Rat>> rows;
    for (const auto& r : m) {
      std::vector<Rat> row;
      for (const auto& v : r) row.push_back(parse_entry(v));
      rows.push_back(std::move(row));
    }
    if (names.empty()) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        names.push_back("p" + std::to_string(i));
      }
    }
    return from_matrix(std::move(names), rows);
  }

  if (doc.contains("edges")) {
    if (names.empty()) throw input_error("graph input requires \"points\"");
    std::vector<std::tuple<int, int, Rat>> edges;
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3) {
        throw input_error("edges must be [i, j] or [i, j, weight]");
      }
      Rat w = e.size() == 3 ? parse_entry(e[2]) : Rat(1);
      edges.emplace_back(e[0].get<int>(), e[1].get<int>(), w);
    }
    return from_graph(std::move(names), std::move(edges));
  }

  throw input_error("space document needs either \"matrix\" or \"edges\"");
}

PointSubset PointSubset::of(const FiniteMetricSpace& s,
                            std::vector<PointId> pts) {
  for (PointId p : pts) s.check_point(p);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return PointSubset{&s, std::move(pts)};
}

bool PointSubset::contains(PointId p) const {
  return std::binary_search(members.begin(), members.end(), p);
}

DiscretePath DiscretePath::through(const FiniteMetricSpace& s,
                                   std::vector<PointId> pts) {
  DiscretePath path;
  path.space = &s;
  Rat acc{0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s.check_point(pts[i]);
    if (i > 0) {
      const Rat step = s.dist(pts[i - 1], pts[i]);
      if (step == 0) throw input_error("repeated consecutive path point");
      acc += step;
    }
    path.lengths.push_back(acc);
  }
  path.points = std::move(pts);
  return path;
}

}  // namespace dehnfill
