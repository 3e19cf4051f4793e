#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dehnfill/rational.hpp"

#include <nlohmann/json_fwd.hpp>

namespace dehnfill {

using PointId = int;

/// A finite point set with an exact rational metric.
///
/// Distances are stored as int64 multiples ("ticks") of a common rational
/// scale, so the quadruple scans run on plain integers while every value
/// handed back to callers stays exact.
class FiniteMetricSpace {
 public:
  /// Builds from a full distance matrix. Validates symmetry, zero diagonal
  /// and the triangle inequality (O(n^3)).
  static FiniteMetricSpace from_matrix(std::vector<std::string> names,
                                       const std::vector<std::vector<Rat>>& m);

  /// Builds the shortest-path metric of a connected weighted graph.
  /// The triangle inequality holds by construction.
  static FiniteMetricSpace from_graph(
      std::vector<std::string> names,
      std::vector<std::tuple<int, int, Rat>> edges);

  /// Accepts {"points":[...],"edges":[[i,j,"p/q"],...]} or {"matrix":[[...]]}.
  static FiniteMetricSpace from_json(const nlohmann::json& doc);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(PointId p) const;
  PointId index_of(const std::string& name) const;  // input_error if unknown

  Rat dist(PointId a, PointId b) const { return scale_ * ticks(a, b); }
  std::int64_t ticks(PointId a, PointId b) const {
    return ticks_[static_cast<std::size_t>(a) * names_.size() + b];
  }
  const Rat& tick_scale() const { return scale_; }
  const std::vector<std::int64_t>& tick_matrix() const { return ticks_; }

  bool has_adjacency() const { return !edges_.empty(); }
  const std::vector<std::pair<int, int>>& graph_edges() const {
    return edges_;
  }
  bool adjacent(PointId a, PointId b) const;

  /// True if the space came from a graph that is acyclic (hence a tree
  /// metric, 0-hyperbolic).
  bool is_tree_metric() const;

  void check_point(PointId p) const;  // input_error when out of range

 private:
  FiniteMetricSpace() = default;

  std::vector<std::string> names_;
  Rat scale_{1};
  std::vector<std::int64_t> ticks_;
  std::vector<std::pair<int, int>> edges_;  // empty for matrix input

  friend class TruncatedTree;
};

/// A subset of a FiniteMetricSpace, members sorted and unique.
struct PointSubset {
  const FiniteMetricSpace* space = nullptr;
  std::vector<PointId> members;

  static PointSubset of(const FiniteMetricSpace& s, std::vector<PointId> pts);
  bool contains(PointId p) const;
  bool empty() const { return members.empty(); }
  std::size_t size() const { return members.size(); }
};

/// A finite ordered point sequence with rational cumulative arc-length.
struct DiscretePath {
  const FiniteMetricSpace* space = nullptr;
  std::vector<PointId> points;
  std::vector<Rat> lengths;  // strictly increasing, same size as points

  /// Path through the listed points with arc length accumulated from the
  /// space's metric.
  static DiscretePath through(const FiniteMetricSpace& s,
                              std::vector<PointId> pts);
};

}  // namespace dehnfill
