#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dehnfill/group.hpp"
#include "dehnfill/metric_space.hpp"
#include "dehnfill/rational.hpp"
#include "dehnfill/report.hpp"

namespace dehnfill {

enum class VertexKind { element, apex };

enum class IsometryType { elliptic, loxodromic };

/// Geodesic line of a loxodromic isometry, clipped to the ball.
struct AxisData {
  std::vector<PointId> path;     // ordered along the axis
  std::int64_t period = 0;       // conceptual edges per translation
  PointId forward_end = -1;      // direction marker for g+
  PointId backward_end = -1;     // direction marker for g-
  PointSubset cylinder;          // 20*delta neighborhood of the path
};

/// Truncated Bass-Serre ball of a free product of cyclic groups.
///
/// Vertices come in two kinds: apex vertices are the cosets t*P_i (the
/// conjugates of the factors fix exactly these), and element vertices are the
/// group elements themselves, sitting as midpoints between the apices they
/// touch. The ball holds every element of word length <= radius together
/// with all apices those elements see.
///
/// Two metrics are exposed on the same graph. The base metric gives each
/// half-edge length edge_scale/2, so adjacent apices of different factors
/// are edge_scale apart and translation lengths equal edge_scale times the
/// cyclic syllable length. The subdivided metric doubles this (half-edge
/// length edge_scale), pushing distinct apices >= 2*edge_scale apart, which
/// is what the rotation family needs for its separation axiom.
class TruncatedTree {
 public:
  struct Vertex {
    VertexKind kind = VertexKind::element;
    int factor = -1;        // apex only
    GroupWord rep;          // element, or shortlex coset representative
    std::int64_t rep_len = 0;
  };

  static constexpr std::int64_t kDefaultVertexCap = 6000;

  /// precondition_error for radius < 2 (except the one-vertex single-factor
  /// tree), resource_error when the ball exceeds vertex_cap.
  static TruncatedTree build(const FreeProductPresentation& pres,
                             std::int64_t radius, const Rat& edge_scale,
                             std::int64_t vertex_cap = kDefaultVertexCap);

  const FreeProductPresentation& presentation() const { return *pres_; }
  std::int64_t radius() const { return radius_; }
  const Rat& edge_scale() const { return edge_scale_; }

  int size() const { return static_cast<int>(vertices_.size()); }
  const Vertex& vertex(PointId v) const;
  int apex_count() const { return apex_count_; }
  int element_count() const { return size() - apex_count_; }
  /// Base apex v_i = 1*P_i.
  PointId base_apex(int factor) const;
  PointId identity_vertex() const;

  std::optional<PointId> find_element(const GroupWord& g) const;
  std::optional<PointId> find_apex(int factor, const GroupWord& coset) const;

  /// g . v, or nullopt when the image leaves the ball (never a wrong vertex).
  std::optional<PointId> act(const GroupWord& g, PointId v) const;

  /// Word-length margin between the vertex and the ball boundary.
  std::int64_t boundary_margin(PointId v) const;

  const FiniteMetricSpace& base_metric() const { return *base_metric_; }
  const FiniteMetricSpace& subdivided_metric() const {
    return *subdivided_metric_;
  }

  std::vector<PointId> apex_vertices() const;

  nlohmann::json to_json() const;
  std::string to_dot(const std::vector<PointId>& highlight = {}) const;

 private:
  TruncatedTree() = default;

  std::shared_ptr<const FreeProductPresentation> pres_;
  std::int64_t radius_ = 0;
  Rat edge_scale_{1};
  std::vector<Vertex> vertices_;
  int apex_count_ = 0;
  std::map<std::string, PointId> element_index_;  // canonical word text
  std::map<std::pair<int, std::string>, PointId> apex_index_;
  std::vector<std::pair<int, int>> edges_;
  std::unique_ptr<FiniteMetricSpace> base_metric_;
  std::unique_ptr<FiniteMetricSpace> subdivided_metric_;
};

/// l(g) as a min-displacement scan over the ball, cross-asserted against
/// edge_scale * (cyclic syllable length). precondition_error when no
/// minimizing vertex has word-length margin >= |g|.
Rat translation_length(const TruncatedTree& tree, const GroupWord& g);

/// d(g^n x, x)/n at a minimal-displacement vertex for the largest feasible
/// n <= n_max; equals translation_length exactly on trees (asserted).
Rat stable_translation_length(const TruncatedTree& tree, const GroupWord& g,
                              std::int64_t n_max);

IsometryType classify(const TruncatedTree& tree, const GroupWord& g);

/// Axis and 20*delta cylinder of a loxodromic g in the chosen metric.
/// precondition_error for elliptic g.
AxisData axis_and_cylinder(const TruncatedTree& tree, const GroupWord& g,
                           const FiniteMetricSpace& metric, const Rat& delta);

struct TranslationSuiteOptions {
  Rat delta{0};
  std::int64_t max_word_length = 6;
  std::uint64_t seed = 0;
  std::uint64_t loxodromic_samples = 8;
};

/// Prop-level checks: translation-length window (16*delta), cylinder
/// displacement bound (112*delta) with the sharp tree identity, action
/// compatibility, and axis invariance.
SuiteReport verify_translation_lemmas(const TruncatedTree& tree,
                                      const FiniteMetricSpace& metric,
                                      const TranslationSuiteOptions& opts);

}  // namespace dehnfill
