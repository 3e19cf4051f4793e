#include "dehnfill/tree.hpp"

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "dehnfill/errors.hpp"
#include "dehnfill/metric_kernel.hpp"

namespace dehnfill {

namespace {

std::string apex_name(int factor, const std::string& rep) {
  return "(" + rep + ").P" + std::to_string(factor);
}

}  // namespace

const TruncatedTree::Vertex& TruncatedTree::vertex(PointId v) const {
  base_metric_->check_point(v);
  return vertices_[static_cast<std::size_t>(v)];
}

PointId TruncatedTree::base_apex(int factor) const {
  auto v = find_apex(factor, GroupWord{});
  if (!v) throw input_error("no base apex for factor " + std::to_string(factor));
  return *v;
}

PointId TruncatedTree::identity_vertex() const {
  if (pres_->num_factors() == 1) return 0;
  auto v = find_element(GroupWord{});
  if (!v) throw input_error("identity vertex missing");
  return *v;
}

std::optional<PointId> TruncatedTree::find_element(const GroupWord& g) const {
  const auto it = element_index_.find(format_word(normal_form(g, *pres_), *pres_));
  if (it == element_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<PointId> TruncatedTree::find_apex(int factor,
                                                const GroupWord& coset) const {
  const GroupWord rep = coset_representative(coset, factor, *pres_);
  const auto it = apex_index_.find({factor, format_word(rep, *pres_)});
  if (it == apex_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<PointId> TruncatedTree::act(const GroupWord& g, PointId v) const {
  const Vertex& vx = vertex(v);
  const GroupWord moved = mul(g, vx.rep, *pres_);
  if (vx.kind == VertexKind::element) return find_element(moved);
  return find_apex(vx.factor, moved);
}

std::int64_t TruncatedTree::boundary_margin(PointId v) const {
  return radius_ - vertex(v).rep_len;
}

std::vector<PointId> TruncatedTree::apex_vertices() const {
  std::vector<PointId> out;
  for (PointId v = 0; v < size(); ++v) {
    if (vertices_[std::size_t(v)].kind == VertexKind::apex) out.push_back(v);
  }
  return out;
}

TruncatedTree TruncatedTree::build(const FreeProductPresentation& pres,
                                   std::int64_t radius, const Rat& edge_scale,
                                   std::int64_t vertex_cap) {
  if (radius < 2) {
    throw precondition_error("tree radius must be >= 2");
  }
  if (edge_scale <= 0) throw input_error("edge scale must be positive");

  TruncatedTree t;
  t.pres_ = std::make_shared<FreeProductPresentation>(pres);
  t.radius_ = radius;
  t.edge_scale_ = edge_scale;

  std::vector<std::string> names;
  auto add_vertex = [&](Vertex vx, std::string name) -> PointId {
    if (static_cast<std::int64_t>(t.vertices_.size()) >= vertex_cap) {
      throw resource_error("tree ball exceeds the vertex cap " +
                           std::to_string(vertex_cap));
    }
    t.vertices_.push_back(std::move(vx));
    names.push_back(std::move(name));
    return static_cast<PointId>(t.vertices_.size() - 1);
  };

  if (pres.num_factors() == 1) {
    // The tree of a one-factor product is a single point.
    Vertex vx;
    vx.kind = VertexKind::apex;
    vx.factor = 0;
    add_vertex(vx, apex_name(0, "1"));
    t.apex_count_ = 1;
    t.apex_index_[{0, "1"}] = 0;
    t.base_metric_ = std::make_unique<FiniteMetricSpace>(
        FiniteMetricSpace::from_graph(names, {}));
    t.subdivided_metric_ =
        std::make_unique<FiniteMetricSpace>(FiniteMetricSpace::from_graph(names, {}));
    return t;
  }

  const auto elements =
      enumerate_ball(pres, radius, std::max(radius, kDefaultRadiusCap),
                     vertex_cap);
  for (const GroupWord& g : elements) {
    Vertex vx;
    vx.kind = VertexKind::element;
    vx.rep = g;
    vx.rep_len = word_length(g, pres);
    const PointId id = add_vertex(vx, format_word(g, pres));
    t.element_index_[format_word(g, pres)] = id;
  }
  for (const GroupWord& g : elements) {
    const PointId gid = *t.find_element(g);
    for (int i = 0; i < pres.num_factors(); ++i) {
      const GroupWord rep = coset_representative(g, i, pres);
      const std::string key = format_word(rep, pres);
      auto it = t.apex_index_.find({i, key});
      PointId aid;
      if (it == t.apex_index_.end()) {
        Vertex vx;
        vx.kind = VertexKind::apex;
        vx.factor = i;
        vx.rep = rep;
        vx.rep_len = word_length(rep, pres);
        aid = add_vertex(vx, apex_name(i, key));
        t.apex_index_[{i, key}] = aid;
        ++t.apex_count_;
      } else {
        aid = it->second;
      }
      t.edges_.emplace_back(gid, aid);
    }
  }

  std::vector<std::tuple<int, int, Rat>> base_edges, sub_edges;
  for (const auto& [u, v] : t.edges_) {
    base_edges.emplace_back(u, v, edge_scale / 2);
    sub_edges.emplace_back(u, v, edge_scale);
  }
  t.base_metric_ = std::make_unique<FiniteMetricSpace>(
      FiniteMetricSpace::from_graph(names, base_edges));
  t.subdivided_metric_ = std::make_unique<FiniteMetricSpace>(
      FiniteMetricSpace::from_graph(names, sub_edges));
  return t;
}

nlohmann::json TruncatedTree::to_json() const {
  nlohmann::json verts = nlohmann::json::array();
  for (PointId v = 0; v < size(); ++v) {
    const Vertex& vx = vertices_[std::size_t(v)];
    nlohmann::json j = {
        {"id", v},
        {"kind", vx.kind == VertexKind::apex ? "apex" : "element"},
        {"rep", format_word(vx.rep, *pres_)}};
    if (vx.kind == VertexKind::apex) j["factor"] = vx.factor;
    verts.push_back(std::move(j));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [u, v] : edges_) edges.push_back({u, v});
  return {{"radius", radius_},
          {"edge_scale", format_rational(edge_scale_)},
          {"vertices", verts},
          {"edges", edges}};
}

std::string TruncatedTree::to_dot(const std::vector<PointId>& highlight) const {
  std::string out = "graph tree {\n  node [shape=circle];\n";
  for (PointId v = 0; v < size(); ++v) {
    const Vertex& vx = vertices_[std::size_t(v)];
    out += "  n" + std::to_string(v) + " [label=\"" +
           base_metric_->name(v) + "\"";
    if (vx.kind == VertexKind::apex) out += ", shape=doublecircle";
    if (std::find(highlight.begin(), highlight.end(), v) != highlight.end()) {
      out += ", color=red, penwidth=2";
    }
    out += "];\n";
  }
  for (const auto& [u, v] : edges_) {
    out += "  n" + std::to_string(u) + " -- n" + std::to_string(v) + ";\n";
  }
  out += "}\n";
  return out;
}

namespace {

struct DisplacementScan {
  Rat min_disp{0};
  bool any = false;
  std::vector<PointId> argmins;
};

DisplacementScan scan_displacement(const TruncatedTree& tree,
                                   const FiniteMetricSpace& metric,
                                   const GroupWord& g) {
  DisplacementScan res;
  for (PointId v = 0; v < tree.size(); ++v) {
    const auto w = tree.act(g, v);
    if (!w) continue;
    const Rat d = metric.dist(v, *w);
    if (!res.any || d < res.min_disp) {
      res.min_disp = d;
      res.argmins.clear();
      res.any = true;
    }
    if (d == res.min_disp) res.argmins.push_back(v);
  }
  return res;
}

// Minimal displacement in the given metric with the interior-margin contract.
// Returns the scan together with the syllable-formula value for cross checks.
struct TranslationData {
  Rat length;               // certified translation length
  std::int64_t syllables;   // cyclic syllable length
  PointId witness;          // minimizing vertex with margin
};

TranslationData translation_data(const TruncatedTree& tree,
                                 const FiniteMetricSpace& metric,
                                 const GroupWord& g) {
  const auto& pres = tree.presentation();
  const auto cr = cyclic_reduction(g, pres);
  const std::int64_t syl =
      static_cast<std::int64_t>(cr.core.syllables.size());
  // Interior margin: the witness only has to see one full period of the
  // cyclic core, so the margin is measured against the core's word length.
  const std::int64_t need =
      word_length(from_syllables(cr.core, pres), pres);

  const auto scan = scan_displacement(tree, metric, g);
  PointId witness = -1;
  for (PointId v : scan.argmins) {
    if (tree.boundary_margin(v) >= need) {
      witness = v;
      break;
    }
  }
  if (!scan.any || witness < 0) {
    const std::int64_t suggested =
        need + word_length(cr.conjugator, pres) + 2;
    throw precondition_error(
        "ball too small to certify the translation length; radius >= " +
        std::to_string(suggested) + " suffices");
  }
  // cross-assert against the syllable formula: per full edge the metric
  // charges twice the half-edge length
  const Rat half_edge =
      metric.dist(tree.identity_vertex(),
                  tree.base_apex(cr.core.syllables.empty()
                                     ? 0
                                     : cr.core.syllables.front().factor));
  const Rat formula = syl <= 1 ? Rat(0) : Rat(2 * syl) * half_edge;
  if (scan.min_disp != formula) {
    throw precondition_error(
        "translation length scan disagrees with the syllable formula; "
        "enlarge the ball radius");
  }
  return {scan.min_disp, syl, witness};
}

}  // namespace

Rat translation_length(const TruncatedTree& tree, const GroupWord& g) {
  return translation_data(tree, tree.base_metric(), g).length;
}

Rat stable_translation_length(const TruncatedTree& tree, const GroupWord& g,
                              std::int64_t n_max) {
  if (n_max < 1) throw input_error("n_max must be >= 1");
  const auto& pres = tree.presentation();
  const auto data = translation_data(tree, tree.base_metric(), g);
  const PointId x = data.witness;

  GroupWord power;  // g^n
  std::int64_t best_n = 0;
  PointId best_img = x;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    power = mul(power, g, pres);
    const auto img = tree.act(power, x);
    if (!img) break;
    best_n = n;
    best_img = *img;
  }
  if (best_n == 0) {
    throw precondition_error("no feasible power of g stays in the ball");
  }
  const Rat result = tree.base_metric().dist(best_img, x) / Rat(best_n);
  if (data.syllables >= 2 && result != data.length) {
    throw precondition_error(
        "stable translation length drifted from l(g); the witness vertex "
        "left the axis region, enlarge the ball");
  }
  return result;
}

IsometryType classify(const TruncatedTree& tree, const GroupWord& g) {
  const auto data = translation_data(tree, tree.base_metric(), g);
  const bool lox_metric = data.length > 0;
  const bool lox_syllable = data.syllables >= 2;
  if (lox_metric != lox_syllable) {
    throw precondition_error("isometry type cross-check failed");
  }
  return lox_metric ? IsometryType::loxodromic : IsometryType::elliptic;
}

AxisData axis_and_cylinder(const TruncatedTree& tree, const GroupWord& g,
                           const FiniteMetricSpace& metric, const Rat& delta) {
  if (delta < 0) throw input_error("delta must be >= 0");
  const auto data = translation_data(tree, metric, g);
  if (data.syllables < 2) {
    throw precondition_error("axis requested for an elliptic element");
  }

  // The clipped minimal-displacement sets of g and g^-1 differ only where
  // act leaves the ball; their union restores the symmetry of the axis.
  const auto fwd = scan_displacement(tree, metric, g);
  const auto bwd = scan_displacement(tree, metric, inverse_word(g));
  if (fwd.min_disp != bwd.min_disp) {
    throw precondition_error("axis scans of g and g^-1 disagree; enlarge "
                             "the ball radius");
  }
  std::vector<PointId> axis = fwd.argmins;
  axis.insert(axis.end(), bwd.argmins.begin(), bwd.argmins.end());
  std::sort(axis.begin(), axis.end());
  axis.erase(std::unique(axis.begin(), axis.end()), axis.end());

  AxisData res;
  // order the path by distance from one extremity
  PointId e1 = axis.front();
  for (PointId v : axis) {
    if (metric.ticks(axis.front(), v) > metric.ticks(axis.front(), e1)) e1 = v;
  }
  std::sort(axis.begin(), axis.end(), [&](PointId a, PointId b) {
    return metric.ticks(e1, a) < metric.ticks(e1, b);
  });
  res.path = axis;
  res.period = data.syllables;

  // direction: g translates interior points toward g+
  const PointId mid = axis[axis.size() / 2];
  const auto img = tree.act(g, mid);
  if (img && metric.ticks(*img, axis.back()) < metric.ticks(mid, axis.back())) {
    res.forward_end = axis.back();
    res.backward_end = axis.front();
  } else {
    res.forward_end = axis.front();
    res.backward_end = axis.back();
  }
  res.cylinder =
      neighborhood(metric, PointSubset::of(metric, axis), 20 * delta);
  return res;
}

SuiteReport verify_translation_lemmas(const TruncatedTree& tree,
                                      const FiniteMetricSpace& metric,
                                      const TranslationSuiteOptions& opts) {
  const auto& pres = tree.presentation();
  SuiteReport report;
  std::mt19937_64 rng(opts.seed);

  const std::int64_t probe_len =
      std::min(opts.max_word_length, tree.radius() / 2);
  const auto probes = enumerate_ball(pres, probe_len);

  {
    Check c{"prop_translation_window"};
    std::uint64_t skipped = 0;
    for (const auto& g : probes) {
      try {
        const Rat l = translation_length(tree, g);
        const Rat linf = stable_translation_length(tree, g, 8);
        c.record(linf - l, format_word(g, pres));                    // l_inf <= l
        c.record(l - (linf + 16 * opts.delta), format_word(g, pres));  // l <= l_inf + 16d
      } catch (const precondition_error&) {
        ++skipped;
      }
    }
    if (skipped > 0) c.witness = std::to_string(skipped) + " probe(s) skipped";
    report.checks.push_back(std::move(c));
  }

  // loxodromic sample for the cylinder lemma
  std::vector<GroupWord> loxo;
  for (const auto& g : probes) {
    if (cyclic_reduction(g, pres).core.syllables.size() >= 2) loxo.push_back(g);
  }
  std::shuffle(loxo.begin(), loxo.end(), rng);
  if (loxo.size() > opts.loxodromic_samples) {
    loxo.resize(opts.loxodromic_samples);
  }

  {
    Check bound{"lemma_cylinder_displacement"};
    Check sharp{"lemma_cylinder_sharp_identity"};
    Check inv{"axis_invariance"};
    for (const auto& g : loxo) {
      AxisData ax;
      Rat l;
      try {
        ax = axis_and_cylinder(tree, g, metric, opts.delta);
        l = translation_data(tree, metric, g).length;
      } catch (const precondition_error&) {
        continue;
      }
      const PointSubset axis_set = PointSubset::of(metric, ax.path);
      for (PointId x = 0; x < metric.size(); ++x) {
        const auto img = tree.act(g, x);
        if (!img) continue;
        const Rat disp = metric.dist(x, *img);
        const Rat d_cyl = dist_to_subset(metric, x, ax.cylinder);
        bound.record(disp - (l + 2 * d_cyl + 112 * opts.delta),
                     metric.name(x));
        // the sharp identity needs the projection inside the clipped axis
        const PointId proj = project(metric, x, axis_set, Rat(0));
        if (proj != ax.path.front() && proj != ax.path.back()) {
          const Rat d_axis = dist_to_subset(metric, x, axis_set);
          if (disp != l + 2 * d_axis) {
            sharp.record_violation(metric.name(x) + " under " +
                                   format_word(g, pres));
          } else {
            sharp.record(Rat(0), "");
          }
        }
      }
      for (PointId v : ax.path) {
        const auto w = tree.act(g, v);
        if (!w) continue;
        const auto w2 = tree.act(g, *w);
        if (!w2) continue;
        if (!axis_set.contains(*w)) {
          inv.record_violation(metric.name(v) + " under " +
                               format_word(g, pres));
        } else {
          inv.record(Rat(0), "");
        }
      }
    }
    report.checks.push_back(std::move(bound));
    report.checks.push_back(std::move(sharp));
    report.checks.push_back(std::move(inv));
  }

  {
    Check c{"action_compatibility"};
    std::uniform_int_distribution<std::size_t> pick(0, probes.size() - 1);
    std::uniform_int_distribution<int> pick_v(0, tree.size() - 1);
    for (int it = 0; it < 200; ++it) {
      const auto& a = probes[pick(rng)];
      const auto& b = probes[pick(rng)];
      const PointId v = pick_v(rng);
      const auto inner = tree.act(b, v);
      if (!inner) continue;
      const auto lhs = tree.act(mul(a, b, pres), v);
      const auto rhs = tree.act(a, *inner);
      if (!lhs || !rhs) continue;
      if (*lhs != *rhs) {
        c.record_violation(format_word(a, pres) + " * " +
                           format_word(b, pres) + " at " + metric.name(v));
      } else {
        c.record(Rat(0), "");
      }
    }
    report.checks.push_back(std::move(c));
  }

  return report;
}

}  // namespace dehnfill
