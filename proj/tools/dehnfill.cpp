// dehnfill: experiment driver for the filling pipeline.
//
//   dehnfill delta <space.json>          hyperbolicity constant of a space
//   dehnfill fill -c cfg.json            tree, axioms, windmill, certificate
//   dehnfill preimage -c cfg.json -g w   structure of <w, K> over a coset
//   dehnfill verify -c cfg.json          every lemma suite, one matrix
//
// Exit codes: 0 success, 1 internal error, 2 input error, 3 precondition or
// resource error. Reports are deterministic byte-for-byte given the config.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dehnfill/errors.hpp"
#include "dehnfill/group.hpp"
#include "dehnfill/metric_kernel.hpp"
#include "dehnfill/oracle.hpp"
#include "dehnfill/rotation.hpp"
#include "dehnfill/tree.hpp"
#include "dehnfill/windmill.hpp"

namespace {

using namespace dehnfill;
using nlohmann::json;

struct Caps {
  std::int64_t vertex_cap = 6000;
  std::int64_t max_syllables = 3;  // certification bounds
  std::int64_t max_exponent = 2;
  std::int64_t proper_len = 6;     // proper-action scan word length
  std::int64_t r3_word_length = 3;
};

struct ExperimentConfig {
  FreeProductPresentation pres{{{0, "a"}, {0, "b"}}};
  FillingSpec filling{{3, 3}};
  std::int64_t radius = 4;
  Rat edge_scale{1};
  Rat delta{Rat(1, BigInt("100000000000"))};  // 1e-11
  Rat sigma{2};
  std::uint64_t seed = 0;
  std::int64_t search_len = 6;
  Caps caps;
  json echo = json::object();  // the document as loaded, for the report
};

Rat rat_field(const json& v, const std::string& name) {
  if (v.is_number_integer()) return Rat(v.get<std::int64_t>());
  if (v.is_string()) return parse_rational(v.get<std::string>());
  throw input_error("field \"" + name +
                    "\" takes an integer or a \"p/q\" string");
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg;
  if (path.empty()) return cfg;
  const json doc = parse_json_file(path);
  cfg.echo = doc;
  if (doc.contains("presentation")) {
    cfg.pres = FreeProductPresentation::from_json(doc.at("presentation"));
  }
  if (doc.contains("fillings")) cfg.filling = FillingSpec::from_json(doc);
  if (doc.contains("radius")) cfg.radius = doc.at("radius").get<std::int64_t>();
  if (doc.contains("edge_scale")) {
    cfg.edge_scale = rat_field(doc.at("edge_scale"), "edge_scale");
  }
  if (doc.contains("delta")) cfg.delta = rat_field(doc.at("delta"), "delta");
  if (doc.contains("sigma")) cfg.sigma = rat_field(doc.at("sigma"), "sigma");
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("seeds")) {
    const auto& seeds = doc.at("seeds");
    if (!seeds.is_array() || seeds.empty()) {
      throw input_error("\"seeds\" must be a non-empty array");
    }
    cfg.seed = seeds.front().get<std::uint64_t>();
  }
  if (doc.contains("search_len")) {
    cfg.search_len = doc.at("search_len").get<std::int64_t>();
  }
  if (doc.contains("caps")) {
    const auto& c = doc.at("caps");
    cfg.caps.vertex_cap = c.value("vertex_cap", cfg.caps.vertex_cap);
    cfg.caps.max_syllables = c.value("max_syllables", cfg.caps.max_syllables);
    cfg.caps.max_exponent = c.value("max_exponent", cfg.caps.max_exponent);
    cfg.caps.proper_len = c.value("proper_len", cfg.caps.proper_len);
    cfg.caps.r3_word_length =
        c.value("r3_word_length", cfg.caps.r3_word_length);
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  cfg.filling.validate(cfg.pres);
  if (cfg.delta <= 0) throw input_error("delta must be positive");
  if (cfg.edge_scale <= 0) throw input_error("edge_scale must be positive");
  if (cfg.sigma < 2 * cfg.edge_scale) {
    throw input_error(
        "sigma below the minimal apex gap 2*edge_scale of the model");
  }
  if (cfg.radius < 1) throw input_error("radius must be >= 1");
  if (cfg.search_len < 1) throw input_error("search_len must be >= 1");
  if (cfg.caps.vertex_cap < 1 || cfg.caps.max_syllables < 1 ||
      cfg.caps.max_exponent < 1 || cfg.caps.proper_len < 1 ||
      cfg.caps.r3_word_length < 1) {
    throw input_error("caps must be positive");
  }
}

json config_echo(const ExperimentConfig& cfg) {
  json factors = json::array();
  for (int i = 0; i < cfg.pres.num_factors(); ++i) {
    const auto& f = cfg.pres.factor(i);
    factors.push_back({{"name", f.name},
                       {"type", f.finite() ? "Z/m" : "Z"},
                       {"m", f.order}});
  }
  return {{"presentation", {{"factors", factors}}},
          {"fillings", cfg.filling.indices},
          {"radius", cfg.radius},
          {"edge_scale", format_rational(cfg.edge_scale)},
          {"delta", format_rational(cfg.delta)},
          {"sigma", format_rational(cfg.sigma)},
          {"seed", cfg.seed},
          {"search_len", cfg.search_len},
          {"caps",
           {{"vertex_cap", cfg.caps.vertex_cap},
            {"max_syllables", cfg.caps.max_syllables},
            {"max_exponent", cfg.caps.max_exponent},
            {"proper_len", cfg.caps.proper_len},
            {"r3_word_length", cfg.caps.r3_word_length}}}};
}

WindmillOptions windmill_options(const ExperimentConfig& cfg) {
  WindmillOptions o;
  o.delta = cfg.delta;
  o.seed = cfg.seed;
  return o;
}

RotationSuiteOptions rotation_options(const ExperimentConfig& cfg) {
  RotationSuiteOptions o;
  o.delta = cfg.delta;
  o.seed = cfg.seed;
  o.r3_word_length = cfg.caps.r3_word_length;
  return o;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw input_error("cannot write " + p.string());
  out << text;
}

void emit(const json& report, const std::string& out_dir,
          const TruncatedTree* tree, const json* trace) {
  std::cout << report.dump(2) << "\n";
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_file(dir / "report.json", report.dump(2) + "\n");
  if (trace) write_file(dir / "trace.json", trace->dump(2) + "\n");
  if (tree) write_file(dir / "tree.dot", tree->to_dot());
}

json delta_report(const DeltaResult& r) {
  return {{"delta", format_rational(r.delta)},
          {"dual_delta", format_rational(r.dual_delta)},
          {"exact", r.exact},
          {"quadruples", r.quadruples}};
}

int cmd_delta(const std::string& file, const std::string& out_dir) {
  const auto space = FiniteMetricSpace::from_json(parse_json_file(file));
  const auto res = hyperbolicity_delta(space);
  json report = {{"command", "delta"},
                 {"space", {{"file", file}, {"points", space.size()}}},
                 {"result", delta_report(res)},
                 {"status", "pass"}};
  emit(report, out_dir, nullptr, nullptr);
  return 0;
}

struct Pipeline {
  TruncatedTree tree;
  RotationFamily family;
};

Pipeline build_pipeline(const ExperimentConfig& cfg) {
  auto tree = TruncatedTree::build(cfg.pres, cfg.radius, cfg.edge_scale,
                                   cfg.caps.vertex_cap);
  auto family = build_family(tree, cfg.filling, cfg.sigma);
  return {std::move(tree), std::move(family)};
}

json tree_summary(const TruncatedTree& tree) {
  return {{"radius", tree.radius()},
          {"vertices", tree.size()},
          {"apices", tree.apex_count()},
          {"edge_scale", format_rational(tree.edge_scale())}};
}

int cmd_fill(const ExperimentConfig& cfg, const std::string& out_dir) {
  auto [tree, family] = build_pipeline(cfg);
  const auto ropts = rotation_options(cfg);
  const auto wopts = windmill_options(cfg);

  const auto axioms = verify_axioms(family, tree, ropts);
  const auto lemmas = verify_rotation_lemmas(family, tree, ropts);
  const auto proper =
      verify_proper_action(tree, cfg.filling, cfg.caps.proper_len);

  const auto run = kernel_structure(tree, family, wopts);
  const auto windmill = verify_windmill(run.state, tree, family, wopts);

  const auto prod =
      FormalFreeProduct::from_ledger(run.ledger, cfg.pres, cfg.filling);
  const auto cert = certify_injectivity(prod, cfg.pres, cfg.caps.max_syllables,
                                        cfg.caps.max_exponent);

  const auto quotient = build_quotient_space(tree, cfg.filling);
  const auto qd = hyperbolicity_delta(quotient);
  const Rat qbound = 900 * cfg.delta;
  const bool quotient_ok = qd.delta <= qbound;

  const bool pass = axioms.all_passed() && lemmas.all_passed() &&
                    proper.all_passed() && windmill.all_passed() &&
                    cert.injective && quotient_ok;

  json report = {{"command", "fill"},
                 {"config", config_echo(cfg)},
                 {"tree", tree_summary(tree)},
                 {"family",
                  {{"pairs", family.pairs.size()},
                   {"sigma", format_rational(family.sigma)}}},
                 {"axioms", axioms.to_json()},
                 {"rotation_lemmas", lemmas.to_json()},
                 {"proper_action", proper.to_json()},
                 {"windmill",
                  {{"stages", run.state.stage},
                   {"ledger", run.ledger.to_json(cfg.pres)},
                   {"verify", windmill.to_json()}}},
                 {"certificate", cert.to_json()},
                 {"quotient",
                  {{"delta", format_rational(qd.delta)},
                   {"bound", format_rational(qbound)},
                   {"pass", quotient_ok}}},
                 {"status", pass ? "pass" : "fail"}};
  const json trace = trace_to_json(run.state);
  emit(report, out_dir, &tree, &trace);
  return pass ? 0 : 3;
}

int cmd_preimage(const ExperimentConfig& cfg, const std::string& word,
                 const std::string& out_dir) {
  auto [tree, family] = build_pipeline(cfg);
  const auto wopts = windmill_options(cfg);
  const auto g_bar = parse_word(word, cfg.pres);

  const auto res =
      preimage_structure(g_bar, tree, family, cfg.search_len, wopts);
  const auto prod =
      FormalFreeProduct::from_ledger(res.ledger, cfg.pres, cfg.filling);
  const auto cert = certify_injectivity(prod, cfg.pres, cfg.caps.max_syllables,
                                        cfg.caps.max_exponent);

  const bool pass = res.reduced.certificate.all_passed() && cert.injective;
  json report = {{"command", "preimage"},
                 {"config", config_echo(cfg)},
                 {"tree", tree_summary(tree)},
                 {"element", format_word(g_bar, cfg.pres)},
                 {"reduced",
                  {{"g", format_word(res.reduced.g, cfg.pres)},
                   {"shift", format_word(res.reduced.shift, cfg.pres)},
                   {"translation", format_rational(res.reduced.translation)},
                   {"candidates", res.reduced.candidates},
                   {"certificate", res.reduced.certificate.to_json()}}},
                 {"windmill",
                  {{"stages", res.state.stage},
                   {"ledger", res.ledger.to_json(cfg.pres)}}},
                 {"certificate", cert.to_json()},
                 {"status", pass ? "pass" : "fail"}};
  const json trace = trace_to_json(res.state);
  emit(report, out_dir, &tree, &trace);
  return pass ? 0 : 3;
}

int cmd_verify(const ExperimentConfig& cfg, const std::string& out_dir) {
  auto [tree, family] = build_pipeline(cfg);
  const auto& sub = tree.subdivided_metric();
  const auto ropts = rotation_options(cfg);
  const auto wopts = windmill_options(cfg);

  json suites;

  SuiteOptions mopts;
  mopts.delta = cfg.delta;
  mopts.seed = cfg.seed;
  suites["metric_kernel"] = verify_metric_lemma_suite(sub, mopts).to_json();

  TranslationSuiteOptions topts;
  topts.delta = cfg.delta;
  topts.seed = cfg.seed;
  suites["tree_action"] = verify_translation_lemmas(tree, sub, topts).to_json();

  suites["rotation_axioms"] = verify_axioms(family, tree, ropts).to_json();
  suites["rotation_lemmas"] =
      verify_rotation_lemmas(family, tree, ropts).to_json();
  suites["proper_action"] =
      verify_proper_action(tree, cfg.filling, cfg.caps.proper_len).to_json();

  const auto run = kernel_structure(tree, family, wopts);
  suites["windmill"] = verify_windmill(run.state, tree, family, wopts).to_json();

  const auto prod =
      FormalFreeProduct::from_ledger(run.ledger, cfg.pres, cfg.filling);
  suites["injectivity"] =
      certify_injectivity(prod, cfg.pres, cfg.caps.max_syllables,
                          cfg.caps.max_exponent)
          .to_json();

  const auto qd = hyperbolicity_delta(build_quotient_space(tree, cfg.filling));
  suites["quotient"] = {{"delta", format_rational(qd.delta)},
                        {"bound", format_rational(900 * cfg.delta)},
                        {"pass", qd.delta <= 900 * cfg.delta}};

  bool pass = true;
  for (const auto& [name, suite] : suites.items()) {
    if (suite.contains("pass")) {
      pass = pass && suite.at("pass").get<bool>();
    } else if (suite.contains("status")) {
      pass = pass && suite.at("status") == "certified";
    } else {
      for (const auto& check : suite) {
        pass = pass && check.at("status") != "fail";
      }
    }
  }

  json report = {{"command", "verify"},
                 {"config", config_echo(cfg)},
                 {"tree", tree_summary(tree)},
                 {"suites", suites},
                 {"status", pass ? "pass" : "fail"}};
  const json trace = trace_to_json(run.state);
  emit(report, out_dir, &tree, &trace);
  return 0;  // failures are report entries, not process errors
}

json error_report(const std::string& kind, const std::string& msg) {
  return {{"error", {{"kind", kind}, {"message", msg}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dehn fillings of free products of cyclic groups, at ball "
               "scale with exact arithmetic"};
  app.require_subcommand(1);

  std::string space_file, config_file, element, out_dir;

  auto* delta_cmd =
      app.add_subcommand("delta", "hyperbolicity constant of a space file");
  delta_cmd->add_option("file", space_file, "space JSON")->required();
  delta_cmd->add_option("--out", out_dir, "report directory");

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_file, "experiment config JSON");
    cmd->add_option("--out", out_dir, "report directory");
  };
  auto* fill_cmd =
      app.add_subcommand("fill", "filling pipeline with certificates");
  add_config(fill_cmd);
  auto* pre_cmd =
      app.add_subcommand("preimage", "structure of <g, K> over an image");
  add_config(pre_cmd);
  pre_cmd->add_option("-g,--element", element, "image word, e.g. \"a b\"")
      ->required();
  auto* verify_cmd = app.add_subcommand("verify", "every lemma suite");
  add_config(verify_cmd);

  // flag overrides, applied after the config file is loaded
  std::optional<std::int64_t> radius_flag, search_len_flag;
  std::optional<std::string> delta_flag, sigma_flag;
  std::optional<std::uint64_t> seed_flag;
  for (CLI::App* cmd : {fill_cmd, pre_cmd, verify_cmd}) {
    cmd->add_option("--radius", radius_flag, "ball radius");
    cmd->add_option("--delta", delta_flag, "hyperbolicity constant p/q");
    cmd->add_option("--sigma", sigma_flag, "separation constant p/q");
    cmd->add_option("--seed", seed_flag, "scan seed");
    cmd->add_option("--search-len", search_len_flag, "preimage search length");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (delta_cmd->parsed()) return cmd_delta(space_file, out_dir);

    ExperimentConfig cfg = load_config(config_file);
    if (radius_flag) cfg.radius = *radius_flag;
    if (delta_flag) cfg.delta = parse_rational(*delta_flag);
    if (sigma_flag) cfg.sigma = parse_rational(*sigma_flag);
    if (seed_flag) cfg.seed = *seed_flag;
    if (search_len_flag) cfg.search_len = *search_len_flag;
    validate(cfg);

    if (fill_cmd->parsed()) return cmd_fill(cfg, out_dir);
    if (pre_cmd->parsed()) return cmd_preimage(cfg, element, out_dir);
    return cmd_verify(cfg, out_dir);
  } catch (const input_error& e) {
    std::cout << error_report("input", e.what()).dump(2) << "\n";
    return 2;
  } catch (const precondition_error& e) {
    std::cout << error_report("precondition", e.what()).dump(2) << "\n";
    return 3;
  } catch (const resource_error& e) {
    std::cout << error_report("resource", e.what()).dump(2) << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cout << error_report("internal", e.what()).dump(2) << "\n";
    return 1;
  }
}
