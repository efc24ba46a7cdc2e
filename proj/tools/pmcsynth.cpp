#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pmcsynth/bench.hpp"
#include "pmcsynth/descent.hpp"
#include "pmcsynth/gradient.hpp"
#include "pmcsynth/model.hpp"
#include "pmcsynth/textio.hpp"

using json = nlohmann::ordered_json;

namespace {

using namespace pmcsynth;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Prepared {
  Model pmc;
  Region region;
  PropertyQuery query;
  double preprocess_seconds = 0.0;
};

Prepared prepare(const std::string& model_path, const std::string& region_path,
                 const std::string& property) {
  auto t0 = std::chrono::steady_clock::now();
  RawModel raw = parse_model(read_file(model_path));
  Prepared out;
  out.query = parse_property(property);
  out.pmc = preprocess(raw, out.query.kind);
  out.region = region_path.empty() ? Region::default_region(out.pmc.params)
                                   : parse_region(read_file(region_path), out.pmc.params);
  check_region_graph_preserving(out.pmc, out.region);
  out.preprocess_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Instantiation parse_point(const std::vector<std::string>& specs, const ParameterSetPtr& params) {
  std::vector<bool> seen(params->size(), false);
  Instantiation u(params->size(), 0.0);
  for (const auto& spec : specs) {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("point entries look like p=0.5, got '" + item + "'");
      std::string name = item.substr(0, eq);
      name.erase(remove_if(name.begin(), name.end(), ::isspace), name.end());
      int idx = params->index_of(name);
      if (idx < 0) throw std::runtime_error("unknown parameter '" + name + "'");
      u[idx] = std::stod(item.substr(eq + 1));
      seen[idx] = true;
    }
  }
  for (int i = 0; i < params->size(); ++i)
    if (!seen[i])
      throw std::runtime_error("point does not assign parameter '" + params->name(i) + "'");
  return u;
}

json instantiation_to_json(const Instantiation& u, const ParameterSetPtr& params) {
  json out = json::object();
  for (int i = 0; i < params->size(); ++i) out[params->name(i)] = u[i];
  return out;
}

int cmd_check(const std::string& model_path, const std::string& property) {
  RawModel raw;
  try {
    raw = parse_model(read_file(model_path));
  } catch (const std::exception& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  }
  PropertyQuery query;
  if (!property.empty()) query = parse_property(property);

  Model pmc;
  try {
    // Preprocess in reachability mode so that models with a reachable bad
    // state still report counts; the property decides whether to warn.
    pmc = preprocess(raw, QueryKind::reachability);
  } catch (const std::exception& e) {
    std::cerr << "invalid model: " << e.what() << "\n";
    return 1;
  }
  auto plural = [](int n, const char* noun) {
    return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
  };
  std::cout << plural(pmc.num_states(), "state") << ", "
            << plural(pmc.num_transitions(), "transition") << ", "
            << plural(pmc.params->size(), "parameter") << "\n";
  auto violations = model_violations(pmc);
  for (const auto& v : violations) std::cout << "violation: " << v << "\n";
  if (bad_reachable(pmc) &&
      (property.empty() || query.kind == QueryKind::expected_reward))
    std::cout << "warning: bad state reachable from the initial state; "
                 "expected-reward queries will fail\n";
  return violations.empty() ? 0 : 1;
}

int cmd_eval(const std::string& model_path, const std::string& region_path,
             const std::vector<std::string>& point, const std::string& property) {
  Prepared p = prepare(model_path, region_path, property);
  Instantiation u = parse_point(point, p.pmc.params);
  auto obj = make_pmc_objective(p.pmc, p.region, p.query);
  json out;
  out["value"] = obj->value(u);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_gradient(const std::string& model_path, const std::string& region_path,
                 const std::vector<std::string>& point, const std::string& property,
                 const std::string& params_arg, const std::string& via, double h) {
  Prepared p = prepare(model_path, region_path, property);
  Instantiation u = parse_point(point, p.pmc.params);
  auto obj = make_pmc_objective(p.pmc, p.region, p.query);

  std::vector<int> indices;
  if (params_arg.empty()) {
    for (int i = 0; i < p.pmc.params->size(); ++i) indices.push_back(i);
  } else {
    std::stringstream ss(params_arg);
    std::string name;
    while (std::getline(ss, name, ',')) {
      int idx = p.pmc.params->index_of(name);
      if (idx < 0) throw std::runtime_error("unknown parameter '" + name + "'");
      indices.push_back(idx);
    }
  }

  std::vector<double> grads;
  if (via == "eqsys") {
    grads = obj->gradient(u, indices);
  } else if (via == "derived") {
    for (int idx : indices) grads.push_back(obj->gradient_via_derived(idx, u));
  } else if (via == "fd") {
    for (int idx : indices) grads.push_back(finite_difference(*obj, u, idx, h, p.region));
  } else {
    throw std::runtime_error("--via must be eqsys, derived or fd");
  }
  json g = json::object();
  for (size_t k = 0; k < indices.size(); ++k) g[p.pmc.params->name(indices[k])] = grads[k];
  json out;
  out["gradient"] = g;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_derive(const std::string& model_path, const std::string& param,
               std::string output_base) {
  RawModel raw = parse_model(read_file(model_path));
  Model pmc = preprocess(raw, QueryKind::reachability);
  int idx = pmc.params->index_of(param);
  if (idx < 0) throw std::runtime_error("unknown parameter '" + param + "'");
  WeightedAutomaton wfa = derived_automaton(pmc, idx);
  if (output_base.empty()) {
    output_base = (std::filesystem::path(model_path).parent_path() /
                   (std::filesystem::path(model_path).stem().string() + "_d" + param))
                      .string();
  }
  std::ofstream(output_base + ".pmc") << serialize_model(wfa);
  std::ofstream(output_base + ".dot") << export_dot(wfa);
  std::cout << "wrote " << output_base << ".pmc and " << output_base << ".dot\n";
  return 0;
}

int cmd_solve(const std::string& model_path, const std::string& region_path,
              const std::string& property, DescentConfig cfg, const std::string& method_name,
              const std::string& restriction_name) {
  auto [method, sign] = method_from_string(method_name);
  cfg.method = method;
  cfg.sign = sign;
  cfg.restriction = restriction_from_string(restriction_name);

  Prepared p = prepare(model_path, region_path, property);
  cfg.comparator = p.query.cmp;
  cfg.bound = p.query.bound;
  auto obj = make_pmc_objective(p.pmc, p.region, p.query);
  RunResult run = feasibility_search(*obj, p.region, cfg);

  json out;
  out["status"] = run.status == RunResult::Status::feasible ? "feasible" : "exhausted";
  out["instantiation"] = instantiation_to_json(run.instantiation, p.pmc.params);
  out["value"] = run.value;
  out["iterations"] = run.iterations;
  out["restarts"] = run.restarts;
  out["value_solves"] = run.value_solves;
  out["gradient_solves"] = run.gradient_solves;
  out["best_value"] = run.best_value;
  out["easy_parameters"] = run.easy_parameters;
  out["mu_final"] = std::isnan(run.mu_final) ? json(nullptr) : json(run.mu_final);
  out["preprocess_seconds"] = p.preprocess_seconds;
  out["wall_seconds"] = run.wall_seconds;
  std::cout << out.dump(2) << "\n";
  return run.status == RunResult::Status::feasible ? 0 : 2;
}

int cmd_bench(const std::string& manifest_path, const std::string& output_override) {
  std::string base_dir = std::filesystem::path(manifest_path).parent_path().string();
  bench::Manifest manifest = bench::parse_manifest(read_file(manifest_path), base_dir);
  if (!output_override.empty()) manifest.output_dir = output_override;
  bench::SuiteResult result = bench::run_suite(manifest);
  auto files = bench::write_outputs(manifest, result);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
  int feasible = 0, exhausted = 0, errors = 0;
  for (const auto& r : result.rows) {
    if (r.rep == "mean") continue;
    if (r.status == "feasible")
      ++feasible;
    else if (r.status == "exhausted")
      ++exhausted;
    else
      ++errors;
  }
  std::cout << feasible << " feasible, " << exhausted << " exhausted, " << errors
            << " error rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feasibility synthesis for parametric Markov chains by gradient descent"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");

  std::string model_path, region_path, property, params_arg, via = "eqsys";
  std::vector<std::string> point;
  double h = 1e-6;

  auto* check = app.add_subcommand("check", "Parse and validate a model file");
  check->add_option("model", model_path, "model file (.pmc)")->required();
  check->add_option("--property", property, "query used for warnings");

  auto* eval = app.add_subcommand("eval", "Evaluate the queried measure at a point");
  eval->add_option("model", model_path)->required();
  eval->add_option("--region", region_path, "region file (.region)");
  eval->add_option("--point", point, "point, e.g. p=0.5,q=0.25")->required();
  eval->add_option("--property", property, "e.g. 'ER >= 2.9'")->required();

  auto* grad = app.add_subcommand("gradient", "Per-parameter partial derivatives at a point");
  grad->set_help_flag("--help", "print help");
  grad->add_option("model", model_path)->required();
  grad->add_option("--region", region_path);
  grad->add_option("--point", point)->required();
  grad->add_option("--property", property)->required();
  grad->add_option("--params", params_arg, "comma-separated subset (default: all)");
  grad->add_option("--via", via, "eqsys | derived | fd")->default_str("eqsys");
  grad->add_option("--h", h, "finite-difference step")->default_val(1e-6);

  std::string derive_param, derive_out;
  auto* derive = app.add_subcommand("derive", "Write the derived weighted automaton");
  derive->add_option("model", model_path)->required();
  derive->add_option("--param", derive_param, "parameter to derive by")->required();
  derive->add_option("-o,--output", derive_out, "output base path (writes .pmc and .dot)");

  DescentConfig cfg;
  std::string method_name = "momentum-sign", restriction_name = "projection";
  auto* solve = app.add_subcommand("solve", "Search the region for a feasible instantiation");
  solve->add_option("model", model_path)->required();
  solve->add_option("--region", region_path);
  solve->add_option("--property", property)->required();
  solve->add_option("--method", method_name,
                    "plain|momentum|nag[-sign] or rmsprop|adam|radam");
  solve->add_flag_callback("--sign", [&] { method_name += "-sign"; },
                           "shorthand for the -sign method variant");
  solve->add_option("--restriction", restriction_name, "projection | barrier | logistic");
  solve->add_option("--lr", cfg.learning_rate, "learning rate")->default_val(0.1);
  solve->add_option("--gamma", cfg.avg_decay, "average decay")->default_val(0.9);
  solve->add_option("--beta", cfg.sq_decay, "squared average decay")->default_val(0.999);
  solve->add_option("--batch-size", cfg.batch_size)->default_val(32);
  solve->add_option("--seed", cfg.seed)->default_val(0);
  solve->add_option("--max-iterations", cfg.max_iterations)->default_val(200000);
  solve->add_option("--time-limit", cfg.time_limit_seconds, "seconds; 0 = unlimited")
      ->default_val(0.0);
  solve->add_option("--mu0", cfg.mu0, "initial barrier weight")->default_val(0.1);
  solve->add_option("--step-threshold", cfg.step_threshold)->default_val(1e-6);
  solve->add_flag("--logistic-compat", cfg.logistic_compat,
                  "literal sigmoid gradient instead of the exact chain rule");

  std::string manifest_path, bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite from a manifest");
  bench_cmd->add_option("manifest", manifest_path)->required();
  bench_cmd->add_option("-o,--output", bench_out, "output directory override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(check)) return cmd_check(model_path, property);
    if (app.got_subcommand(eval)) return cmd_eval(model_path, region_path, point, property);
    if (app.got_subcommand(grad))
      return cmd_gradient(model_path, region_path, point, property, params_arg, via, h);
    if (app.got_subcommand(derive)) return cmd_derive(model_path, derive_param, derive_out);
    if (app.got_subcommand(solve))
      return cmd_solve(model_path, region_path, property, cfg, method_name, restriction_name);
    if (app.got_subcommand(bench_cmd)) return cmd_bench(manifest_path, bench_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
