#include "pmcsynth/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace pmcsynth::bench {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::pair<std::pair<Method, bool>, Restriction> parse_cell_name(const std::string& name) {
  auto parts = split(name, '+');
  if (parts.size() != 2)
    throw std::invalid_argument("expected '<method>+<restriction>', got '" + name + "'");
  return {method_from_string(parts[0]), restriction_from_string(parts[1])};
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

struct PreparedModel {
  Model pmc;
  Region region;
  PropertyQuery query;
  double preprocess_seconds = 0.0;
};

PreparedModel prepare(const ModelEntry& entry) {
  auto t0 = std::chrono::steady_clock::now();
  RawModel raw = parse_model(read_file(entry.model_path));
  PreparedModel out;
  out.query = parse_property(entry.property);
  out.pmc = preprocess(raw, out.query.kind);
  out.region = entry.region_path.empty()
                   ? Region::default_region(out.pmc.params)
                   : parse_region(read_file(entry.region_path), out.pmc.params);
  check_region_graph_preserving(out.pmc, out.region);
  out.preprocess_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Independent re-check of a feasible result: fresh objective, direct solver.
bool verify_feasible(const ModelEntry& entry, const Instantiation& u) {
  PreparedModel fresh = prepare(entry);
  if (!fresh.region.contains(u)) return false;
  linsolve::SolveOptions opts;
  opts.backend = linsolve::Backend::direct;
  auto obj = make_pmc_objective(fresh.pmc, fresh.region, fresh.query, opts);
  double v = obj->value(u);
  return comparator_satisfied_tol(fresh.query.cmp, v, fresh.query.bound, 1e-8);
}

}  // namespace

Manifest parse_manifest(const std::string& text, const std::string& base_dir) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto fail = [&](const std::string& msg) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": " + msg);
    };

    if (line.rfind("model ", 0) == 0) {
      auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected 'model <id> = <path> ; <property> [; <region>]'");
      ModelEntry entry;
      entry.id = trim(line.substr(6, eq - 6));
      auto parts = split(line.substr(eq + 1), ';');
      if (entry.id.empty() || parts.size() < 2 || parts.size() > 3)
        fail("expected 'model <id> = <path> ; <property> [; <region>]'");
      entry.model_path = resolve(base_dir, parts[0]);
      entry.property = parts[1];
      if (parts.size() == 3 && !parts[2].empty()) entry.region_path = resolve(base_dir, parts[2]);
      m.models.push_back(std::move(entry));
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "methods") {
        m.methods.clear();
        for (const auto& name : split(value, ',')) m.methods.push_back(method_from_string(name));
      } else if (key == "restrictions") {
        m.restrictions.clear();
        for (const auto& name : split(value, ','))
          m.restrictions.push_back(restriction_from_string(name));
      } else if (key == "seeds") {
        m.seeds.clear();
        for (const auto& s : split(value, ',')) m.seeds.push_back(std::stoull(s));
      } else if (key == "repetitions") {
        m.repetitions = std::stoi(value);
      } else if (key == "lr") {
        m.base.learning_rate = std::stod(value);
      } else if (key == "gamma") {
        m.base.avg_decay = std::stod(value);
      } else if (key == "beta") {
        m.base.sq_decay = std::stod(value);
      } else if (key == "batch-size") {
        m.base.batch_size = std::stoi(value);
      } else if (key == "max-iterations") {
        m.base.max_iterations = std::stol(value);
      } else if (key == "time-limit") {
        m.base.time_limit_seconds = std::stod(value);
      } else if (key == "mu0") {
        m.base.mu0 = std::stod(value);
      } else if (key == "baseline") {
        auto cell = parse_cell_name(value);
        m.baseline_method = cell.first;
        m.baseline_restriction = cell.second;
      } else if (key == "output") {
        m.output_dir = resolve(base_dir, value);
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  if (m.models.empty()) throw std::runtime_error("manifest lists no models");
  if (m.methods.empty()) m.methods.push_back({Method::momentum, true});
  if (m.restrictions.empty()) m.restrictions.push_back(Restriction::projection);
  if (m.repetitions < 1) throw std::runtime_error("repetitions must be at least 1");
  return m;
}

SuiteResult run_suite(const Manifest& manifest) {
  SuiteResult result;
  std::vector<BenchRecord> means;
  for (const auto& entry : manifest.models) {
    for (const auto& [method, sign] : manifest.methods) {
      for (Restriction restriction : manifest.restrictions) {
        for (std::uint64_t seed : manifest.seeds) {
          BenchRecord proto;
          proto.model = entry.id;
          proto.method = method_to_string(method, sign);
          proto.restriction = restriction_to_string(restriction);
          proto.lr = manifest.base.learning_rate;
          proto.seed = seed;

          double wall_sum = 0.0;
          BenchRecord first;
          bool have_first = false;
          for (int rep = 0; rep < manifest.repetitions; ++rep) {
            BenchRecord rec = proto;
            rec.rep = std::to_string(rep);
            try {
              PreparedModel prepared = prepare(entry);
              rec.preprocess_seconds = prepared.preprocess_seconds;
              auto obj =
                  make_pmc_objective(prepared.pmc, prepared.region, prepared.query);
              DescentConfig cfg = manifest.base;
              cfg.method = method;
              cfg.sign = sign;
              cfg.restriction = restriction;
              cfg.seed = seed;
              cfg.comparator = prepared.query.cmp;
              cfg.bound = prepared.query.bound;
              RunResult run = feasibility_search(*obj, prepared.region, cfg);
              rec.status = run.status == RunResult::Status::feasible ? "feasible" : "exhausted";
              rec.value = run.value;
              rec.iterations = run.iterations;
              rec.restarts = run.restarts;
              rec.gradient_solves = run.gradient_solves;
              rec.mu_final = run.mu_final;
              rec.wall_seconds = run.wall_seconds;
              if (run.status == RunResult::Status::feasible)
                rec.verified = verify_feasible(entry, run.instantiation) ? "yes" : "no";
            } catch (const std::exception& e) {
              rec.status = "error";
              rec.message = e.what();
            }
            wall_sum += rec.wall_seconds;
            if (!have_first) {
              first = rec;
              have_first = true;
            }
            result.rows.push_back(std::move(rec));
          }
          BenchRecord mean = first;
          mean.rep = "mean";
          mean.wall_seconds = wall_sum / manifest.repetitions;
          means.push_back(std::move(mean));
        }
      }
    }
  }
  result.rows.insert(result.rows.end(), means.begin(), means.end());
  return result;
}

std::string to_csv(const SuiteResult& result) {
  std::ostringstream out;
  out << "model,method,restriction,lr,seed,rep,status,value,iterations,restarts,"
         "gradient_solves,mu_final,verified,preprocess_seconds,wall_seconds,message\n";
  for (const auto& r : result.rows) {
    out << r.model << ',' << r.method << ',' << r.restriction << ',' << format_double(r.lr) << ','
        << r.seed << ',' << r.rep << ',' << r.status << ','
        << (r.status == "error" ? "" : format_double(r.value)) << ',' << r.iterations << ','
        << r.restarts << ',' << r.gradient_solves << ',' << format_double(r.mu_final) << ','
        << r.verified << ',' << format_double(r.preprocess_seconds) << ','
        << format_double(r.wall_seconds) << ',' << r.message << '\n';
  }
  return out.str();
}

std::vector<std::string> write_outputs(const Manifest& manifest, const SuiteResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(manifest.output_dir);
  std::vector<std::string> written;

  std::string csv_path = (fs::path(manifest.output_dir) / "results.csv").string();
  std::ofstream(csv_path) << to_csv(result);
  written.push_back(csv_path);

  // Mean wall times per (model, seed) for each cell, for scatter pairing.
  std::string baseline =
      method_to_string(manifest.baseline_method.first, manifest.baseline_method.second) + "+" +
      restriction_to_string(manifest.baseline_restriction);
  std::map<std::string, std::map<std::string, const BenchRecord*>> by_cell;
  for (const auto& r : result.rows) {
    if (r.rep != "mean") continue;
    by_cell[r.method + "+" + r.restriction][r.model + ":" + std::to_string(r.seed)] = &r;
  }
  auto base_it = by_cell.find(baseline);
  for (const auto& [cell, rows] : by_cell) {
    if (cell == baseline) continue;
    std::string name = cell;
    std::replace(name.begin(), name.end(), '+', '_');
    std::string path = (fs::path(manifest.output_dir) / ("scatter_" + name + ".csv")).string();
    std::ofstream out(path);
    out << "model,seed,baseline_seconds,candidate_seconds,baseline_status,candidate_status\n";
    for (const auto& [key, rec] : rows) {
      const BenchRecord* base = nullptr;
      if (base_it != by_cell.end()) {
        auto it = base_it->second.find(key);
        if (it != base_it->second.end()) base = it->second;
      }
      out << rec->model << ',' << rec->seed << ','
          << (base ? format_double(base->wall_seconds) : "") << ','
          << format_double(rec->wall_seconds) << ',' << (base ? base->status : "") << ','
          << rec->status << '\n';
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace pmcsynth::bench
