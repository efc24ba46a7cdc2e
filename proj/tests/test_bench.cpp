#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pmcsynth/bench.hpp"
#include "support.hpp"

using namespace pmcsynth;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  TempDir() {
    path = fs::temp_directory_path() /
           ("pmcsynth_bench_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path path;
  static inline int counter = 0;
};

std::string write_chain_fixture(const fs::path& dir) {
  fs::path model = dir / "chain.pmc";
  std::ofstream(model) << chain_model_text();
  std::ofstream(dir / "chain.region") << "p in [0.1, 0.9]\n";
  return model.string();
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("manifest parsing") {
  std::string text = R"(
# models and the method matrix
model chain = chain.pmc ; ER >= 2.9 ; chain.region
model coin = coin.pmc ; P >= 0.3
methods = momentum-sign, plain, adam
restrictions = projection, barrier
seeds = 1, 2
repetitions = 3
lr = 0.05
max-iterations = 1000
baseline = momentum-sign+projection
output = out
)";
  bench::Manifest m = bench::parse_manifest(text, "/base");
  CHECK(m.models.size() == 2);
  CHECK(m.models[0].id == "chain");
  CHECK(m.models[0].model_path == "/base/chain.pmc");
  CHECK(m.models[0].region_path == "/base/chain.region");
  CHECK(m.models[1].region_path.empty());
  CHECK(m.methods.size() == 3);
  CHECK(m.methods[0].second);  // momentum-sign carries the sign flag
  CHECK(m.restrictions.size() == 2);
  CHECK(m.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(m.repetitions == 3);
  CHECK(m.base.learning_rate == doctest::Approx(0.05));
  CHECK(m.base.max_iterations == 1000);
  CHECK(m.output_dir == "/base/out");

  CHECK_THROWS(bench::parse_manifest("methods = momentum\n", ""));  // no models
  CHECK_THROWS(bench::parse_manifest("model x = a.pmc\n", ""));     // missing property
  CHECK_THROWS(bench::parse_manifest("bogus = 1\nmodel x = a.pmc ; ER >= 1\n", ""));
}

TEST_CASE("suite produces one row per cell and repetition plus means") {
  TempDir tmp;
  write_chain_fixture(tmp.path);
  std::string manifest_text = R"(
model chain = chain.pmc ; ER >= 2.9 ; chain.region
model chain2 = chain.pmc ; ER >= 2.5 ; chain.region
methods = momentum-sign, plain, adam
restrictions = projection
seeds = 1
repetitions = 5
max-iterations = 5000
output = out
)";
  bench::Manifest m = bench::parse_manifest(manifest_text, tmp.path.string());
  bench::SuiteResult result = bench::run_suite(m);
  // 2 models x 3 methods x 1 restriction x 1 seed x 5 reps = 30 rows + 6 means.
  CHECK(result.rows.size() == 36);
  int means = 0;
  for (const auto& r : result.rows)
    if (r.rep == "mean") ++means;
  CHECK(means == 6);

  // Every feasible row re-verified clean.
  for (const auto& r : result.rows) {
    INFO(r.model, " ", r.method, " rep=", r.rep, " ", r.message);
    CHECK(r.status == "feasible");
    if (r.rep != "mean") CHECK(r.verified == "yes");
  }

  // Deterministic across repetitions in the non-timing fields.
  const bench::BenchRecord* first = nullptr;
  for (const auto& r : result.rows) {
    if (r.model != "chain" || r.method != "momentum-sign" || r.rep == "mean") continue;
    if (!first) {
      first = &r;
      continue;
    }
    CHECK(r.value == first->value);
    CHECK(r.iterations == first->iterations);
    CHECK(r.restarts == first->restarts);
    CHECK(r.gradient_solves == first->gradient_solves);
  }

  // CSV has the fixed header and the same number of lines.
  std::string csv = bench::to_csv(result);
  CHECK(csv.rfind("model,method,restriction,lr,seed,rep,status,value,iterations,restarts,"
                  "gradient_solves,mu_final,verified,preprocess_seconds,wall_seconds,message\n",
                  0) == 0);

  auto files = bench::write_outputs(m, result);
  CHECK(files.size() == 3);  // results.csv + 2 non-baseline scatter files
  for (const auto& f : files) CHECK(fs::exists(f));
}

TEST_CASE("momentum with zero decay equals plain cell for cell counts") {
  TempDir tmp;
  write_chain_fixture(tmp.path);
  std::string manifest_text = R"(
model chain = chain.pmc ; ER >= 2.9 ; chain.region
methods = momentum, plain
restrictions = projection
seeds = 1
repetitions = 1
gamma = 0
max-iterations = 5000
)";
  bench::Manifest m = bench::parse_manifest(manifest_text, tmp.path.string());
  bench::SuiteResult result = bench::run_suite(m);
  long iters[2] = {-1, -2};
  for (const auto& r : result.rows) {
    if (r.rep == "mean") continue;
    iters[r.method == "plain" ? 0 : 1] = r.iterations;
  }
  CHECK(iters[0] == iters[1]);
}

TEST_CASE("barrier cells record the final mu and failures do not abort the suite") {
  TempDir tmp;
  write_chain_fixture(tmp.path);
  std::string manifest_text = R"(
model chain = chain.pmc ; ER >= 2.9 ; chain.region
model missing = nowhere.pmc ; ER >= 1
methods = plain
restrictions = barrier
seeds = 1
repetitions = 1
lr = 0.01
max-iterations = 60000
)";
  bench::Manifest m = bench::parse_manifest(manifest_text, tmp.path.string());
  bench::SuiteResult result = bench::run_suite(m);
  bool saw_mu = false, saw_error = false;
  for (const auto& r : result.rows) {
    if (r.rep == "mean") continue;
    if (r.model == "chain") {
      CHECK(!std::isnan(r.mu_final));
      saw_mu = true;
    }
    if (r.model == "missing") {
      CHECK(r.status == "error");
      CHECK(!r.message.empty());
      saw_error = true;
    }
  }
  CHECK(saw_mu);
  CHECK(saw_error);
}

}  // TEST_SUITE
