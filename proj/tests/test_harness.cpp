#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "d2dspl/cartpole.hpp"
#include "d2dspl/harness.hpp"
#include "d2dspl/persistence.hpp"

using namespace d2dspl;
using namespace d2dspl::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("d2dspl_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

TrialConfig quick_cartpole(const fs::path& out) {
  TrialConfig c;
  c.env = "cartpole";
  c.n_episodes = 30;
  c.eval_runs = 5;
  c.train.epochs = 50;
  c.target_steps = 2000;
  c.out_dir = out.string();
  return c;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("mean and median") {
  CHECK(mean_of({3, 1, 2}) == 2.0);
  CHECK(median_of({3, 1, 2}) == 2.0);
  CHECK(median_of({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS_AS(median_of({}), UsageError);
  CHECK_THROWS_AS(mean_of({}), UsageError);
}

TEST_CASE("greedy controller") {
  auto disc = std::make_shared<cartpole::BoxDiscretizer>();
  ac::PolicyParams theta(162, 2);
  const ContinuousState centre{0, 0, 0, 0};
  const auto s = (*disc)(centre);
  theta.at(s, 0) = 3;
  theta.at(s, 1) = 1;
  CHECK(greedy_controller(theta, disc)(centre) == 0);
  CHECK(greedy_controller(theta, disc)({0.01, 0.02, 0.001, 0.01}) == 0);
  theta.at(s, 1) = 4;
  CHECK(greedy_controller(theta, disc)(centre) == 1);

  SeedStream rng(60);
  ac::PolicyParams shifted = theta;
  for (auto& v : theta.data()) v = rng.uniform(-1, 1);
  shifted = theta;
  for (auto& v : shifted.data()) v += 12.5;
  const auto a = greedy_controller(theta, disc);
  const auto b = greedy_controller(shifted, disc);
  for (int i = 0; i < 500; ++i) {
    const ContinuousState x{rng.uniform(-2.4, 2.4), rng.uniform(-2, 2), rng.uniform(-0.2, 0.2),
                            rng.uniform(-2, 2)};
    CHECK(a(x) == b(x));
  }
}

TEST_CASE("evaluation") {
  cartpole::Params params;
  params.target_steps = 40;
  cartpole::Environment env(params);
  SUBCASE("deterministic and scored by total reward") {
    const auto policy = random_controller(2, 8);
    const auto r1 = evaluate_controller(random_controller(2, 8), env, 20, 1000);
    const auto r2 = evaluate_controller(random_controller(2, 8), env, 20, 1000);
    CHECK(r1.scores == r2.scores);
    CHECK(r1.mean == r2.mean);
    CHECK(r1.median == r2.median);
    std::size_t successes = 0;
    for (std::size_t i = 0; i < r1.scores.size(); ++i) {
      CHECK(r1.scores[i] >= 1);
      CHECK(r1.scores[i] <= 40);
      CHECK(r1.scores[i] == static_cast<double>(r1.steps[i]));
      if (r1.successes[i]) {
        CHECK(r1.scores[i] == 40);
        ++successes;
      }
    }
    CHECK(successes == r1.success_count);
    CHECK(r1.mean == doctest::Approx(mean_of(r1.scores)));
    CHECK(r1.median == median_of(r1.scores));
  }
  SUBCASE("reaching the target counts as success") {
    params.target_steps = 3;
    cartpole::Environment short_env(params);
    const auto r = evaluate_controller([](const ContinuousState&) { return ActionId{0}; }, short_env, 4, 0);
    CHECK(r.success_count == 4);
    CHECK(r.mean == 3);
  }
  SUBCASE("zero runs") {
    CHECK_THROWS_AS(evaluate_controller(random_controller(2, 0), env, 0, 0), UsageError);
  }
}

TEST_CASE("seed derivation keeps evaluation apart from training") {
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto base = evaluation_seed_base(t);
    const auto train = training_seed(t);
    CHECK((train < base || train >= base + 100000));
    CHECK(base != evaluation_seed_base(t + 1));
  }
}

TEST_CASE("configuration") {
  TrialConfig c;
  CHECK_NOTHROW(c.validate());
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = TrialConfig{};
  c.eval_runs = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = TrialConfig{};
  c.env = "mountaincar";
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = TrialConfig{};
  CHECK_THROWS_AS(c.set("alpha", "0.1"), ValidationError);
  CHECK_THROWS_AS(c.set("episodes", "many"), ValidationError);
  CHECK_THROWS_AS(c.set("episodes", "-4"), ValidationError);
  CHECK_THROWS_AS(c.set("gamma", "0.9x"), ValidationError);

  c.set("seed", "5");
  c.set("trials", "3");
  CHECK(c.seeds == std::vector<std::uint64_t>{5, 6, 7});
  c.set("seeds", "1, 4, 9");
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 4, 9});
  CHECK(c.effective_hidden_dim() == 12);
  c.env = "pursuit";
  CHECK(c.effective_hidden_dim() == 50);

  SUBCASE("manifest text reloads to the same configuration") {
    c.set("alpha_theta", "0.25");
    c.set("scheme", "reduced");
    c.set("max_steps", "300");
    const auto dir = scratch_dir("config");
    fs::create_directories(dir);
    const auto path = (dir / "c.txt").string();
    io::write_file(path, c.to_text());
    TrialConfig back;
    back.load_file(path);
    CHECK(back.to_text() == c.to_text());
    CHECK(back.hyper.alpha_theta == 0.25);
    CHECK(back.pursuit.kinematics.max_steps == 300);
    io::write_file(path, "episodes 10\n");
    CHECK_THROWS_AS(back.load_file(path), ValidationError);
    CHECK_THROWS_AS(back.load_file((dir / "absent.txt").string()), ValidationError);
    fs::remove_all(dir);
  }
}

TEST_CASE("cart-pole trial and suite artifacts") {
  const auto dir = scratch_dir("suite");
  auto config = quick_cartpole(dir);
  config.set("seed", "0");
  config.set("trials", "10");
  const auto suite = run_suite(config);
  REQUIRE(suite.failures.empty());
  REQUIRE(suite.trials.size() == 10);

  const auto summary = read_csv(dir / "summary.csv");
  REQUIRE(summary.size() == 13);
  CHECK(summary[0] == std::vector<std::string>{"trial", "discrete_30", "discrete_60", "d2dspl"});
  CHECK(summary[11][0] == "Mean");
  CHECK(summary[12][0] == "Median");
  CHECK(line_count(dir / "successes.csv") == 11);
  CHECK(line_count(dir / "timing.csv") == 11);
  CHECK(fs::exists(dir / "manifest.txt"));
  CHECK_FALSE(fs::exists(dir / "failures.csv"));

  for (const auto& t : suite.trials) {
    const fs::path td = t.trial_dir;
    for (const char* f : {"policy_discrete_n.json", "policy_discrete_2n.json", "buffer_summary.csv",
                          "learning_curve.csv", "dataset.csv", "model.json", "report.csv",
                          "timing.csv", "scores_discrete_30.csv", "scores_discrete_60.csv",
                          "scores_d2dspl.csv"}) {
      CHECK_MESSAGE(fs::exists(td / f), f);
    }
    CHECK_FALSE(fs::exists(td / "buffer.txt"));
    CHECK(line_count(td / "buffer_summary.csv") == 31);
    for (const auto* m : {&t.discrete_n, &t.discrete_2n, &t.d2dspl}) {
      REQUIRE(m->per_scenario.size() == 1);
      const auto& r = m->per_scenario[0];
      CHECK(r.scores.size() == 5);
      CHECK(r.mean == doctest::Approx(mean_of(r.scores)));
      CHECK(r.median == median_of(r.scores));
      for (double s : r.scores) {
        CHECK(s >= 1);
        CHECK(s <= 2000);
      }
    }
    CHECK(t.dataset_rows <= 162);
    CHECK(t.dataset_rows == t.dataset.size());

    // Per-run scores on disk reproduce the in-memory report.
    const auto rows = read_csv(td / "scores_d2dspl.csv");
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::stod(rows[i + 1][2]) == t.d2dspl.per_scenario[0].scores[i]);
  }
  fs::remove_all(dir);
}

TEST_CASE("suites are reproducible apart from timing") {
  const auto a = scratch_dir("det_a");
  const auto b = scratch_dir("det_b");
  auto config = quick_cartpole(a);
  config.set("seeds", "3,4");
  run_suite(config);
  config.out_dir = b.string();
  config.threads = 2;
  run_suite(config);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    if (is_timing_artifact(rel.filename().string())) continue;
    REQUIRE(fs::exists(b / rel));
    CHECK_MESSAGE(io::read_file(entry.path().string()) == io::read_file((b / rel).string()), rel.string());
    ++compared;
  }
  CHECK(compared > 20);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("pursuit suite writes one table per scenario") {
  const auto dir = scratch_dir("pursuit");
  TrialConfig config;
  config.env = "pursuit";
  config.scheme = "reduced";
  config.n_episodes = 4;
  config.eval_runs = 2;
  config.train.epochs = 20;
  config.pursuit.kinematics.max_steps = 60;
  config.out_dir = dir.string();
  config.set("seeds", "1,2");
  const auto suite = run_suite(config);
  REQUIRE(suite.trials.size() == 2);
  const auto scenarios = evaluation_scenarios(config);
  REQUIRE(scenarios.size() == 4);
  for (const auto& s : scenarios) {
    CHECK_MESSAGE(line_count(dir / ("summary_" + s.name + ".csv")) == 5, s.name);
  }
  CHECK_FALSE(fs::exists(dir / "successes.csv"));
  for (const auto& t : suite.trials) {
    for (const auto& r : t.d2dspl.per_scenario) {
      for (double v : r.scores) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("diverging trials are recorded and the suite continues") {
  const auto dir = scratch_dir("failure");
  auto config = quick_cartpole(dir);
  config.hyper.alpha_w = 1e308;
  config.hyper.lambda_w = 1.0;
  config.hyper.gamma = 1.0;
  config.set("seeds", "0,1");
  const auto suite = run_suite(config);
  CHECK(suite.trials.empty());
  REQUIRE(suite.failures.size() == 2);
  CHECK(fs::exists(dir / "failures.csv"));
  CHECK(fs::exists(dir / "trial_0" / "FAILED"));
  fs::remove_all(dir);
}
