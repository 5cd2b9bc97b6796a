// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "d2dspl/actor_critic.hpp"
#include "d2dspl/classifier.hpp"
#include "d2dspl/distill.hpp"
#include "d2dspl/harness.hpp"
#include "d2dspl/persistence.hpp"
#include "d2dspl/pursuit.hpp"
#include "oracles.hpp"

using namespace d2dspl;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kScoreTol = 1e-12;
constexpr double kGradTol = 1e-5;
constexpr double kSoftmaxSumTol = 1e-12;
constexpr double kTraceSumTol = 1e-12;
constexpr std::size_t kCartpoleEpisodes = 1000;
constexpr std::size_t kEvalRuns = 100;
constexpr std::size_t kTargetSteps = 100000;
constexpr std::size_t kTrials = 10;
constexpr std::size_t kMinWins = 7;
constexpr double kMaxTimingOverhead = 0.10;
constexpr std::size_t kPursuitEpisodes = 2000;
constexpr std::size_t kPursuitEvalRuns = 20;
constexpr double kMinPursuitGain = 0.10;
constexpr double kMinClassifierAccuracy = 0.90;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome mcgrew_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  using namespace pursuit;
  const McGrewParams p;
  bool ok = mcgrew_angular(0, 0) == 1.0 && mcgrew_angular(180, 180) == 0.0 &&
            mcgrew_angular(60, 30) == 0.75;
  ok = ok && mcgrew_range(380, p) == 1.0;
  const double r1280 = mcgrew_range(1280, p);
  ok = ok && std::abs(r1280 - std::exp(-1.0)) <= kScoreTol;

  SeedStream rng(derive_seed(1, "acceptance-mcgrew"));
  double worst_product = 0.0, worst_reward = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RelativeGeometry g{rng.uniform(0, 5000), rng.uniform(0, 180), rng.uniform(0, 180),
                             rng.uniform(-100, 100)};
    const double s = mcgrew_score(g, p);
    worst_product = std::max(worst_product, std::abs(s - mcgrew_angular(g.aa, g.ata) * mcgrew_range(g.range, p)));
    worst_reward = std::max(worst_reward, std::abs(reward(g, p) - (s - 0.5)));
  }
  ok = ok && worst_product <= kScoreTol && worst_reward <= kScoreTol;
  const double secs = seconds_since(t0);
  ok = ok && secs < 1.0;
  return {ok, fmt("R_M(1280)-1/e=%.3g, max|S_M-A_M*R_M|=%.3g, max|reward-(S_M-0.5)|=%.3g, %.3fs",
                  r1280 - std::exp(-1.0), worst_product, worst_reward, secs)};
}

Outcome figure_one() {
  const auto buffer = oracle::figure_one_buffer();
  const auto cons = distill::consolidate(buffer);
  const auto ds = distill::build_dataset(cons, ac::PolicyParams(4, 2));
  const bool sums = cons.m_sv[2] == 6.0 && cons.m_sv[3] == 4.0 && cons.m_sc[1] == 3;
  const bool row = !ds.inputs.empty() && ds.source_states.front() == 1 && ds.inputs.front()[0] == 2.0 &&
                   ds.inputs.front()[1] == 4.0 / 3.0;
  return {sums && row, fmt("cons_m_sv[1]=(%g,%g) cons_m_sc[1]=%llu input=(%.17g,%.17g)", cons.m_sv[2],
                           cons.m_sv[3], static_cast<unsigned long long>(cons.m_sc[1]),
                           ds.inputs.front()[0], ds.inputs.front()[1])};
}

Outcome distill_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  SeedStream rng(derive_seed(3, "acceptance-distill"));
  std::size_t mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n_states = 1 + rng.below(10);
    const std::size_t n_vars = 1 + rng.below(3);
    const std::size_t n_actions = 2 + rng.below(3);
    const auto buffer = oracle::random_buffer(rng, n_states, n_vars, 1 + rng.below(20));
    const auto theta = oracle::random_policy(rng, n_states, n_actions);
    const double fraction = std::vector<double>{0.05, 0.1, 0.25, 0.5, 1.0}[rng.below(5)];
    if (!(distill::distill(buffer, theta, fraction) == oracle::distill(buffer, theta, fraction))) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0, fmt("%zu/200 mismatches, %.3fs", mismatches, secs)};
}

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  SeedStream rng(derive_seed(4, "acceptance-gradient"));
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    nn::MlpModel m = nn::MlpModel::zeros(4, 5, 3);
    for (Eigen::Index k = 0; k < m.hidden_weights.size(); ++k) m.hidden_weights.data()[k] = rng.uniform(-1, 1);
    for (Eigen::Index k = 0; k < m.hidden_bias.size(); ++k) m.hidden_bias(k) = rng.uniform(-1, 1);
    for (Eigen::Index k = 0; k < m.output_weights.size(); ++k) m.output_weights.data()[k] = rng.uniform(-1, 1);
    for (Eigen::Index k = 0; k < m.output_bias.size(); ++k) m.output_bias(k) = rng.uniform(-1, 1);
    distill::TrainingDataset ds;
    ds.n_state_vars = 4;
    ds.n_actions = 3;
    for (std::size_t r = 0; r < 10; ++r) {
      ds.inputs.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
      ds.targets.push_back(rng.below(3));
      ds.source_states.push_back(r);
    }
    m.normalizer = nn::fit_normalizer(ds);
    worst = std::max(worst, nn::gradient_check(m, ds, 1e-5));
  }
  const double secs = seconds_since(t0);
  return {worst <= kGradTol && secs < 10.0, fmt("max relative error %.3g, %.3fs", worst, secs)};
}

Outcome actor_critic_suite() {
  SeedStream rng(derive_seed(5, "acceptance-ac"));
  // Softmax validity.
  double worst_sum = 0.0;
  bool positive = true;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.below(5);
    std::vector<double> row(n), p(n);
    for (auto& v : row) v = rng.uniform(-20, 20);
    ac::policy_probabilities(row, p);
    double total = 0.0;
    for (double v : p) {
      positive = positive && v > 0.0;
      total += v;
    }
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  // Actor-trace increments sum to zero.
  double worst_trace = 0.0;
  ac::Hyperparams no_decay;
  no_decay.lambda_theta = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.below(4);
    ac::PolicyParams theta(3, n);
    for (auto& v : theta.data()) v = rng.uniform(-3, 3);
    ac::ValueWeights w(3);
    ac::Traces z(3, n);
    z.discount = rng.uniform(0.05, 1.0);
    const DiscreteIndex s = rng.below(3);
    ac::td_update(theta, w, z, s, rng.below(n), rng.uniform(-1, 1), DiscreteIndex{rng.below(3)}, no_decay);
    double total = 0.0;
    for (std::size_t b = 0; b < n; ++b) total += z.z_theta[s * n + b];
    worst_trace = std::max(worst_trace, std::abs(total));
  }
  // One-step reduction.
  const ac::Hyperparams one_step{0.3, 0.2, 0.0, 0.0, 1.0};
  constexpr std::size_t kS = 6, kA = 3;
  ac::PolicyParams theta(kS, kA);
  ac::ValueWeights w(kS);
  ac::Traces traces(kS, kA);
  std::vector<double> ref_theta(kS * kA, 0.0), ref_w(kS, 0.0);
  std::size_t mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const DiscreteIndex s = rng.below(kS);
    const ActionId a = rng.below(kA);
    const double r = rng.uniform(-1, 1);
    const bool terminal = rng.uniform() < 0.2;
    const DiscreteIndex next = rng.below(kS);
    std::vector<double> p(kA);
    ac::policy_probabilities(std::span<const double>(ref_theta.data() + s * kA, kA), p);
    const double delta = r + (terminal ? 0.0 : ref_w[next]) - ref_w[s];
    ref_w[s] += (one_step.alpha_w * delta) * 1.0;
    for (std::size_t b = 0; b < kA; ++b) {
      ref_theta[s * kA + b] += (one_step.alpha_theta * delta) * ((b == a ? 1.0 : 0.0) - p[b]);
    }
    ac::td_update(theta, w, traces, s, a, r,
                  terminal ? std::nullopt : std::optional<DiscreteIndex>(next), one_step);
    if (w.w != ref_w || theta.data() != ref_theta) ++mismatches;
  }
  const bool ok = positive && worst_sum <= kSoftmaxSumTol && worst_trace <= kTraceSumTol && mismatches == 0;
  return {ok, fmt("max|sum p-1|=%.3g, max|sum trace increment|=%.3g, one-step mismatches %zu/100",
                  worst_sum, worst_trace, mismatches)};
}

struct CartpoleSuite {
  harness::SuiteResult result;
  harness::TrialConfig config;
};

harness::TrialConfig desk_scale_config(const fs::path& out) {
  harness::TrialConfig c;
  c.load_file(D2DSPL_CARTPOLE_CONFIG);
  c.env = "cartpole";
  c.n_episodes = kCartpoleEpisodes;
  c.eval_runs = kEvalRuns;
  c.target_steps = kTargetSteps;
  c.set("seed", "0");
  c.set("trials", std::to_string(kTrials));
  c.out_dir = out.string();
  return c;
}

Outcome table_one_ordering(const CartpoleSuite& s) {
  std::size_t wins = 0;
  std::string per;
  for (const auto& t : s.result.trials) {
    const double d2d = t.d2dspl.per_scenario[0].median;
    const double disc = t.discrete_n.per_scenario[0].median;
    if (d2d > disc) ++wins;
    per += fmt(" %g/%g", disc, d2d);
  }
  const bool ok = s.result.failures.empty() && wins >= kMinWins;
  return {ok, fmt("D2D-SPL median > Discrete-1000 median in %zu/%zu trials (need %zu); medians (Discrete/D2D):%s", wins,
                  s.result.trials.size(), kMinWins, per.c_str())};
}

Outcome table_two_analogue(const CartpoleSuite& s) {
  std::size_t d2d_trials = 0, disc_successes = 0;
  for (const auto& t : s.result.trials) {
    if (t.d2dspl.per_scenario[0].success_count > 0) ++d2d_trials;
    disc_successes += t.discrete_n.per_scenario[0].success_count;
  }
  const bool ok = s.result.failures.empty() && d2d_trials >= 1 && disc_successes == 0;
  return {ok, fmt("trials with a D2D-SPL success: %zu; Discrete-1000 successes over all trials: %zu",
                  d2d_trials, disc_successes)};
}

Outcome timing_analogue(const CartpoleSuite& s) {
  double rl = 0.0, extra = 0.0;
  for (const auto& t : s.result.trials) {
    rl += t.timing.reinforcement;
    extra += t.timing.distill + t.timing.classifier;
  }
  const double overhead = rl > 0 ? extra / rl : INFINITY;
  const bool ok = s.result.failures.empty() && overhead <= kMaxTimingOverhead;
  return {ok, fmt("distill+train %.3fs vs reinforcement %.3fs over %zu trials: overhead %.1f%% (limit %.0f%%)",
                  extra, rl, s.result.trials.size(), 100 * overhead, 100 * kMaxTimingOverhead)};
}

Outcome classifier_capacity(const CartpoleSuite& s) {
  double worst = 1.0;
  for (const auto& t : s.result.trials) worst = std::min(worst, t.classifier_accuracy);
  const bool ok = s.result.failures.empty() && !s.result.trials.empty() && worst >= kMinClassifierAccuracy;
  return {ok, fmt("lowest training-set accuracy %.4f over %zu datasets (need %.2f)", worst,
                  s.result.trials.size(), kMinClassifierAccuracy)};
}

Outcome determinism(const CartpoleSuite& s, const fs::path& rerun_dir) {
  auto config = s.config;
  config.out_dir = rerun_dir.string();
  harness::run_suite(config);
  const fs::path first(s.config.out_dir);
  std::size_t compared = 0, differing = 0, missing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(first)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), first);
    if (harness::is_timing_artifact(rel.filename().string())) continue;
    ++compared;
    if (!fs::exists(rerun_dir / rel)) {
      ++missing;
      continue;
    }
    if (io::read_file(entry.path().string()) != io::read_file((rerun_dir / rel).string())) ++differing;
  }
  const bool ok = compared > 0 && differing == 0 && missing == 0;
  return {ok, fmt("%zu artifacts compared, %zu differ, %zu missing", compared, differing, missing)};
}

Outcome pursuit_smoke() {
  harness::TrialConfig config;
  config.env = "pursuit";
  config.scheme = "reduced";
  std::size_t wins = 0;
  std::string per;
  for (std::uint64_t seed = 0; seed < kTrials; ++seed) {
    auto env = harness::make_environment(config);
    auto disc = std::shared_ptr<const Discretizer>(harness::make_discretizer(config));
    SeedStream rng(harness::training_seed(seed));
    ac::PhaseOptions options;
    options.keep_buffer = false;
    const auto phase = ac::run_reinforcement_phase(*env, *disc, config.hyper, kPursuitEpisodes, rng, options);
    const auto base = harness::evaluation_seed_base(seed);
    const auto greedy = harness::evaluate_controller(harness::greedy_controller(phase.theta, disc), *env,
                                                     kPursuitEvalRuns, base);
    const auto random = harness::evaluate_controller(
        harness::random_controller(env->spec().n_actions, derive_seed(seed, "random-controller")), *env,
        kPursuitEvalRuns, base);
    const double gain = greedy.mean - random.mean;
    if (gain >= kMinPursuitGain) ++wins;
    per += fmt(" %+.3f", gain);
  }
  return {wins >= kMinWins,
          fmt("greedy - random mean McGrew score >= %.2f in %zu/%zu seeds (need %zu); gains:%s", kMinPursuitGain,
              wins, kTrials, kMinWins, per.c_str())};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "d2dspl_acceptance";
  fs::remove_all(work);

  std::vector<std::pair<std::string, Outcome>> results;
  auto record = [&](const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    results.emplace_back(name, o);
  };

  record("1 McGrew score suite", mcgrew_suite);
  record("2 worked consolidation example", figure_one);
  record("3 distillation brute-force equivalence", distill_equivalence);
  record("4 gradient check", gradient_check);
  record("5 actor-critic unit suite", actor_critic_suite);

  CartpoleSuite cartpole;
  std::string suite_error;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    cartpole.config = desk_scale_config(work / "cartpole");
    cartpole.result = harness::run_suite(cartpole.config);
  } catch (const std::exception& e) {
    suite_error = e.what();
  }
  std::printf("  cart-pole desk-scale suite: %zu trials in %.1fs\n", cartpole.result.trials.size(),
              seconds_since(t0));
  auto with_suite = [&](auto check) {
    return [&, check]() -> Outcome {
      if (!suite_error.empty()) return {false, "suite failed: " + suite_error};
      return check(cartpole);
    };
  };
  record("6 cart-pole ordering, D2D-SPL vs Discrete-1000 medians", with_suite(table_one_ordering));
  record("7 cart-pole successes", with_suite(table_two_analogue));
  record("8 distill and training time overhead", with_suite(timing_analogue));
  record("9 pursuit learning smoke test", pursuit_smoke);
  record("10 suite determinism", with_suite([&](const CartpoleSuite& s) {
           return determinism(s, work / "cartpole_rerun");
         }));
  record("11 classifier capacity", with_suite(classifier_capacity));

  std::size_t failed = 0;
  for (const auto& [name, o] : results) failed += o.pass ? 0 : 1;
  std::printf("%zu/%zu criteria passed\n", results.size() - failed, results.size());
  fs::remove_all(work);
  return failed == 0 ? 0 : 1;
}
