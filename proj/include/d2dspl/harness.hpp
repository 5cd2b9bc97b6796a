#ifndef D2DSPL_HARNESS_HPP
#define D2DSPL_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "d2dspl/actor_critic.hpp"
#include "d2dspl/classifier.hpp"
#include "d2dspl/distill.hpp"
#include "d2dspl/envcore.hpp"
#include "d2dspl/pursuit.hpp"

namespace d2dspl::harness {

enum class EvalPolicy { kGreedy, kSample };

struct TrialConfig {
  std::string env = "cartpole";
  std::size_t n_episodes = 1000;
  ac::Hyperparams hyper;
  double distill_fraction = distill::kDefaultFraction;
  // 0 picks the per-environment default (12 cart-pole, 50 pursuit).
  std::size_t hidden_dim = 0;
  nn::TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::size_t eval_runs = 100;
  EvalPolicy eval_policy = EvalPolicy::kGreedy;
  std::string out_dir = "d2dspl_out";
  std::size_t threads = 1;
  bool save_buffer = false;

  // cart-pole
  std::size_t target_steps = 100000;

  // pursuit
  std::string scheme = "default";  // default | reduced
  pursuit::Config pursuit;
  // Empty means the four bundled scenarios.
  std::vector<std::string> scenario_files;

  void validate() const;

  // Applies one `key = value` setting. Throws ValidationError on unknown
  // keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  // Flat key-value text; '#' starts a comment.
  void load_file(const std::string& path);
  // The full configuration in the same key-value form; used as run manifest.
  std::string to_text() const;

  std::size_t effective_hidden_dim() const;
};

std::unique_ptr<Environment> make_environment(const TrialConfig& config,
                                              const std::optional<pursuit::OpponentScript>& scenario =
                                                  std::nullopt);
std::unique_ptr<Discretizer> make_discretizer(const TrialConfig& config);
pursuit::DiscretizationScheme make_scheme(const TrialConfig& config);

struct Scenario {
  std::string name;
  std::optional<pursuit::OpponentScript> script;
};
// Cart-pole: one unnamed scenario. Pursuit: the configured or bundled scripts.
std::vector<Scenario> evaluation_scenarios(const TrialConfig& config);

struct PhaseTiming {
  double reinforcement = 0.0;
  double continuation = 0.0;
  double distill = 0.0;
  double classifier = 0.0;
  double evaluation = 0.0;
};

struct EvalReport {
  std::vector<double> scores;
  std::vector<std::size_t> steps;
  std::vector<bool> successes;
  double mean = 0.0;
  double median = 0.0;
  std::size_t success_count = 0;
  double seconds = 0.0;
};

double mean_of(const std::vector<double>& v);
double median_of(std::vector<double> v);

// argmax theta[discretize(state)], ties to the lowest action.
Controller greedy_controller(const ac::PolicyParams& theta,
                             std::shared_ptr<const Discretizer> discretizer);
// Samples from the softmax policy with its own seeded stream.
Controller sampling_controller(const ac::PolicyParams& theta,
                               std::shared_ptr<const Discretizer> discretizer, std::uint64_t seed);
Controller model_controller(std::shared_ptr<const nn::MlpModel> model);
Controller random_controller(std::size_t n_actions, std::uint64_t seed);

// Run i resets with SeedStream(seed_base + i). Cart-pole scores are total
// reward; pursuit scores are the mean McGrew score per step.
EvalReport evaluate_controller(const Controller& controller, Environment& env, std::size_t n_runs,
                               std::uint64_t seed_base);

struct MethodReports {
  std::string method;
  // One report per evaluation scenario, in evaluation_scenarios() order.
  std::vector<EvalReport> per_scenario;
};

struct TrialResult {
  std::uint64_t trial_seed = 0;
  std::vector<std::string> scenario_names;
  MethodReports discrete_n;
  MethodReports discrete_2n;
  MethodReports d2dspl;
  PhaseTiming timing;
  std::size_t dataset_rows = 0;
  double classifier_accuracy = 0.0;
  double classifier_loss = 0.0;
  distill::TrainingDataset dataset;
  std::string trial_dir;
};

std::string method_name_discrete(std::size_t episodes);

// Seeds derived from the trial seed for each purpose. Evaluation seeds
// never overlap the training stream's seed.
std::uint64_t training_seed(std::uint64_t trial_seed);
std::uint64_t evaluation_seed_base(std::uint64_t trial_seed);

// Discrete-n, its continuation to 2n, and the distilled network, all scored
// on the same evaluation seeds. Writes artifacts under
// <out_dir>/trial_<seed>/; on failure leaves a FAILED marker and rethrows.
TrialResult run_d2dspl_trial(const TrialConfig& config, std::uint64_t trial_seed);

struct SuiteResult {
  std::vector<TrialResult> trials;
  std::vector<std::pair<std::uint64_t, std::string>> failures;
};

// All seeds, then summary tables under out_dir.
SuiteResult run_suite(const TrialConfig& config);

// Files written by the harness that hold wall-clock values.
bool is_timing_artifact(const std::string& filename);

}  // namespace d2dspl::harness

#endif  // D2DSPL_HARNESS_HPP
