#ifndef D2DSPL_ACTOR_CRITIC_HPP
#define D2DSPL_ACTOR_CRITIC_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "d2dspl/envcore.hpp"
#include "d2dspl/rng.hpp"

// Tabular actor-critic with accumulating eligibility traces over a
// discretized state space, recording per-episode state-variable aggregates
// for the distillation step.
namespace d2dspl::ac {

struct Hyperparams {
  double alpha_theta = 0.05;
  double alpha_w = 0.1;
  double lambda_theta = 0.8;
  double lambda_w = 0.8;
  double gamma = 0.99;

  void validate() const;
};

// Numerical preferences theta[s, a], row-major.
class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(std::size_t n_states, std::size_t n_actions)
      : n_states_(n_states), n_actions_(n_actions), theta_(n_states * n_actions, 0.0) {}

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }

  std::span<double> row(DiscreteIndex s) { return {theta_.data() + s * n_actions_, n_actions_}; }
  std::span<const double> row(DiscreteIndex s) const {
    return {theta_.data() + s * n_actions_, n_actions_};
  }
  double& at(DiscreteIndex s, ActionId a) { return theta_[s * n_actions_ + a]; }
  double at(DiscreteIndex s, ActionId a) const { return theta_[s * n_actions_ + a]; }

  // Highest-preference action; ties to the lowest index.
  ActionId best_action(DiscreteIndex s) const;

  std::vector<double>& data() { return theta_; }
  const std::vector<double>& data() const { return theta_; }

  bool operator==(const PolicyParams&) const = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> theta_;
};

struct ValueWeights {
  std::vector<double> w;

  ValueWeights() = default;
  explicit ValueWeights(std::size_t n_states) : w(n_states, 0.0) {}
  bool operator==(const ValueWeights&) const = default;
};

// Eligibility traces plus the running discount I. Only states touched in the
// current episode can have non-zero traces; `active` lists them so updates
// cost O(visited states) instead of O(N_ds).
class Traces {
 public:
  Traces(std::size_t n_states, std::size_t n_actions);

  void reset();
  void touch(DiscreteIndex s);

  std::size_t n_actions() const { return n_actions_; }
  const std::vector<DiscreteIndex>& active() const { return active_; }

  std::vector<double> z_theta;  // N_ds x N_a
  std::vector<double> z_w;      // N_ds
  double discount = 1.0;        // I

 private:
  std::size_t n_actions_;
  std::vector<DiscreteIndex> active_;
  std::vector<std::uint8_t> is_active_;
};

struct StepDiagnostics {
  double delta = 0.0;
  double reward = 0.0;
};

// Softmax of theta[s] with max subtraction.
std::vector<double> policy_probabilities(const PolicyParams& theta, DiscreteIndex s);
void policy_probabilities(std::span<const double> row, std::span<double> out);

ActionId sample_action(std::span<const double> probs, SeedStream& rng);

// One actor-critic step. `s_next` empty means the transition reached a
// terminal state (its value is taken as 0).
StepDiagnostics td_update(PolicyParams& theta, ValueWeights& w, Traces& traces, DiscreteIndex s,
                          ActionId a, double r, std::optional<DiscreteIndex> s_next,
                          const Hyperparams& hyper);

// Summed continuous state values and visit counts per discrete state for
// one episode, plus its total reward. Stored sparsely: only visited states
// carry an entry, sorted by state index.
class EpisodeRecord {
 public:
  EpisodeRecord() = default;
  EpisodeRecord(std::size_t n_states, std::size_t n_state_vars)
      : n_states_(n_states), n_state_vars_(n_state_vars) {}

  // From dense M_sv (N_ds x N_sv, row-major) and M_sc. Rows with zero
  // count must be all zero.
  static EpisodeRecord from_dense(double r_total, std::size_t n_state_vars,
                                  std::span<const double> m_sv,
                                  std::span<const std::uint64_t> m_sc);

  double r_total = 0.0;

  std::size_t n_states() const { return n_states_; }
  std::size_t n_state_vars() const { return n_state_vars_; }
  std::size_t n_visited() const { return states_.size(); }
  std::uint64_t steps() const;

  // Sparse view: entry k covers states()[k].
  const std::vector<DiscreteIndex>& states() const { return states_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::span<const double> sum(std::size_t entry) const {
    return {sums_.data() + entry * n_state_vars_, n_state_vars_};
  }

  std::uint64_t count_of(DiscreteIndex s) const;
  // Summed state values for s; zeros when s was not visited.
  std::vector<double> sum_of(DiscreteIndex s) const;

  std::vector<double> dense_m_sv() const;
  std::vector<std::uint64_t> dense_m_sc() const;

  // Appends an entry; states must arrive in increasing order.
  void append(DiscreteIndex s, std::uint64_t count, std::span<const double> sum);

  bool operator==(const EpisodeRecord&) const = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_state_vars_ = 0;
  std::vector<DiscreteIndex> states_;
  std::vector<std::uint64_t> counts_;
  std::vector<double> sums_;
};

using Buffer = std::vector<EpisodeRecord>;

// Dense scratch accumulator for the episode in progress.
class EpisodeAccumulator {
 public:
  EpisodeAccumulator(std::size_t n_states, std::size_t n_state_vars);

  void add(DiscreteIndex s, const ContinuousState& state, double reward);
  EpisodeRecord finish();

 private:
  std::size_t n_states_;
  std::size_t n_state_vars_;
  std::vector<double> m_sv_;
  std::vector<std::uint64_t> m_sc_;
  std::vector<DiscreteIndex> visited_;
  double r_total_ = 0.0;
};

struct Transition {
  std::size_t episode = 0;
  ContinuousState state;
  DiscreteIndex s = 0;
  ActionId action = 0;
  double reward = 0.0;
  bool terminal = false;
};

struct PhaseOptions {
  bool keep_buffer = true;
  // Called after every environment step; for logging and tests.
  std::function<void(const Transition&)> on_step;
};

struct PhaseResult {
  PolicyParams theta;
  ValueWeights w;
  Buffer buffer;
  std::vector<std::size_t> episode_lengths;
  std::vector<double> episode_rewards;
};

// Runs `n_episodes` of actor-critic. Starts from zero parameters, or from
// `start` when continuing a cloned policy.
PhaseResult run_reinforcement_phase(Environment& env, const Discretizer& discretizer,
                                    const Hyperparams& hyper, std::size_t n_episodes,
                                    SeedStream& rng, const PhaseOptions& options = {},
                                    const PhaseResult* start = nullptr);

}  // namespace d2dspl::ac

#endif  // D2DSPL_ACTOR_CRITIC_HPP
