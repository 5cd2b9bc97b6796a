#ifndef D2DSPL_ENVCORE_HPP
#define D2DSPL_ENVCORE_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "d2dspl/rng.hpp"

namespace d2dspl {

// Caller broke a precondition (bad action, stepping a finished episode, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A configuration or input file failed validation.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical or runtime failure during a computation.
class Fault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ContinuousState = std::vector<double>;
using DiscreteIndex = std::size_t;
using ActionId = std::size_t;

struct StepOutcome {
  ContinuousState next_state;
  double reward = 0.0;
  bool terminal = false;
  // Per-step performance measure used for evaluation scoring. Cart-pole
  // reports the reward itself, pursuit the un-offset McGrew score.
  double metric = 0.0;
};

struct EnvironmentSpec {
  std::string name;
  std::size_t n_state_vars = 0;
  std::size_t n_actions = 0;
  std::size_t n_discrete_states = 0;
  std::size_t max_steps = 0;

  void validate() const;
};

// How a run's per-step metrics collapse into one evaluation score.
enum class ScoreRule { kTotal, kMean };

class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvironmentSpec& spec() const = 0;
  virtual ScoreRule score_rule() const = 0;

  // Starts a new episode. Identical streams give identical first states.
  ContinuousState reset(SeedStream& rng);

  // Advances one timestep. Throws UsageError on a finished episode or an
  // out-of-range action.
  StepOutcome step(ActionId action);

  bool terminal() const { return terminal_; }
  std::size_t steps_taken() const { return steps_; }

  // Whether the finished episode counts as a success for evaluation tallies.
  virtual bool succeeded() const { return false; }

  virtual std::unique_ptr<Environment> clone() const = 0;

 protected:
  virtual ContinuousState do_reset(SeedStream& rng) = 0;
  // `step_index` is the zero-based index of the step being taken.
  virtual StepOutcome do_step(ActionId action, std::size_t step_index) = 0;

 private:
  std::size_t steps_ = 0;
  bool terminal_ = true;
};

class Discretizer {
 public:
  virtual ~Discretizer() = default;
  virtual std::size_t size() const = 0;
  virtual DiscreteIndex operator()(const ContinuousState& state) const = 0;
};

// Anything that maps a continuous state to an action: tabular policies,
// the distilled network, random baselines.
using Controller = std::function<ActionId(const ContinuousState&)>;

// Throws Fault if any element is non-finite or the size is wrong.
void check_state(const ContinuousState& state, std::size_t n_state_vars);

// Index of the largest element; ties go to the lowest index.
std::size_t argmax(const double* values, std::size_t n);

}  // namespace d2dspl

#endif  // D2DSPL_ENVCORE_HPP
