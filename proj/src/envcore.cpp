#include "d2dspl/envcore.hpp"

#include <cmath>

namespace d2dspl {

void EnvironmentSpec::validate() const {
  if (n_state_vars == 0 || n_actions == 0 || n_discrete_states == 0 || max_steps == 0) {
    throw ValidationError("environment spec '" + name + "': all counts must be positive");
  }
}

ContinuousState Environment::reset(SeedStream& rng) {
  steps_ = 0;
  terminal_ = false;
  ContinuousState s = do_reset(rng);
  check_state(s, spec().n_state_vars);
  return s;
}

StepOutcome Environment::step(ActionId action) {
  if (terminal_) throw UsageError(spec().name + ": step() on a terminal episode; call reset()");
  if (action >= spec().n_actions) {
    throw UsageError(spec().name + ": action " + std::to_string(action) + " out of range");
  }
  StepOutcome out = do_step(action, steps_);
  ++steps_;
  if (steps_ >= spec().max_steps) out.terminal = true;
  terminal_ = out.terminal;
  if (!std::isfinite(out.reward)) throw Fault(spec().name + ": non-finite reward");
  check_state(out.next_state, spec().n_state_vars);
  return out;
}

void check_state(const ContinuousState& state, std::size_t n_state_vars) {
  if (state.size() != n_state_vars) {
    throw Fault("state has " + std::to_string(state.size()) + " variables, expected " +
                std::to_string(n_state_vars));
  }
  for (double v : state) {
    if (!std::isfinite(v)) throw Fault("state contains a non-finite value");
  }
}

std::size_t argmax(const double* values, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace d2dspl
