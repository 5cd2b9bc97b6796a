#ifndef D2DSPL_CARTPOLE_HPP
#define D2DSPL_CARTPOLE_HPP

#include <cstddef>
#include <memory>

#include "d2dspl/envcore.hpp"

namespace d2dspl::cartpole {

inline constexpr std::size_t kNumStateVars = 4;
inline constexpr std::size_t kNumActions = 2;
inline constexpr std::size_t kNumBoxes = 162;

inline constexpr ActionId kPushLeft = 0;
inline constexpr ActionId kPushRight = 1;

struct State {
  double x = 0.0;          // m
  double x_dot = 0.0;      // m/s
  double theta = 0.0;      // rad
  double theta_dot = 0.0;  // rad/s

  ContinuousState to_vector() const { return {x, x_dot, theta, theta_dot}; }
  static State from_vector(const ContinuousState& v);
};

struct Params {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;
  double force = 10.0;
  double tau = 0.02;
  double x_threshold = 2.4;
  double theta_threshold = 12.0 * 3.14159265358979323846 / 180.0;
  std::size_t target_steps = 100000;
  // Half-width of the uniform band every state variable starts in.
  double init_band = 0.05;

  void validate() const;
};

// True when the pole has fallen or the cart left the track.
bool failed(const State& s, const Params& p);

// One explicit-Euler step of the classic cart-pole equations. Reward is 1 on
// every step, including the failing one. The step-count target is enforced
// by the environment, not here.
StepOutcome step(const State& s, ActionId action, const Params& p);

// Barto-Sutton-Anderson boxes: 3 position x 3 velocity x 6 angle x 3
// angular-velocity. Out-of-range values land in the outermost boxes.
// Layout: x_bin + 3*x_dot_bin + 9*theta_bin + 54*theta_dot_bin.
DiscreteIndex discretize(const State& s);

class Environment final : public d2dspl::Environment {
 public:
  explicit Environment(Params params = {});

  const EnvironmentSpec& spec() const override { return spec_; }
  ScoreRule score_rule() const override { return ScoreRule::kTotal; }
  std::unique_ptr<d2dspl::Environment> clone() const override;
  // Survived until the step target.
  bool succeeded() const override { return steps_taken() >= params_.target_steps; }

  const Params& params() const { return params_; }
  const State& state() const { return state_; }

 protected:
  ContinuousState do_reset(SeedStream& rng) override;
  StepOutcome do_step(ActionId action, std::size_t step_index) override;

 private:
  Params params_;
  EnvironmentSpec spec_;
  State state_;
};

class BoxDiscretizer final : public Discretizer {
 public:
  std::size_t size() const override { return kNumBoxes; }
  DiscreteIndex operator()(const ContinuousState& state) const override {
    return discretize(State::from_vector(state));
  }
};

}  // namespace d2dspl::cartpole

#endif  // D2DSPL_CARTPOLE_HPP
