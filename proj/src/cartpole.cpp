#include "d2dspl/cartpole.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>

namespace d2dspl::cartpole {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Bin i covers [edges[i-1], edges[i]); values past either end clamp.
std::size_t bin_of(double v, std::span<const double> edges) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

}  // namespace

State State::from_vector(const ContinuousState& v) {
  if (v.size() != kNumStateVars) throw UsageError("cart-pole state needs 4 variables");
  return {v[0], v[1], v[2], v[3]};
}

void Params::validate() const {
  if (!(gravity > 0 && cart_mass > 0 && pole_mass > 0 && pole_half_length > 0 && force > 0 &&
        tau > 0 && x_threshold > 0 && theta_threshold > 0)) {
    throw ValidationError("cart-pole physical parameters must be positive");
  }
  if (target_steps == 0) throw ValidationError("cart-pole target_steps must be positive");
  if (!(init_band >= 0)) throw ValidationError("cart-pole init_band must be non-negative");
}

bool failed(const State& s, const Params& p) {
  return s.x < -p.x_threshold || s.x > p.x_threshold || s.theta < -p.theta_threshold ||
         s.theta > p.theta_threshold;
}

StepOutcome step(const State& s, ActionId action, const Params& p) {
  const double force = action == kPushRight ? p.force : -p.force;
  const double total_mass = p.cart_mass + p.pole_mass;
  const double pole_mass_length = p.pole_mass * p.pole_half_length;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);

  const double temp = (force + pole_mass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (p.gravity * sin_t - cos_t * temp) /
      (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

  State n;
  n.x = s.x + p.tau * s.x_dot;
  n.x_dot = s.x_dot + p.tau * x_acc;
  n.theta = s.theta + p.tau * s.theta_dot;
  n.theta_dot = s.theta_dot + p.tau * theta_acc;

  StepOutcome out;
  out.next_state = n.to_vector();
  out.reward = 1.0;
  out.metric = 1.0;
  out.terminal = failed(n, p);
  return out;
}

DiscreteIndex discretize(const State& s) {
  static constexpr std::array<double, 2> kXEdges{-0.8, 0.8};
  static constexpr std::array<double, 2> kXDotEdges{-0.5, 0.5};
  static constexpr std::array<double, 5> kThetaEdges{-6 * kDeg, -1 * kDeg, 0.0, 1 * kDeg, 6 * kDeg};
  static constexpr std::array<double, 2> kThetaDotEdges{-50 * kDeg, 50 * kDeg};

  return bin_of(s.x, kXEdges) + 3 * bin_of(s.x_dot, kXDotEdges) +
         9 * bin_of(s.theta, kThetaEdges) + 54 * bin_of(s.theta_dot, kThetaDotEdges);
}

Environment::Environment(Params params) : params_(params) {
  params_.validate();
  spec_ = {"cartpole", kNumStateVars, kNumActions, kNumBoxes, params_.target_steps};
}

std::unique_ptr<d2dspl::Environment> Environment::clone() const {
  return std::make_unique<Environment>(*this);
}

ContinuousState Environment::do_reset(SeedStream& rng) {
  const double b = params_.init_band;
  state_.x = rng.uniform(-b, b);
  state_.x_dot = rng.uniform(-b, b);
  state_.theta = rng.uniform(-b, b);
  state_.theta_dot = rng.uniform(-b, b);
  return state_.to_vector();
}

StepOutcome Environment::do_step(ActionId action, std::size_t) {
  StepOutcome out = cartpole::step(state_, action, params_);
  state_ = State::from_vector(out.next_state);
  return out;
}

}  // namespace d2dspl::cartpole
