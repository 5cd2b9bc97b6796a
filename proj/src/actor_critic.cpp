#include "d2dspl/actor_critic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace d2dspl::ac {

void Hyperparams::validate() const {
  if (!(alpha_theta > 0 && alpha_w > 0)) throw ValidationError("step sizes must be positive");
  if (!(lambda_theta >= 0 && lambda_theta <= 1 && lambda_w >= 0 && lambda_w <= 1)) {
    throw ValidationError("trace decay rates must lie in [0, 1]");
  }
  if (!(gamma > 0 && gamma <= 1)) throw ValidationError("gamma must lie in (0, 1]");
}

ActionId PolicyParams::best_action(DiscreteIndex s) const {
  return argmax(theta_.data() + s * n_actions_, n_actions_);
}

Traces::Traces(std::size_t n_states, std::size_t n_actions)
    : z_theta(n_states * n_actions, 0.0),
      z_w(n_states, 0.0),
      n_actions_(n_actions),
      is_active_(n_states, 0) {}

void Traces::reset() {
  for (DiscreteIndex s : active_) {
    z_w[s] = 0.0;
    std::fill_n(z_theta.begin() + static_cast<std::ptrdiff_t>(s * n_actions_), n_actions_, 0.0);
    is_active_[s] = 0;
  }
  active_.clear();
  discount = 1.0;
}

void Traces::touch(DiscreteIndex s) {
  if (!is_active_[s]) {
    is_active_[s] = 1;
    active_.push_back(s);
  }
}

void policy_probabilities(std::span<const double> row, std::span<double> out) {
  const double mx = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (std::size_t b = 0; b < row.size(); ++b) {
    out[b] = std::exp(row[b] - mx);
    total += out[b];
  }
  for (double& p : out) p /= total;
}

std::vector<double> policy_probabilities(const PolicyParams& theta, DiscreteIndex s) {
  std::vector<double> p(theta.n_actions());
  policy_probabilities(theta.row(s), p);
  return p;
}

ActionId sample_action(std::span<const double> probs, SeedStream& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  ActionId last_positive = 0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    cumulative += probs[a];
    last_positive = a;
    if (u < cumulative) return a;
  }
  // Rounding left the cumulative sum just under u.
  return last_positive;
}

StepDiagnostics td_update(PolicyParams& theta, ValueWeights& w, Traces& traces, DiscreteIndex s,
                          ActionId a, double r, std::optional<DiscreteIndex> s_next,
                          const Hyperparams& hyper) {
  const std::size_t n_actions = theta.n_actions();
  double probs_buf[16];
  std::vector<double> probs_heap;
  std::span<double> probs;
  if (n_actions <= 16) {
    probs = std::span<double>(probs_buf, n_actions);
  } else {
    probs_heap.resize(n_actions);
    probs = probs_heap;
  }
  policy_probabilities(theta.row(s), probs);

  const double v_next = s_next ? w.w[*s_next] : 0.0;
  const double delta = r + hyper.gamma * v_next - w.w[s];
  if (!std::isfinite(delta)) {
    throw Fault("td_update: non-finite TD error at state " + std::to_string(s) +
                " (r=" + std::to_string(r) + ", v(s)=" + std::to_string(w.w[s]) + ")");
  }

  const double decay_w = hyper.gamma * hyper.lambda_w;
  const double decay_theta = hyper.gamma * hyper.lambda_theta;

  traces.touch(s);
  const auto& active = traces.active();
  for (DiscreteIndex j : active) {
    traces.z_w[j] *= decay_w;
    double* z = traces.z_theta.data() + j * n_actions;
    for (std::size_t b = 0; b < n_actions; ++b) z[b] *= decay_theta;
  }

  traces.z_w[s] += 1.0;
  double* zs = traces.z_theta.data() + s * n_actions;
  for (std::size_t b = 0; b < n_actions; ++b) {
    zs[b] += traces.discount * ((b == a ? 1.0 : 0.0) - probs[b]);
  }

  const double step_w = hyper.alpha_w * delta;
  const double step_theta = hyper.alpha_theta * delta;
  for (DiscreteIndex j : active) {
    w.w[j] += step_w * traces.z_w[j];
    const double* z = traces.z_theta.data() + j * n_actions;
    double* th = theta.data().data() + j * n_actions;
    for (std::size_t b = 0; b < n_actions; ++b) th[b] += step_theta * z[b];
  }
  traces.discount *= hyper.gamma;

  return {delta, r};
}

EpisodeRecord EpisodeRecord::from_dense(double r_total, std::size_t n_state_vars,
                                        std::span<const double> m_sv,
                                        std::span<const std::uint64_t> m_sc) {
  if (m_sv.size() != m_sc.size() * n_state_vars) {
    throw UsageError("EpisodeRecord::from_dense: M_sv and M_sc dimensions disagree");
  }
  EpisodeRecord rec(m_sc.size(), n_state_vars);
  rec.r_total = r_total;
  for (std::size_t i = 0; i < m_sc.size(); ++i) {
    auto row = m_sv.subspan(i * n_state_vars, n_state_vars);
    if (m_sc[i] == 0) {
      if (std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; })) {
        throw UsageError("EpisodeRecord::from_dense: unvisited state with non-zero sums");
      }
      continue;
    }
    rec.append(i, m_sc[i], row);
  }
  return rec;
}

std::uint64_t EpisodeRecord::steps() const {
  std::uint64_t total = 0;
  for (auto c : counts_) total += c;
  return total;
}

std::uint64_t EpisodeRecord::count_of(DiscreteIndex s) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), s);
  if (it == states_.end() || *it != s) return 0;
  return counts_[static_cast<std::size_t>(it - states_.begin())];
}

std::vector<double> EpisodeRecord::sum_of(DiscreteIndex s) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), s);
  if (it == states_.end() || *it != s) return std::vector<double>(n_state_vars_, 0.0);
  auto row = sum(static_cast<std::size_t>(it - states_.begin()));
  return {row.begin(), row.end()};
}

std::vector<double> EpisodeRecord::dense_m_sv() const {
  std::vector<double> out(n_states_ * n_state_vars_, 0.0);
  for (std::size_t k = 0; k < states_.size(); ++k) {
    auto row = sum(k);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(states_[k] * n_state_vars_));
  }
  return out;
}

std::vector<std::uint64_t> EpisodeRecord::dense_m_sc() const {
  std::vector<std::uint64_t> out(n_states_, 0);
  for (std::size_t k = 0; k < states_.size(); ++k) out[states_[k]] = counts_[k];
  return out;
}

void EpisodeRecord::append(DiscreteIndex s, std::uint64_t count, std::span<const double> sum) {
  if (s >= n_states_) throw UsageError("EpisodeRecord::append: state index out of range");
  if (!states_.empty() && s <= states_.back()) {
    throw UsageError("EpisodeRecord::append: states must be strictly increasing");
  }
  if (sum.size() != n_state_vars_) throw UsageError("EpisodeRecord::append: wrong sum width");
  if (count == 0) throw UsageError("EpisodeRecord::append: count must be positive");
  states_.push_back(s);
  counts_.push_back(count);
  sums_.insert(sums_.end(), sum.begin(), sum.end());
}

EpisodeAccumulator::EpisodeAccumulator(std::size_t n_states, std::size_t n_state_vars)
    : n_states_(n_states),
      n_state_vars_(n_state_vars),
      m_sv_(n_states * n_state_vars, 0.0),
      m_sc_(n_states, 0) {}

void EpisodeAccumulator::add(DiscreteIndex s, const ContinuousState& state, double reward) {
  if (m_sc_[s] == 0) visited_.push_back(s);
  ++m_sc_[s];
  double* row = m_sv_.data() + s * n_state_vars_;
  for (std::size_t k = 0; k < n_state_vars_; ++k) row[k] += state[k];
  r_total_ += reward;
}

EpisodeRecord EpisodeAccumulator::finish() {
  std::sort(visited_.begin(), visited_.end());
  EpisodeRecord rec(n_states_, n_state_vars_);
  rec.r_total = r_total_;
  for (DiscreteIndex s : visited_) {
    double* row = m_sv_.data() + s * n_state_vars_;
    rec.append(s, m_sc_[s], std::span<const double>(row, n_state_vars_));
    std::fill_n(row, n_state_vars_, 0.0);
    m_sc_[s] = 0;
  }
  visited_.clear();
  r_total_ = 0.0;
  return rec;
}

PhaseResult run_reinforcement_phase(Environment& env, const Discretizer& discretizer,
                                    const Hyperparams& hyper, std::size_t n_episodes,
                                    SeedStream& rng, const PhaseOptions& options,
                                    const PhaseResult* start) {
  hyper.validate();
  const EnvironmentSpec& spec = env.spec();
  if (discretizer.size() != spec.n_discrete_states) {
    throw UsageError("discretizer size does not match the environment's discrete state count");
  }
  const std::size_t n_states = spec.n_discrete_states;
  const std::size_t n_actions = spec.n_actions;

  PhaseResult result;
  if (start) {
    result.theta = start->theta;
    result.w = start->w;
    if (result.theta.n_states() != n_states || result.theta.n_actions() != n_actions ||
        result.w.w.size() != n_states) {
      throw UsageError("starting policy dimensions do not match the environment");
    }
  } else {
    result.theta = PolicyParams(n_states, n_actions);
    result.w = ValueWeights(n_states);
  }

  Traces traces(n_states, n_actions);
  EpisodeAccumulator acc(n_states, spec.n_state_vars);
  std::vector<double> probs(n_actions);
  Transition log;

  for (std::size_t episode = 0; episode < n_episodes; ++episode) {
    traces.reset();
    ContinuousState state = env.reset(rng);
    DiscreteIndex s = discretizer(state);
    double r_total = 0.0;
    std::size_t steps = 0;

    while (!env.terminal()) {
      policy_probabilities(result.theta.row(s), probs);
      const ActionId a = sample_action(probs, rng);
      StepOutcome out = env.step(a);
      acc.add(s, state, out.reward);
      r_total += out.reward;
      ++steps;

      std::optional<DiscreteIndex> s_next;
      if (!out.terminal) s_next = discretizer(out.next_state);

      if (options.on_step) {
        log.episode = episode;
        log.state = state;
        log.s = s;
        log.action = a;
        log.reward = out.reward;
        log.terminal = out.terminal;
        options.on_step(log);
      }

      td_update(result.theta, result.w, traces, s, a, out.reward, s_next, hyper);

      state = std::move(out.next_state);
      if (s_next) s = *s_next;
    }

    EpisodeRecord rec = acc.finish();
    if (options.keep_buffer) result.buffer.push_back(std::move(rec));
    result.episode_lengths.push_back(steps);
    result.episode_rewards.push_back(r_total);
  }
  return result;
}

}  // namespace d2dspl::ac
