#ifndef D2DSPL_DISTILL_HPP
#define D2DSPL_DISTILL_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "d2dspl/actor_critic.hpp"

// Turns a reinforcement-phase buffer and its final policy into a supervised
// training set: one averaged input row per visited discrete state, labelled
// with that state's highest-preference action.
namespace d2dspl::distill {

inline constexpr double kDefaultFraction = 0.05;

struct TrainingDataset {
  std::size_t n_state_vars = 0;
  std::size_t n_actions = 0;
  std::vector<std::vector<double>> inputs;
  std::vector<ActionId> targets;
  std::vector<DiscreteIndex> source_states;  // strictly increasing

  std::size_t size() const { return targets.size(); }
  void validate(std::size_t n_discrete_states) const;

  bool operator==(const TrainingDataset&) const = default;

  // Delimited text: header `state_index,s_0,...,s_{N-1},target`, one row per
  // retained state, values printed with round-trip precision.
  void write_csv(std::ostream& out) const;
  static TrainingDataset read_csv(std::istream& in, std::size_t n_actions);
};

struct Consolidated {
  std::size_t n_state_vars = 0;
  std::vector<double> m_sv;         // N_ds x N_sv, row-major
  std::vector<std::uint64_t> m_sc;  // N_ds
};

// max(1, floor(fraction * |buffer|)) records with the highest r_total, in
// descending r_total order; equal totals keep episode order.
ac::Buffer select_top_episodes(const ac::Buffer& buffer, double fraction);

// Elementwise sums of M_sv and M_sc over the records.
Consolidated consolidate(const ac::Buffer& subset);

// Averages visited rows and attaches argmax-theta targets; unvisited states
// are dropped.
TrainingDataset build_dataset(const Consolidated& cons, const ac::PolicyParams& theta);

TrainingDataset distill(const ac::Buffer& buffer, const ac::PolicyParams& theta,
                        double fraction = kDefaultFraction);

}  // namespace d2dspl::distill

#endif  // D2DSPL_DISTILL_HPP
