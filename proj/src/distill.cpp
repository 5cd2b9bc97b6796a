#include "d2dspl/distill.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace d2dspl::distill {

void TrainingDataset::validate(std::size_t n_discrete_states) const {
  if (inputs.size() != targets.size() || source_states.size() != targets.size()) {
    throw ValidationError("dataset: inputs, targets and source states differ in length");
  }
  if (targets.size() > n_discrete_states) {
    throw ValidationError("dataset: more rows than discrete states");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (inputs[i].size() != n_state_vars) throw ValidationError("dataset: ragged input row");
    if (targets[i] >= n_actions) throw ValidationError("dataset: target out of range");
    if (source_states[i] >= n_discrete_states) {
      throw ValidationError("dataset: source state out of range");
    }
    if (i > 0 && source_states[i] <= source_states[i - 1]) {
      throw ValidationError("dataset: source states must be strictly increasing");
    }
  }
}

void TrainingDataset::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "state_index";
  for (std::size_t k = 0; k < n_state_vars; ++k) out << ",s_" << k;
  out << ",target\n";
  for (std::size_t i = 0; i < size(); ++i) {
    out << source_states[i];
    for (double v : inputs[i]) out << ',' << v;
    out << ',' << targets[i] << '\n';
  }
  out.precision(old);
}

TrainingDataset TrainingDataset::read_csv(std::istream& in, std::size_t n_actions) {
  TrainingDataset ds;
  ds.n_actions = n_actions;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset: empty file");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 3 || line.rfind("state_index", 0) != 0) {
    throw ValidationError("dataset: bad header");
  }
  ds.n_state_vars = columns - 2;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns) throw ValidationError("dataset: row has wrong column count");
    try {
      ds.source_states.push_back(std::stoull(cells.front()));
      std::vector<double> row;
      for (std::size_t k = 1; k + 1 < cells.size(); ++k) row.push_back(std::stod(cells[k]));
      ds.inputs.push_back(std::move(row));
      ds.targets.push_back(std::stoull(cells.back()));
    } catch (const std::logic_error&) {
      throw ValidationError("dataset: unparsable value in row: " + line);
    }
    if (ds.targets.back() >= n_actions) throw ValidationError("dataset: target out of range");
  }
  return ds;
}

ac::Buffer select_top_episodes(const ac::Buffer& buffer, double fraction) {
  if (buffer.empty()) throw UsageError("select_top_episodes: empty buffer");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw UsageError("select_top_episodes: fraction must lie in (0, 1]");
  }
  const auto floor_k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(buffer.size())));
  const std::size_t k = std::max<std::size_t>(1, floor_k);

  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return buffer[a].r_total > buffer[b].r_total;
  });

  ac::Buffer top;
  top.reserve(k);
  for (std::size_t i = 0; i < k; ++i) top.push_back(buffer[order[i]]);
  return top;
}

Consolidated consolidate(const ac::Buffer& subset) {
  Consolidated cons;
  if (subset.empty()) return cons;
  const std::size_t n_states = subset.front().n_states();
  const std::size_t n_sv = subset.front().n_state_vars();
  cons.n_state_vars = n_sv;
  cons.m_sv.assign(n_states * n_sv, 0.0);
  cons.m_sc.assign(n_states, 0);
  for (const auto& rec : subset) {
    if (rec.n_states() != n_states || rec.n_state_vars() != n_sv) {
      throw UsageError("consolidate: records disagree on dimensions");
    }
    for (std::size_t k = 0; k < rec.n_visited(); ++k) {
      const DiscreteIndex s = rec.states()[k];
      cons.m_sc[s] += rec.counts()[k];
      auto sum = rec.sum(k);
      for (std::size_t v = 0; v < n_sv; ++v) cons.m_sv[s * n_sv + v] += sum[v];
    }
  }
  return cons;
}

TrainingDataset build_dataset(const Consolidated& cons, const ac::PolicyParams& theta) {
  if (cons.m_sc.size() != theta.n_states() ||
      cons.m_sv.size() != cons.m_sc.size() * cons.n_state_vars) {
    throw UsageError("build_dataset: consolidated data does not match the policy");
  }
  TrainingDataset ds;
  ds.n_state_vars = cons.n_state_vars;
  ds.n_actions = theta.n_actions();
  for (DiscreteIndex i = 0; i < cons.m_sc.size(); ++i) {
    const std::uint64_t count = cons.m_sc[i];
    if (count == 0) continue;
    std::vector<double> row(cons.n_state_vars);
    for (std::size_t v = 0; v < cons.n_state_vars; ++v) {
      row[v] = cons.m_sv[i * cons.n_state_vars + v] / static_cast<double>(count);
    }
    ds.inputs.push_back(std::move(row));
    ds.targets.push_back(theta.best_action(i));
    ds.source_states.push_back(i);
  }
  return ds;
}

TrainingDataset distill(const ac::Buffer& buffer, const ac::PolicyParams& theta, double fraction) {
  return build_dataset(consolidate(select_top_episodes(buffer, fraction)), theta);
}

}  // namespace d2dspl::distill
