#ifndef D2DSPL_PERSISTENCE_HPP
#define D2DSPL_PERSISTENCE_HPP

#include <iosfwd>
#include <string>

#include "d2dspl/actor_critic.hpp"
#include "d2dspl/distill.hpp"

namespace d2dspl::io {

// {"n_states", "n_actions", "theta": [[...] per state], "w": [...]}
std::string policy_to_json(const ac::PolicyParams& theta, const ac::ValueWeights& w);
void policy_from_json(const std::string& text, ac::PolicyParams& theta, ac::ValueWeights& w);

// Line-oriented buffer dump:
//   d2dspl-buffer 1
//   n_states <N_ds> n_state_vars <N_sv> episodes <E>
//   episode <i> r_total <R> entries <k>
//   <state> <count> <sum_0> ... <sum_{N_sv-1}>     (k lines)
void write_buffer(std::ostream& out, const ac::Buffer& buffer, std::size_t n_states,
                  std::size_t n_state_vars);
ac::Buffer read_buffer(std::istream& in);

// episode,r_total,steps,visited_states
void write_buffer_summary(std::ostream& out, const ac::Buffer& buffer);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// Decimal text that round-trips a double exactly.
std::string format_double(double v);

}  // namespace d2dspl::io

#endif  // D2DSPL_PERSISTENCE_HPP
