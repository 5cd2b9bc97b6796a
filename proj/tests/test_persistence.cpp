#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

#include "d2dspl/persistence.hpp"
#include "oracles.hpp"

using namespace d2dspl;

TEST_CASE("format_double round-trips") {
  SeedStream rng(50);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.below(200)) - 100);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(std::stod(io::format_double(100000)) == 100000);
  CHECK(std::strtod(io::format_double(std::numeric_limits<double>::denorm_min()).c_str(), nullptr) ==
        std::numeric_limits<double>::denorm_min());
}

TEST_CASE("policy json round trip") {
  SeedStream rng(51);
  ac::PolicyParams theta(7, 3);
  for (auto& v : theta.data()) v = rng.uniform(-10, 10);
  ac::ValueWeights w(7);
  for (auto& v : w.w) v = rng.uniform(-10, 10);

  const auto text = io::policy_to_json(theta, w);
  ac::PolicyParams theta2;
  ac::ValueWeights w2;
  io::policy_from_json(text, theta2, w2);
  CHECK(theta2 == theta);
  CHECK(w2 == w);
  CHECK(io::policy_to_json(theta2, w2) == text);

  CHECK_THROWS_AS(io::policy_from_json("{\"n_states\": 2}", theta2, w2), ValidationError);
  CHECK_THROWS_AS(io::policy_from_json("[1,2", theta2, w2), ValidationError);
  CHECK_THROWS_AS(io::policy_from_json(
                      R"({"n_states":1,"n_actions":2,"theta":[[1,2,3]],"w":[0]})", theta2, w2),
                  ValidationError);
}

TEST_CASE("buffer text round trip") {
  SeedStream rng(52);
  const auto buffer = oracle::random_buffer(rng, 9, 3, 25);
  std::ostringstream out;
  io::write_buffer(out, buffer, 9, 3);
  CHECK(out.str().rfind("d2dspl-buffer 1\nn_states 9 n_state_vars 3 episodes 25\n", 0) == 0);
  std::istringstream in(out.str());
  CHECK(io::read_buffer(in) == buffer);

  std::istringstream wrong_magic("buffer 2\n");
  CHECK_THROWS_AS(io::read_buffer(wrong_magic), ValidationError);
  std::istringstream truncated("d2dspl-buffer 1\nn_states 2 n_state_vars 1 episodes 1\nepisode 0 r_total 1 entries 2\n0 1 0.5\n");
  CHECK_THROWS_AS(io::read_buffer(truncated), ValidationError);
  std::istringstream out_of_range("d2dspl-buffer 1\nn_states 2 n_state_vars 1 episodes 1\nepisode 0 r_total 1 entries 1\n5 1 0.5\n");
  CHECK_THROWS_AS(io::read_buffer(out_of_range), ValidationError);
}

TEST_CASE("buffer summary") {
  const auto buffer = oracle::figure_one_buffer();
  std::ostringstream out;
  io::write_buffer_summary(out, buffer);
  CHECK(out.str() == "episode,r_total,steps,visited_states\n0,8,8,3\n");
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "d2dspl_persistence_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "x.txt").string();
  io::write_file(path, "hello\n");
  CHECK(io::read_file(path) == "hello\n");
  CHECK_THROWS_AS(io::read_file((dir / "missing.txt").string()), ValidationError);
  std::filesystem::remove_all(dir);
}
