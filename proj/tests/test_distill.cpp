#include "doctest.h"

#include <sstream>

#include "d2dspl/distill.hpp"
#include "oracles.hpp"

using namespace d2dspl;
using namespace d2dspl::distill;

namespace {

ac::Buffer buffer_with_totals(const std::vector<double>& totals) {
  ac::Buffer buffer;
  for (std::size_t e = 0; e < totals.size(); ++e) {
    ac::EpisodeRecord rec(3, 1);
    const double v = static_cast<double>(e);
    rec.append(e % 3, 1, std::span<const double>(&v, 1));
    rec.r_total = totals[e];
    buffer.push_back(rec);
  }
  return buffer;
}

}  // namespace

TEST_CASE("worked consolidation example") {
  const auto buffer = oracle::figure_one_buffer();
  REQUIRE(buffer.front().steps() == 8);
  const auto cons = consolidate(buffer);
  CHECK(cons.m_sv[2] == 6.0);
  CHECK(cons.m_sv[3] == 4.0);
  CHECK(cons.m_sc[1] == 3);
  CHECK(cons.m_sc[0] == 0);

  ac::PolicyParams theta(4, 2);
  theta.at(1, 1) = 0.5;
  const auto ds = build_dataset(cons, theta);
  REQUIRE(ds.size() == 3);
  CHECK(ds.source_states == std::vector<DiscreteIndex>{1, 2, 3});
  CHECK(ds.inputs[0][0] == 2.0);
  CHECK(ds.inputs[0][1] == 4.0 / 3.0);
  CHECK(ds.inputs[1] == std::vector<double>{7, 7});
  CHECK(ds.inputs[2] == std::vector<double>{5, 5});
  CHECK(ds.targets == std::vector<ActionId>{1, 0, 0});
}

TEST_CASE("top episode selection") {
  SUBCASE("forty episodes keep the two best") {
    std::vector<double> totals(40);
    for (std::size_t i = 0; i < 40; ++i) totals[i] = static_cast<double>((i * 17) % 40);
    const auto top = select_top_episodes(buffer_with_totals(totals), 0.05);
    REQUIRE(top.size() == 2);
    CHECK(top[0].r_total == 39);
    CHECK(top[1].r_total == 38);
  }
  SUBCASE("small buffers keep at least one") {
    const auto top = select_top_episodes(buffer_with_totals({1, 5, 3, 2, 0, 0, 0, 0, 0, 0}), 0.05);
    REQUIRE(top.size() == 1);
    CHECK(top[0].r_total == 5);
  }
  SUBCASE("ties keep episode order") {
    const auto buffer = buffer_with_totals(std::vector<double>(40, 7.0));
    const auto top = select_top_episodes(buffer, 0.1);
    REQUIRE(top.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(top[i] == buffer[i]);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(select_top_episodes({}, 0.05), UsageError);
    CHECK_THROWS_AS(select_top_episodes(buffer_with_totals({1}), 0.0), UsageError);
    CHECK_THROWS_AS(select_top_episodes(buffer_with_totals({1}), 1.5), UsageError);
  }
}

TEST_CASE("consolidation is linear") {
  const auto one = oracle::figure_one_buffer();
  const auto single = consolidate(one);
  const auto twice = consolidate({one.front(), one.front()});
  for (std::size_t i = 0; i < single.m_sv.size(); ++i) CHECK(twice.m_sv[i] == 2 * single.m_sv[i]);
  for (std::size_t i = 0; i < single.m_sc.size(); ++i) CHECK(twice.m_sc[i] == 2 * single.m_sc[i]);
  CHECK(single.m_sv == one.front().dense_m_sv());
  CHECK(single.m_sc == one.front().dense_m_sc());

  ac::EpisodeRecord other(5, 2);
  CHECK_THROWS_AS(consolidate({one.front(), other}), UsageError);
}

TEST_CASE("argmax targets") {
  ac::PolicyParams theta(1, 3);
  theta.at(0, 0) = 0.2;
  theta.at(0, 1) = 0.9;
  theta.at(0, 2) = -1.0;
  Consolidated cons{1, {1.0}, {1}};
  CHECK(build_dataset(cons, theta).targets.front() == 1);
  theta.at(0, 0) = 0.9;
  CHECK(build_dataset(cons, theta).targets.front() == 0);
}

TEST_CASE("distill matches the brute-force recomputation") {
  SeedStream rng(31);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n_states = 1 + rng.below(10);
    const std::size_t n_vars = 1 + rng.below(3);
    const std::size_t n_actions = 2 + rng.below(3);
    const auto buffer = oracle::random_buffer(rng, n_states, n_vars, 1 + rng.below(20));
    const auto theta = oracle::random_policy(rng, n_states, n_actions);
    const double fraction = std::vector<double>{0.05, 0.1, 0.25, 0.5, 1.0}[rng.below(5)];
    const auto ds = distill::distill(buffer, theta, fraction);
    CHECK(ds == oracle::distill(buffer, theta, fraction));
    CHECK_NOTHROW(ds.validate(n_states));
  }
}

TEST_CASE("targets depend only on the per-row argmax") {
  SeedStream rng(32);
  for (int i = 0; i < 50; ++i) {
    const auto buffer = oracle::random_buffer(rng, 8, 2, 10);
    auto theta = oracle::random_policy(rng, 8, 3);
    const auto before = distill::distill(buffer, theta, 0.5);
    for (std::size_t s = 0; s < 8; ++s) {
      const double c = rng.uniform(-100, 100);
      for (auto& v : theta.row(s)) v += c;
    }
    CHECK(distill::distill(buffer, theta, 0.5).targets == before.targets);
  }
}

TEST_CASE("whole-buffer distillation of one episode is its visited-state average") {
  const auto buffer = oracle::figure_one_buffer();
  const auto ds = distill::distill(buffer, ac::PolicyParams(4, 2), 1.0);
  CHECK(ds.size() == buffer.front().n_visited());
  CHECK(ds.size() < 4);
}

TEST_CASE("dataset csv round trip") {
  SeedStream rng(33);
  const auto buffer = oracle::random_buffer(rng, 10, 3, 20);
  const auto ds = distill::distill(buffer, oracle::random_policy(rng, 10, 2), 0.5);
  std::ostringstream out;
  ds.write_csv(out);
  CHECK(out.str().rfind("state_index,s_0,s_1,s_2,target\n", 0) == 0);
  std::istringstream in(out.str());
  CHECK(TrainingDataset::read_csv(in, 2) == ds);

  std::istringstream bad_header("index,s_0,target\n");
  CHECK_THROWS_AS(TrainingDataset::read_csv(bad_header, 2), ValidationError);
  std::istringstream bad_target("state_index,s_0,target\n0,1.5,7\n");
  CHECK_THROWS_AS(TrainingDataset::read_csv(bad_target, 2), ValidationError);
  std::istringstream bad_value("state_index,s_0,target\n0,abc,1\n");
  CHECK_THROWS_AS(TrainingDataset::read_csv(bad_value, 2), ValidationError);
}

TEST_CASE("dataset validation") {
  TrainingDataset ds{1, 2, {{0.0}, {1.0}}, {0, 1}, {3, 2}};
  CHECK_THROWS_AS(ds.validate(10), ValidationError);
  ds.source_states = {2, 3};
  CHECK_NOTHROW(ds.validate(10));
  CHECK_THROWS_AS(ds.validate(3), ValidationError);
  ds.targets[1] = 2;
  CHECK_THROWS_AS(ds.validate(10), ValidationError);
}
