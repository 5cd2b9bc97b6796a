// Command-line front end: train, distill, export-dataset, eval, suite.
//
// Exit codes: 0 success, 1 validation error, 2 runtime fault.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "d2dspl/harness.hpp"
#include "d2dspl/persistence.hpp"

namespace fs = std::filesystem;
using namespace d2dspl;

namespace {

struct CommonFlags {
  std::string env;
  std::optional<std::size_t> episodes;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::string config_file;
  std::string out;
  std::vector<std::string> scenarios;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--env", f.env, "Environment")->check(CLI::IsMember({"cartpole", "pursuit"}));
  cmd->add_option("--episodes", f.episodes, "Reinforcement-phase episodes (n)");
  cmd->add_option("--trials", f.trials, "Number of trials (consecutive seeds)");
  cmd->add_option("--seed", f.seed, "Trial seed, or the first seed of a suite");
  cmd->add_option("--config", f.config_file, "Flat key = value config file");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--scenario", f.scenarios, "Pursuit scenario file (repeatable)");
}

harness::TrialConfig build_config(const CommonFlags& f) {
  harness::TrialConfig c;
  if (!f.config_file.empty()) c.load_file(f.config_file);
  if (!f.env.empty()) c.env = f.env;
  if (f.episodes) c.n_episodes = *f.episodes;
  if (f.seed) c.set("seed", std::to_string(*f.seed));
  if (f.trials) c.set("trials", std::to_string(*f.trials));
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.scenarios.empty()) c.scenario_files = f.scenarios;
  c.validate();
  return c;
}

void print_report(const std::string& label, const harness::EvalReport& r) {
  std::cout << label << ": runs=" << r.scores.size() << " mean=" << r.mean << " median=" << r.median
            << " successes=" << r.success_count << '\n';
}

int cmd_train(const CommonFlags& f) {
  const auto config = build_config(f);
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  auto env = harness::make_environment(config);
  auto disc = harness::make_discretizer(config);
  const std::uint64_t seed = config.seeds.front();
  SeedStream rng(harness::training_seed(seed));
  const auto phase = ac::run_reinforcement_phase(*env, *disc, config.hyper, config.n_episodes, rng);

  io::write_file((dir / "manifest.txt").string(), config.to_text());
  io::write_file((dir / "policy.json").string(), io::policy_to_json(phase.theta, phase.w));
  std::ostringstream buf, summary;
  io::write_buffer(buf, phase.buffer, env->spec().n_discrete_states, env->spec().n_state_vars);
  io::write_file((dir / "buffer.txt").string(), buf.str());
  io::write_buffer_summary(summary, phase.buffer);
  io::write_file((dir / "buffer_summary.csv").string(), summary.str());

  double best = phase.episode_rewards.empty() ? 0.0 : phase.episode_rewards.front();
  for (double r : phase.episode_rewards) best = std::max(best, r);
  std::cout << "trained " << config.n_episodes << " episodes on " << config.env
            << "; best episode reward " << best << "; artifacts in " << dir.string() << '\n';
  return 0;
}

distill::TrainingDataset load_and_distill(const harness::TrialConfig& config, const fs::path& in) {
  ac::PolicyParams theta;
  ac::ValueWeights w;
  io::policy_from_json(io::read_file((in / "policy.json").string()), theta, w);
  std::istringstream bs(io::read_file((in / "buffer.txt").string()));
  const ac::Buffer buffer = io::read_buffer(bs);
  auto dataset = distill::distill(buffer, theta, config.distill_fraction);
  auto env = harness::make_environment(config);
  if (dataset.n_state_vars != env->spec().n_state_vars || theta.n_actions() != env->spec().n_actions) {
    throw ValidationError("policy/buffer do not match environment '" + config.env + "'");
  }
  dataset.validate(theta.n_states());
  return dataset;
}

int cmd_export(const CommonFlags& f, const std::string& in_dir) {
  const auto config = build_config(f);
  const fs::path out(config.out_dir);
  const fs::path in = in_dir.empty() ? out : fs::path(in_dir);
  fs::create_directories(out);
  const auto dataset = load_and_distill(config, in);
  std::ostringstream os;
  dataset.write_csv(os);
  io::write_file((out / "dataset.csv").string(), os.str());
  std::cout << "dataset: " << dataset.size() << " rows -> " << (out / "dataset.csv").string() << '\n';
  return 0;
}

int cmd_distill(const CommonFlags& f, const std::string& in_dir) {
  const auto config = build_config(f);
  const fs::path out(config.out_dir);
  const fs::path in = in_dir.empty() ? out : fs::path(in_dir);
  fs::create_directories(out);
  const auto dataset = load_and_distill(config, in);
  std::ostringstream os;
  dataset.write_csv(os);
  io::write_file((out / "dataset.csv").string(), os.str());

  nn::TrainConfig tc = config.train;
  tc.seed = derive_seed(config.seeds.front(), "classifier", config.train.seed);
  const auto trained = nn::train(dataset, config.effective_hidden_dim(), tc);
  trained.model.save((out / "model.json").string());
  std::cout << "dataset: " << dataset.size() << " rows; classifier loss "
            << trained.model.meta.final_loss << ", accuracy " << trained.model.meta.final_accuracy
            << "; model -> " << (out / "model.json").string() << '\n';
  return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& model_path, const std::string& policy_path,
             std::size_t runs) {
  auto config = build_config(f);
  if (model_path.empty() == policy_path.empty()) {
    throw ValidationError("eval: give exactly one of --model or --policy");
  }
  std::shared_ptr<const Discretizer> disc = harness::make_discretizer(config);
  Controller controller;
  if (!model_path.empty()) {
    controller = harness::model_controller(std::make_shared<const nn::MlpModel>(nn::MlpModel::load(model_path)));
  } else {
    ac::PolicyParams theta;
    ac::ValueWeights w;
    io::policy_from_json(io::read_file(policy_path), theta, w);
    controller = config.eval_policy == harness::EvalPolicy::kSample
                     ? harness::sampling_controller(theta, disc, derive_seed(config.seeds.front(), "eval-sampling"))
                     : harness::greedy_controller(theta, disc);
  }
  const std::uint64_t seed_base = harness::evaluation_seed_base(config.seeds.front());
  const auto scenarios = harness::evaluation_scenarios(config);
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    auto env = harness::make_environment(config, scenarios[si].script);
    const auto r = harness::evaluate_controller(controller, *env, runs, seed_base + si * runs);
    print_report(scenarios[si].name.empty() ? config.env : scenarios[si].name, r);
  }
  return 0;
}

int cmd_suite(const CommonFlags& f) {
  const auto config = build_config(f);
  const auto suite = harness::run_suite(config);
  for (const auto& t : suite.trials) {
    for (std::size_t si = 0; si < t.scenario_names.size(); ++si) {
      const std::string tag = "trial " + std::to_string(t.trial_seed) +
                              (t.scenario_names[si].empty() ? "" : " [" + t.scenario_names[si] + "]");
      print_report(tag + " " + t.discrete_n.method, t.discrete_n.per_scenario[si]);
      print_report(tag + " " + t.discrete_2n.method, t.discrete_2n.per_scenario[si]);
      print_report(tag + " d2dspl", t.d2dspl.per_scenario[si]);
    }
  }
  for (const auto& [seed, msg] : suite.failures) {
    std::cerr << "trial " << seed << " failed: " << msg << '\n';
  }
  std::cout << "summary tables in " << config.out_dir << '\n';
  return suite.failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-to-deep supervised policy learning laboratory"};
  app.require_subcommand(1);

  CommonFlags train_f, distill_f, export_f, eval_f, suite_f;
  std::string distill_in, export_in, model_path, policy_path;
  std::size_t eval_runs = 100;

  auto* train = app.add_subcommand("train", "Reinforcement phase only");
  add_common(train, train_f);
  auto* dist = app.add_subcommand("distill", "Buffer + policy -> dataset + model");
  add_common(dist, distill_f);
  dist->add_option("--in", distill_in, "Directory holding policy.json and buffer.txt (default: --out)");
  auto* exp = app.add_subcommand("export-dataset", "Buffer + policy -> dataset.csv");
  add_common(exp, export_f);
  exp->add_option("--in", export_in, "Directory holding policy.json and buffer.txt (default: --out)");
  auto* eval = app.add_subcommand("eval", "Evaluate a model or tabular policy");
  add_common(eval, eval_f);
  eval->add_option("--model", model_path, "model.json");
  eval->add_option("--policy", policy_path, "policy JSON");
  eval->add_option("--runs", eval_runs, "Evaluation runs")->check(CLI::PositiveNumber);
  auto* suite = app.add_subcommand("suite", "Full multi-trial protocol");
  add_common(suite, suite_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train(train_f);
    if (dist->parsed()) return cmd_distill(distill_f, distill_in);
    if (exp->parsed()) return cmd_export(export_f, export_in);
    if (eval->parsed()) return cmd_eval(eval_f, model_path, policy_path, eval_runs);
    if (suite->parsed()) return cmd_suite(suite_f);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fault: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
