#include "d2dspl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "d2dspl/cartpole.hpp"
#include "d2dspl/persistence.hpp"

namespace d2dspl::harness {

namespace fs = std::filesystem;
using io::format_double;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ValidationError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    std::size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::logic_error&) {
    throw ValidationError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::string scenario_name_from_path(const std::string& path) {
  return fs::path(path).stem().string();
}

std::string scores_csv(const EvalReport& r, std::uint64_t seed_base) {
  std::ostringstream os;
  os << "run,seed,score,steps,success\n";
  for (std::size_t i = 0; i < r.scores.size(); ++i) {
    os << i << ',' << seed_base + i << ',' << format_double(r.scores[i]) << ',' << r.steps[i] << ','
       << (r.successes[i] ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string file_suffix(const std::string& scenario) {
  return scenario.empty() ? "" : "_" + scenario;
}

}  // namespace

// ---------------------------------------------------------------- config

void TrialConfig::validate() const {
  if (env != "cartpole" && env != "pursuit") {
    throw ValidationError("config: env must be cartpole or pursuit, got '" + env + "'");
  }
  if (n_episodes == 0) throw ValidationError("config: episodes must be positive");
  if (seeds.empty()) throw ValidationError("config: at least one trial seed is required");
  if (eval_runs == 0) throw ValidationError("config: eval_runs must be positive");
  if (!(distill_fraction > 0.0 && distill_fraction <= 1.0)) {
    throw ValidationError("config: fraction must lie in (0, 1]");
  }
  if (threads == 0) throw ValidationError("config: threads must be positive");
  if (out_dir.empty()) throw ValidationError("config: out must not be empty");
  if (target_steps == 0) throw ValidationError("config: target_steps must be positive");
  if (scheme != "default" && scheme != "reduced") {
    throw ValidationError("config: scheme must be default or reduced");
  }
  hyper.validate();
  train.validate();
  pursuit.kinematics.validate();
  pursuit.mcgrew.validate();
  if (!(pursuit.spawn.position_jitter >= 0 && pursuit.spawn.heading_jitter >= 0)) {
    throw ValidationError("config: spawn jitter must be non-negative");
  }
}

void TrialConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  if (key == "env") env = v;
  else if (key == "episodes") n_episodes = parse_uint(key, v);
  else if (key == "seeds") {
    seeds.clear();
    for (const auto& item : split_list(v)) seeds.push_back(parse_uint(key, item));
  } else if (key == "seed") {
    const std::uint64_t first = parse_uint(key, v);
    const std::size_t n = std::max<std::size_t>(1, seeds.size());
    seeds.resize(n);
    std::iota(seeds.begin(), seeds.end(), first);
  } else if (key == "trials") {
    const std::uint64_t n = parse_uint(key, v);
    const std::uint64_t first = seeds.empty() ? 0 : seeds.front();
    seeds.resize(n);
    std::iota(seeds.begin(), seeds.end(), first);
  } else if (key == "alpha_theta") hyper.alpha_theta = parse_double(key, v);
  else if (key == "alpha_w") hyper.alpha_w = parse_double(key, v);
  else if (key == "lambda_theta") hyper.lambda_theta = parse_double(key, v);
  else if (key == "lambda_w") hyper.lambda_w = parse_double(key, v);
  else if (key == "gamma") hyper.gamma = parse_double(key, v);
  else if (key == "fraction") distill_fraction = parse_double(key, v);
  else if (key == "hidden_dim") hidden_dim = parse_uint(key, v);
  else if (key == "epochs") train.epochs = parse_uint(key, v);
  else if (key == "learning_rate") train.learning_rate = parse_double(key, v);
  else if (key == "train_seed") train.seed = parse_uint(key, v);
  else if (key == "eval_runs") eval_runs = parse_uint(key, v);
  else if (key == "eval_policy") {
    if (v == "greedy") eval_policy = EvalPolicy::kGreedy;
    else if (v == "sample") eval_policy = EvalPolicy::kSample;
    else throw ValidationError("config: eval_policy must be greedy or sample");
  } else if (key == "out") out_dir = v;
  else if (key == "threads") threads = parse_uint(key, v);
  else if (key == "save_buffer") save_buffer = parse_bool(key, v);
  else if (key == "target_steps") target_steps = parse_uint(key, v);
  else if (key == "scheme") scheme = v;
  else if (key == "dt") pursuit.kinematics.dt = parse_double(key, v);
  else if (key == "speed_min") pursuit.kinematics.speed_min = parse_double(key, v);
  else if (key == "speed_max") pursuit.kinematics.speed_max = parse_double(key, v);
  else if (key == "max_steps") pursuit.kinematics.max_steps = parse_uint(key, v);
  else if (key == "desired_range") pursuit.mcgrew.desired_range = parse_double(key, v);
  else if (key == "k") pursuit.mcgrew.k = parse_double(key, v);
  else if (key == "blue_speed") pursuit.spawn.blue_speed = parse_double(key, v);
  else if (key == "position_jitter") pursuit.spawn.position_jitter = parse_double(key, v);
  else if (key == "heading_jitter") pursuit.spawn.heading_jitter = parse_double(key, v);
  else if (key == "scenarios") scenario_files = split_list(v);
  else throw ValidationError("config: unknown key '" + key + "'");
}

void TrialConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

std::string TrialConfig::to_text() const {
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto d = [](double x) { return format_double(x); };
  std::string seed_list;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    seed_list += (i ? "," : "") + std::to_string(seeds[i]);
  }
  std::string scenario_list;
  for (std::size_t i = 0; i < scenario_files.size(); ++i) {
    scenario_list += (i ? "," : "") + scenario_files[i];
  }
  kv("env", env);
  kv("episodes", std::to_string(n_episodes));
  kv("seeds", seed_list);
  kv("alpha_theta", d(hyper.alpha_theta));
  kv("alpha_w", d(hyper.alpha_w));
  kv("lambda_theta", d(hyper.lambda_theta));
  kv("lambda_w", d(hyper.lambda_w));
  kv("gamma", d(hyper.gamma));
  kv("fraction", d(distill_fraction));
  kv("hidden_dim", std::to_string(effective_hidden_dim()));
  kv("epochs", std::to_string(train.epochs));
  kv("learning_rate", d(train.learning_rate));
  kv("train_seed", std::to_string(train.seed));
  kv("eval_runs", std::to_string(eval_runs));
  kv("eval_policy", eval_policy == EvalPolicy::kGreedy ? "greedy" : "sample");
  kv("save_buffer", save_buffer ? "true" : "false");
  if (env == "cartpole") {
    kv("target_steps", std::to_string(target_steps));
  } else {
    kv("scheme", scheme);
    kv("dt", d(pursuit.kinematics.dt));
    kv("speed_min", d(pursuit.kinematics.speed_min));
    kv("speed_max", d(pursuit.kinematics.speed_max));
    kv("max_steps", std::to_string(pursuit.kinematics.max_steps));
    kv("desired_range", d(pursuit.mcgrew.desired_range));
    kv("k", d(pursuit.mcgrew.k));
    kv("blue_speed", d(pursuit.spawn.blue_speed));
    kv("position_jitter", d(pursuit.spawn.position_jitter));
    kv("heading_jitter", d(pursuit.spawn.heading_jitter));
    kv("scenarios", scenario_list);
    // Bin edges are recorded as comments; they follow from `scheme`.
    std::istringstream edges(make_scheme(*this).describe());
    std::string line;
    while (std::getline(edges, line)) os << "# " << line << '\n';
  }
  return os.str();
}

std::size_t TrialConfig::effective_hidden_dim() const {
  if (hidden_dim != 0) return hidden_dim;
  return env == "pursuit" ? 50 : 12;
}

// ---------------------------------------------------------------- factories

pursuit::DiscretizationScheme make_scheme(const TrialConfig& config) {
  return config.scheme == "reduced" ? pursuit::DiscretizationScheme::reduced()
                                    : pursuit::DiscretizationScheme::standard();
}

std::unique_ptr<Environment> make_environment(const TrialConfig& config,
                                              const std::optional<pursuit::OpponentScript>& scenario) {
  if (config.env == "cartpole") {
    cartpole::Params p;
    p.target_steps = config.target_steps;
    return std::make_unique<cartpole::Environment>(p);
  }
  if (config.env == "pursuit") {
    return std::make_unique<pursuit::Environment>(config.pursuit, make_scheme(config), scenario);
  }
  throw ValidationError("unknown environment '" + config.env + "'");
}

std::unique_ptr<Discretizer> make_discretizer(const TrialConfig& config) {
  if (config.env == "cartpole") return std::make_unique<cartpole::BoxDiscretizer>();
  if (config.env == "pursuit") {
    return std::make_unique<pursuit::GeometryDiscretizer>(make_scheme(config));
  }
  throw ValidationError("unknown environment '" + config.env + "'");
}

std::vector<Scenario> evaluation_scenarios(const TrialConfig& config) {
  std::vector<Scenario> out;
  if (config.env != "pursuit") {
    out.push_back({"", std::nullopt});
    return out;
  }
  if (config.scenario_files.empty()) {
    for (auto& s : pursuit::bundled_scenarios()) out.push_back({s.name, std::move(s.script)});
  } else {
    for (const auto& path : config.scenario_files) {
      out.push_back({scenario_name_from_path(path), pursuit::OpponentScript::load(path)});
    }
  }
  return out;
}

// ---------------------------------------------------------------- evaluation

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw UsageError("mean_of: empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw UsageError("median_of: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Controller greedy_controller(const ac::PolicyParams& theta,
                             std::shared_ptr<const Discretizer> discretizer) {
  if (discretizer->size() != theta.n_states()) {
    throw UsageError("greedy_controller: discretizer and policy disagree on state count");
  }
  auto policy = std::make_shared<const ac::PolicyParams>(theta);
  return [policy, discretizer](const ContinuousState& s) {
    return policy->best_action((*discretizer)(s));
  };
}

Controller sampling_controller(const ac::PolicyParams& theta,
                               std::shared_ptr<const Discretizer> discretizer, std::uint64_t seed) {
  if (discretizer->size() != theta.n_states()) {
    throw UsageError("sampling_controller: discretizer and policy disagree on state count");
  }
  auto policy = std::make_shared<const ac::PolicyParams>(theta);
  auto rng = std::make_shared<SeedStream>(seed);
  auto probs = std::make_shared<std::vector<double>>(theta.n_actions());
  return [policy, discretizer, rng, probs](const ContinuousState& s) {
    ac::policy_probabilities(policy->row((*discretizer)(s)), *probs);
    return ac::sample_action(*probs, *rng);
  };
}

Controller model_controller(std::shared_ptr<const nn::MlpModel> model) {
  return [model](const ContinuousState& s) { return nn::predict(*model, s); };
}

Controller random_controller(std::size_t n_actions, std::uint64_t seed) {
  auto rng = std::make_shared<SeedStream>(seed);
  return [rng, n_actions](const ContinuousState&) { return rng->below(n_actions); };
}

EvalReport evaluate_controller(const Controller& controller, Environment& env, std::size_t n_runs,
                               std::uint64_t seed_base) {
  if (n_runs == 0) throw UsageError("evaluate_controller: n_runs must be positive");
  Stopwatch watch;
  EvalReport report;
  for (std::size_t i = 0; i < n_runs; ++i) {
    SeedStream rng(seed_base + i);
    ContinuousState state = env.reset(rng);
    double total = 0.0;
    while (!env.terminal()) {
      StepOutcome out = env.step(controller(state));
      total += out.metric;
      state = std::move(out.next_state);
    }
    const std::size_t steps = env.steps_taken();
    const double score =
        env.score_rule() == ScoreRule::kTotal ? total : total / static_cast<double>(steps);
    report.scores.push_back(score);
    report.steps.push_back(steps);
    report.successes.push_back(env.succeeded());
    if (env.succeeded()) ++report.success_count;
  }
  report.mean = mean_of(report.scores);
  report.median = median_of(report.scores);
  report.seconds = watch.seconds();
  return report;
}

// ---------------------------------------------------------------- trials

std::string method_name_discrete(std::size_t episodes) {
  return "discrete_" + std::to_string(episodes);
}

std::uint64_t training_seed(std::uint64_t trial_seed) {
  return derive_seed(trial_seed, "reinforcement");
}

std::uint64_t evaluation_seed_base(std::uint64_t trial_seed) {
  std::uint64_t base = derive_seed(trial_seed, "evaluation");
  // Keep a window of a billion run seeds clear of the training seed.
  const std::uint64_t train = training_seed(trial_seed);
  if (train - base < 1'000'000'000ULL) base = train + 1'000'000'000ULL;
  return base;
}

bool is_timing_artifact(const std::string& filename) { return filename == "timing.csv"; }

TrialResult run_d2dspl_trial(const TrialConfig& config, std::uint64_t trial_seed) {
  config.validate();
  TrialResult result;
  result.trial_seed = trial_seed;
  result.trial_dir = (fs::path(config.out_dir) / ("trial_" + std::to_string(trial_seed))).string();
  const fs::path dir(result.trial_dir);
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");

  try {
    const std::size_t n = config.n_episodes;
    auto env = make_environment(config);
    std::shared_ptr<const Discretizer> disc = make_discretizer(config);
    const std::size_t n_sv = env->spec().n_state_vars;
    const std::size_t n_ds = env->spec().n_discrete_states;

    // (1) Discrete-n
    SeedStream train_rng(training_seed(trial_seed));
    Stopwatch w_rl;
    ac::PhaseResult base = ac::run_reinforcement_phase(*env, *disc, config.hyper, n, train_rng);
    result.timing.reinforcement = w_rl.seconds();

    // (2) Clone and keep learning for another n episodes -> Discrete-2n
    Stopwatch w_cont;
    ac::PhaseOptions no_buffer;
    no_buffer.keep_buffer = false;
    ac::PhaseResult extended =
        ac::run_reinforcement_phase(*env, *disc, config.hyper, n, train_rng, no_buffer, &base);
    result.timing.continuation = w_cont.seconds();

    // (3) Distill Discrete-n and train the network
    Stopwatch w_distill;
    distill::TrainingDataset dataset = distill::distill(base.buffer, base.theta, config.distill_fraction);
    result.timing.distill = w_distill.seconds();

    Stopwatch w_train;
    nn::TrainConfig tc = config.train;
    tc.seed = derive_seed(trial_seed, "classifier", config.train.seed);
    nn::TrainResult trained = nn::train(dataset, config.effective_hidden_dim(), tc);
    result.timing.classifier = w_train.seconds();
    auto model = std::make_shared<const nn::MlpModel>(trained.model);

    result.dataset_rows = dataset.size();
    result.classifier_accuracy = trained.model.meta.final_accuracy;
    result.classifier_loss = trained.model.meta.final_loss;

    // Artifacts from the learning phases.
    io::write_file((dir / "policy_discrete_n.json").string(), io::policy_to_json(base.theta, base.w));
    io::write_file((dir / "policy_discrete_2n.json").string(),
                   io::policy_to_json(extended.theta, extended.w));
    {
      std::ostringstream os;
      io::write_buffer_summary(os, base.buffer);
      io::write_file((dir / "buffer_summary.csv").string(), os.str());
    }
    if (config.save_buffer) {
      std::ostringstream os;
      io::write_buffer(os, base.buffer, n_ds, n_sv);
      io::write_file((dir / "buffer.txt").string(), os.str());
    }
    {
      std::ostringstream os;
      os << "phase,episode,total_reward,steps\n";
      for (std::size_t e = 0; e < base.episode_rewards.size(); ++e) {
        os << "reinforcement," << e << ',' << format_double(base.episode_rewards[e]) << ','
           << base.episode_lengths[e] << '\n';
      }
      for (std::size_t e = 0; e < extended.episode_rewards.size(); ++e) {
        os << "continuation," << n + e << ',' << format_double(extended.episode_rewards[e]) << ','
           << extended.episode_lengths[e] << '\n';
      }
      io::write_file((dir / "learning_curve.csv").string(), os.str());
    }
    {
      std::ostringstream os;
      dataset.write_csv(os);
      io::write_file((dir / "dataset.csv").string(), os.str());
    }
    model->save((dir / "model.json").string());
    result.dataset = std::move(dataset);

    // (4) Evaluate all three controllers on shared seeds.
    Stopwatch w_eval;
    const std::vector<Scenario> scenarios = evaluation_scenarios(config);
    result.discrete_n.method = method_name_discrete(n);
    result.discrete_2n.method = method_name_discrete(2 * n);
    result.d2dspl.method = "d2dspl";

    auto tabular = [&](const ac::PolicyParams& theta, std::uint64_t tag) {
      if (config.eval_policy == EvalPolicy::kSample) {
        return sampling_controller(theta, disc, derive_seed(trial_seed, "eval-sampling", tag));
      }
      return greedy_controller(theta, disc);
    };

    std::ostringstream report_csv;
    report_csv << "method,scenario,runs,mean,median,successes\n";
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
      const Scenario& sc = scenarios[si];
      result.scenario_names.push_back(sc.name);
      auto eval_env = make_environment(config, sc.script);
      const std::uint64_t seed_base = evaluation_seed_base(trial_seed) + si * config.eval_runs;

      const std::pair<MethodReports*, Controller> methods[] = {
          {&result.discrete_n, tabular(base.theta, 2 * si)},
          {&result.discrete_2n, tabular(extended.theta, 2 * si + 1)},
          {&result.d2dspl, model_controller(model)},
      };
      for (const auto& [reports, controller] : methods) {
        EvalReport r = evaluate_controller(controller, *eval_env, config.eval_runs, seed_base);
        io::write_file((dir / ("scores_" + reports->method + file_suffix(sc.name) + ".csv")).string(),
                       scores_csv(r, seed_base));
        report_csv << reports->method << ',' << sc.name << ',' << r.scores.size() << ','
                   << format_double(r.mean) << ',' << format_double(r.median) << ','
                   << r.success_count << '\n';
        reports->per_scenario.push_back(std::move(r));
      }
    }
    result.timing.evaluation = w_eval.seconds();
    io::write_file((dir / "report.csv").string(), report_csv.str());

    std::ostringstream timing;
    timing << "phase,seconds\n"
           << "reinforcement," << result.timing.reinforcement << '\n'
           << "continuation," << result.timing.continuation << '\n'
           << "distill," << result.timing.distill << '\n'
           << "classifier," << result.timing.classifier << '\n'
           << "evaluation," << result.timing.evaluation << '\n';
    io::write_file((dir / "timing.csv").string(), timing.str());
  } catch (const std::exception& e) {
    std::ofstream marker(dir / "FAILED");
    marker << e.what() << '\n';
    throw;
  }
  return result;
}

SuiteResult run_suite(const TrialConfig& config) {
  config.validate();
  const fs::path out(config.out_dir);
  fs::create_directories(out);
  io::write_file((out / "manifest.txt").string(), config.to_text());

  const std::size_t n_trials = config.seeds.size();
  std::vector<std::optional<TrialResult>> slots(n_trials);
  std::vector<std::string> errors(n_trials);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_trials; i = next++) {
      try {
        slots[i] = run_d2dspl_trial(config, config.seeds[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(config.threads, n_trials);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SuiteResult suite;
  for (std::size_t i = 0; i < n_trials; ++i) {
    if (slots[i]) suite.trials.push_back(std::move(*slots[i]));
    else suite.failures.emplace_back(config.seeds[i], errors[i]);
  }

  const std::string dn = method_name_discrete(config.n_episodes);
  const std::string d2n = method_name_discrete(2 * config.n_episodes);
  const std::vector<Scenario> scenarios =
      suite.trials.empty() ? std::vector<Scenario>{} : evaluation_scenarios(config);

  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    std::ostringstream os;
    os << "trial," << dn << ',' << d2n << ",d2dspl\n";
    std::vector<double> cols[3];
    for (const auto& t : suite.trials) {
      const double v[3] = {t.discrete_n.per_scenario[si].mean, t.discrete_2n.per_scenario[si].mean,
                           t.d2dspl.per_scenario[si].mean};
      os << t.trial_seed;
      for (int c = 0; c < 3; ++c) {
        os << ',' << format_double(v[c]);
        cols[c].push_back(v[c]);
      }
      os << '\n';
    }
    os << "Mean";
    for (auto& c : cols) os << ',' << format_double(mean_of(c));
    os << "\nMedian";
    for (auto& c : cols) os << ',' << format_double(median_of(c));
    os << '\n';
    io::write_file((out / ("summary" + file_suffix(scenarios[si].name) + ".csv")).string(), os.str());

    if (config.env == "cartpole") {
      std::ostringstream ss;
      ss << "trial," << dn << ',' << d2n << ",d2dspl\n";
      for (const auto& t : suite.trials) {
        ss << t.trial_seed << ',' << t.discrete_n.per_scenario[si].success_count << ','
           << t.discrete_2n.per_scenario[si].success_count << ','
           << t.d2dspl.per_scenario[si].success_count << '\n';
      }
      io::write_file((out / "successes.csv").string(), ss.str());
    }
  }

  if (!suite.trials.empty()) {
    // Learning time per method relative to the Discrete-n mean.
    std::vector<double> base_times;
    for (const auto& t : suite.trials) base_times.push_back(t.timing.reinforcement);
    const double ref = mean_of(base_times);
    auto rel = [&](double s) { return ref > 0 ? s / ref : 0.0; };
    std::ostringstream os;
    os << "trial," << dn << "_s," << d2n << "_s,d2dspl_s," << dn << "_rel," << d2n
       << "_rel,d2dspl_rel\n";
    for (const auto& t : suite.trials) {
      const double a = t.timing.reinforcement;
      const double b = a + t.timing.continuation;
      const double c = a + t.timing.distill + t.timing.classifier;
      os << t.trial_seed << ',' << a << ',' << b << ',' << c << ',' << rel(a) << ',' << rel(b) << ','
         << rel(c) << '\n';
    }
    io::write_file((out / "timing.csv").string(), os.str());
  }

  const fs::path failures = out / "failures.csv";
  if (!suite.failures.empty()) {
    std::ostringstream os;
    os << "trial,error\n";
    for (const auto& [seed, msg] : suite.failures) os << seed << ",\"" << msg << "\"\n";
    io::write_file(failures.string(), os.str());
  } else {
    fs::remove(failures);
  }
  return suite;
}

}  // namespace d2dspl::harness
