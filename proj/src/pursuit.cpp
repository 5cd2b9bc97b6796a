#include "d2dspl/pursuit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace d2dspl::pursuit {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Unsigned angle between two planar vectors, degrees in [0, 180].
double angle_between(double ax, double ay, double bx, double by) {
  const double cross = ax * by - ay * bx;
  const double dot = ax * bx + ay * by;
  return std::clamp(std::atan2(std::abs(cross), dot) * kRadToDeg, 0.0, 180.0);
}

std::size_t bin_of(double v, const std::vector<double>& edges) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

void check_edges(const std::vector<double>& edges, const char* what) {
  for (double e : edges) {
    if (!std::isfinite(e)) throw ValidationError(std::string(what) + " edges must be finite");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw ValidationError(std::string(what) + " edges must be strictly increasing");
    }
  }
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t regions) {
  std::vector<double> edges;
  const double w = (hi - lo) / static_cast<double>(regions);
  for (std::size_t i = 1; i < regions; ++i) edges.push_back(lo + w * static_cast<double>(i));
  return edges;
}

void advance(AircraftState& a, double dt) {
  const double rad = a.heading * kDegToRad;
  a.x += a.speed * dt * std::cos(rad);
  a.y += a.speed * dt * std::sin(rad);
}

// Random sign, magnitude in (0, jitter]. A zero jitter yields exactly zero.
double perturbation(SeedStream& rng, double jitter) {
  const double magnitude = jitter * (1.0 - rng.uniform());
  return rng.coin() ? magnitude : -magnitude;
}

std::string edges_string(const std::vector<double>& edges) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < edges.size(); ++i) os << (i ? " " : "") << edges[i];
  return os.str();
}

}  // namespace

RelativeGeometry RelativeGeometry::from_vector(const ContinuousState& v) {
  if (v.size() != kNumStateVars) throw UsageError("pursuit state needs 4 variables");
  return {v[0], v[1], v[2], v[3]};
}

void McGrewParams::validate() const {
  if (!(desired_range > 0 && k > 0)) throw ValidationError("McGrew R_d and k must be positive");
}

void Kinematics::validate() const {
  if (!(dt > 0)) throw ValidationError("pursuit dt must be positive");
  if (!(speed_min > 0 && speed_max >= speed_min)) {
    throw ValidationError("pursuit speed limits must satisfy 0 < min <= max");
  }
  if (max_steps == 0) throw ValidationError("pursuit max_steps must be positive");
}

ScriptSegment OpponentScript::active(std::size_t t) const {
  ScriptSegment current{0, 0.0, 0.0};
  for (const auto& seg : segments) {
    if (seg.start_step > t) break;
    current = seg;
  }
  return current;
}

void OpponentScript::validate() const {
  if (!(std::isfinite(initial.x) && std::isfinite(initial.y) && std::isfinite(initial.heading) &&
        initial.speed > 0 && std::isfinite(initial.speed))) {
    throw ValidationError("opponent script: invalid initial state");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!std::isfinite(segments[i].heading_rate) || !std::isfinite(segments[i].speed_rate)) {
      throw ValidationError("opponent script: non-finite segment rate");
    }
    if (i > 0 && segments[i].start_step <= segments[i - 1].start_step) {
      throw ValidationError("opponent script: segments must be sorted by start_step without overlap");
    }
  }
}

OpponentScript OpponentScript::parse(std::istream& in) {
  OpponentScript script;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    if (!have_header) {
      AircraftState& s = script.initial;
      if (!(ls >> s.x >> s.y >> s.heading >> s.speed)) {
        throw ValidationError("scenario line " + std::to_string(line_no) +
                              ": expected `x y heading speed`");
      }
      s.heading = wrap_heading(s.heading);
      have_header = true;
    } else {
      ScriptSegment seg;
      long long start = -1;
      if (!(ls >> start >> seg.heading_rate >> seg.speed_rate) || start < 0) {
        throw ValidationError("scenario line " + std::to_string(line_no) +
                              ": expected `start_step heading_rate speed_rate`");
      }
      seg.start_step = static_cast<std::size_t>(start);
      script.segments.push_back(seg);
    }
    std::string extra;
    if (ls >> extra) {
      throw ValidationError("scenario line " + std::to_string(line_no) + ": trailing fields");
    }
  }
  if (!have_header) throw ValidationError("scenario: missing initial-state header line");
  script.validate();
  return script;
}

OpponentScript OpponentScript::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file: " + path);
  return parse(in);
}

void OpponentScript::write(std::ostream& out) const {
  const auto old = out.precision(17);
  out << initial.x << ' ' << initial.y << ' ' << initial.heading << ' ' << initial.speed << '\n';
  for (const auto& seg : segments) {
    out << seg.start_step << ' ' << seg.heading_rate << ' ' << seg.speed_rate << '\n';
  }
  out.precision(old);
}

OpponentScript straight_line(const AircraftState& initial) {
  return OpponentScript{initial, {ScriptSegment{0, 0.0, 0.0}}};
}

DiscretizationScheme::DiscretizationScheme(std::vector<double> range_edges,
                                           std::vector<double> aa_edges,
                                           std::vector<double> ata_edges,
                                           std::vector<double> speed_diff_edges)
    : range_edges_(std::move(range_edges)),
      aa_edges_(std::move(aa_edges)),
      ata_edges_(std::move(ata_edges)),
      speed_diff_edges_(std::move(speed_diff_edges)) {
  check_edges(range_edges_, "range");
  check_edges(aa_edges_, "AA");
  check_edges(ata_edges_, "ATA");
  check_edges(speed_diff_edges_, "speed difference");
}

DiscretizationScheme DiscretizationScheme::standard() {
  return DiscretizationScheme({150, 250, 350, 450, 550, 700, 900, 1100, 1400, 1700, 2100, 2600, 3200},
                              uniform_edges(0, 180, 10), uniform_edges(0, 180, 10),
                              uniform_edges(-50, 50, 10));
}

DiscretizationScheme DiscretizationScheme::reduced() {
  return DiscretizationScheme({250, 350, 450, 700, 1100, 1700}, uniform_edges(0, 180, 5),
                              uniform_edges(0, 180, 5), uniform_edges(-50, 50, 5));
}

std::size_t DiscretizationScheme::size() const {
  return range_regions() * aa_regions() * ata_regions() * speed_diff_regions();
}

DiscreteIndex DiscretizationScheme::index(const RelativeGeometry& g) const {
  const std::size_t r = bin_of(g.range, range_edges_);
  const std::size_t aa = bin_of(g.aa, aa_edges_);
  const std::size_t ata = bin_of(g.ata, ata_edges_);
  const std::size_t dv = bin_of(g.speed_diff, speed_diff_edges_);
  return ((r * aa_regions() + aa) * ata_regions() + ata) * speed_diff_regions() + dv;
}

std::string DiscretizationScheme::describe() const {
  return "range_edges=" + edges_string(range_edges_) + "\naa_edges=" + edges_string(aa_edges_) +
         "\nata_edges=" + edges_string(ata_edges_) +
         "\nspeed_diff_edges=" + edges_string(speed_diff_edges_) + "\n";
}

double wrap_heading(double deg) {
  double h = std::fmod(deg, 360.0);
  if (h < 0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

RelativeGeometry relative_geometry(const AircraftState& blue, const AircraftState& red) {
  const double dx = red.x - blue.x;
  const double dy = red.y - blue.y;
  if (dx == 0.0 && dy == 0.0) {
    throw UsageError("relative_geometry: aircraft positions coincide");
  }
  const double b_rad = blue.heading * kDegToRad;
  const double r_rad = red.heading * kDegToRad;

  RelativeGeometry g;
  g.range = std::hypot(dx, dy);
  g.ata = angle_between(std::cos(b_rad), std::sin(b_rad), dx, dy);
  // Red's tail points back along -nose; the angle between the blue->red LOS
  // and that tail, measured from the tail side, equals the angle between
  // red's nose and the LOS.
  g.aa = angle_between(std::cos(r_rad), std::sin(r_rad), dx, dy);
  g.speed_diff = blue.speed - red.speed;
  return g;
}

double mcgrew_angular(double aa, double ata) {
  if (!(aa >= 0.0 && aa <= 180.0 && ata >= 0.0 && ata <= 180.0)) {
    throw UsageError("mcgrew_angular: angles must lie in [0, 180] degrees");
  }
  return 0.5 * ((1.0 - aa / 180.0) + (1.0 - ata / 180.0));
}

double mcgrew_range(double range, const McGrewParams& params) {
  if (!(range >= 0.0)) throw UsageError("mcgrew_range: range must be non-negative");
  return std::exp(-std::abs(range - params.desired_range) / (params.k * 180.0));
}

double mcgrew_score(const RelativeGeometry& g, const McGrewParams& params) {
  return mcgrew_angular(g.aa, g.ata) * mcgrew_range(g.range, params);
}

double reward(const RelativeGeometry& g, const McGrewParams& params) {
  return mcgrew_score(g, params) - 0.5;
}

StepResult step(const AircraftState& blue, const AircraftState& red, Action action,
                const OpponentScript& script, std::size_t t, const Kinematics& kin,
                const McGrewParams& mcgrew) {
  if (static_cast<std::size_t>(action) >= kNumActions) {
    throw UsageError("pursuit step: invalid action");
  }
  StepResult r{blue, red, {}, 0.0, {}};

  switch (action) {
    case Action::kDoNothing:
      break;
    case Action::kTurnLeft10:
      r.blue.heading = wrap_heading(r.blue.heading + 10.0);
      break;
    case Action::kTurnRight10:
      r.blue.heading = wrap_heading(r.blue.heading - 10.0);
      break;
    case Action::kSpeedUp10pct:
      r.blue.speed = std::clamp(r.blue.speed * 1.1, kin.speed_min, kin.speed_max);
      break;
    case Action::kSlowDown10pct:
      r.blue.speed = std::clamp(r.blue.speed * 0.9, kin.speed_min, kin.speed_max);
      break;
  }

  const ScriptSegment cmd = script.active(t);
  r.red.heading = wrap_heading(r.red.heading + cmd.heading_rate);
  r.red.speed = std::clamp(r.red.speed * (1.0 + cmd.speed_rate), kin.speed_min, kin.speed_max);

  advance(r.blue, kin.dt);
  advance(r.red, kin.dt);

  r.geometry = relative_geometry(r.blue, r.red);
  r.mcgrew = mcgrew_score(r.geometry, mcgrew);
  r.outcome.next_state = r.geometry.to_vector();
  r.outcome.reward = r.mcgrew - 0.5;
  r.outcome.metric = r.mcgrew;
  r.outcome.terminal = t + 1 >= kin.max_steps;
  return r;
}

DiscreteIndex discretize(const RelativeGeometry& g, const DiscretizationScheme& scheme) {
  return scheme.index(g);
}

Spawn spawn_training_episode(SeedStream& rng, const SpawnParams& params) {
  return spawn_scenario(rng, straight_line(params.red_nominal), params);
}

Spawn spawn_scenario(SeedStream& rng, const OpponentScript& scenario, const SpawnParams& params) {
  Spawn s;
  s.blue = AircraftState{0.0, 0.0, 0.0, params.blue_speed};
  s.red = scenario.initial;
  s.red.x += perturbation(rng, params.position_jitter);
  s.red.y += perturbation(rng, params.position_jitter);
  s.red.heading = wrap_heading(s.red.heading + perturbation(rng, params.heading_jitter));
  s.script = scenario;
  s.script.initial = s.red;
  return s;
}

Environment::Environment(Config config, const DiscretizationScheme& scheme,
                         std::optional<OpponentScript> scenario)
    : config_(config), scenario_(std::move(scenario)) {
  config_.kinematics.validate();
  config_.mcgrew.validate();
  if (scenario_) scenario_->validate();
  spec_ = {"pursuit", kNumStateVars, kNumActions, scheme.size(), config_.kinematics.max_steps};
}

std::unique_ptr<d2dspl::Environment> Environment::clone() const {
  return std::make_unique<Environment>(*this);
}

ContinuousState Environment::do_reset(SeedStream& rng) {
  Spawn s = scenario_ ? spawn_scenario(rng, *scenario_, config_.spawn)
                      : spawn_training_episode(rng, config_.spawn);
  blue_ = s.blue;
  red_ = s.red;
  script_ = std::move(s.script);
  return relative_geometry(blue_, red_).to_vector();
}

StepOutcome Environment::do_step(ActionId action, std::size_t step_index) {
  StepResult r = pursuit::step(blue_, red_, static_cast<Action>(action), script_, step_index,
                      config_.kinematics, config_.mcgrew);
  blue_ = r.blue;
  red_ = r.red;
  return std::move(r.outcome);
}

std::vector<NamedScenario> bundled_scenarios() {
  const AircraftState start{1500.0, 300.0, 50.0, 125.0};
  return {
      {"straight", straight_line(AircraftState{1200.0, -400.0, 20.0, 125.0})},
      {"gentle_turn", OpponentScript{start, {{0, 1.0, 0.0}}}},
      {"s_turn", OpponentScript{start, {{0, 2.0, 0.0}, {120, -2.0, 0.0}, {300, 2.0, 0.0},
                                        {480, -2.0, 0.0}, {640, 2.0, 0.0}}}},
      {"u_turn", OpponentScript{start, {{0, 0.0, 0.0}, {150, 4.0, 0.0}, {195, 0.0, 0.0}}}},
  };
}

}  // namespace d2dspl::pursuit
