#ifndef D2DSPL_PURSUIT_HPP
#define D2DSPL_PURSUIT_HPP

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "d2dspl/envcore.hpp"

// Two-dimensional pure-pursuit between a learning (blue) aircraft and a
// scripted (red) opponent. Frame: X east, Y north, headings in degrees
// counter-clockwise from +X.
namespace d2dspl::pursuit {

inline constexpr std::size_t kNumStateVars = 4;
inline constexpr std::size_t kNumActions = 5;

enum class Action : std::size_t {
  kDoNothing = 0,
  kTurnLeft10 = 1,
  kTurnRight10 = 2,
  kSpeedUp10pct = 3,
  kSlowDown10pct = 4,
};

struct AircraftState {
  double x = 0.0;        // m
  double y = 0.0;        // m
  double heading = 0.0;  // deg in [0, 360)
  double speed = 0.0;    // m/s
};

struct RelativeGeometry {
  double range = 0.0;       // m
  double aa = 0.0;          // aspect angle, deg in [0, 180]
  double ata = 0.0;         // antenna train angle, deg in [0, 180]
  double speed_diff = 0.0;  // blue minus red, m/s

  ContinuousState to_vector() const { return {range, aa, ata, speed_diff}; }
  static RelativeGeometry from_vector(const ContinuousState& v);
};

struct McGrewParams {
  double desired_range = 380.0;  // m
  double k = 5.0;

  void validate() const;
};

struct Kinematics {
  double dt = 0.5;  // s
  double speed_min = 50.0;
  double speed_max = 400.0;
  std::size_t max_steps = 700;

  void validate() const;
};

// Red's commanded rates from `start_step` until the next segment begins.
struct ScriptSegment {
  std::size_t start_step = 0;
  double heading_rate = 0.0;  // deg per step
  double speed_rate = 0.0;    // fractional speed change per step
};

struct OpponentScript {
  AircraftState initial;
  std::vector<ScriptSegment> segments;

  // Segment in force at step t; all-zero rates before the first segment.
  ScriptSegment active(std::size_t t) const;
  void validate() const;

  // Plain-text scenario format: a header line `x y heading speed`, then one
  // `start_step heading_rate speed_rate` line per segment. Blank lines and
  // lines starting with '#' are ignored.
  static OpponentScript parse(std::istream& in);
  static OpponentScript load(const std::string& path);
  void write(std::ostream& out) const;
};

// Straight flight at constant speed from `initial`.
OpponentScript straight_line(const AircraftState& initial);

class DiscretizationScheme {
 public:
  DiscretizationScheme(std::vector<double> range_edges, std::vector<double> aa_edges,
                       std::vector<double> ata_edges, std::vector<double> speed_diff_edges);

  // 14 x 10 x 10 x 10 regions, range bins denser near the desired range.
  static DiscretizationScheme standard();
  // 7 x 5 x 5 x 5 regions for quick experiments.
  static DiscretizationScheme reduced();

  const std::vector<double>& range_edges() const { return range_edges_; }
  const std::vector<double>& aa_edges() const { return aa_edges_; }
  const std::vector<double>& ata_edges() const { return ata_edges_; }
  const std::vector<double>& speed_diff_edges() const { return speed_diff_edges_; }

  std::size_t range_regions() const { return range_edges_.size() + 1; }
  std::size_t aa_regions() const { return aa_edges_.size() + 1; }
  std::size_t ata_regions() const { return ata_edges_.size() + 1; }
  std::size_t speed_diff_regions() const { return speed_diff_edges_.size() + 1; }
  std::size_t size() const;

  // Mixed-radix flat index, range most significant. Values beyond the
  // outermost edges clamp into the outermost bins.
  DiscreteIndex index(const RelativeGeometry& g) const;

  std::string describe() const;

 private:
  std::vector<double> range_edges_;
  std::vector<double> aa_edges_;
  std::vector<double> ata_edges_;
  std::vector<double> speed_diff_edges_;
};

struct SpawnParams {
  AircraftState red_nominal{1500.0, 300.0, 50.0, 125.0};
  double blue_speed = 125.0;
  double position_jitter = 50.0;  // max |delta| in m
  double heading_jitter = 5.0;    // max |delta| in deg
};

struct Spawn {
  AircraftState blue;
  AircraftState red;
  OpponentScript script;
};

double wrap_heading(double deg);

// Throws UsageError when the aircraft coincide.
RelativeGeometry relative_geometry(const AircraftState& blue, const AircraftState& red);

double mcgrew_angular(double aa, double ata);
double mcgrew_range(double range, const McGrewParams& params);
double mcgrew_score(const RelativeGeometry& g, const McGrewParams& params);
// McGrew score offset by -0.5.
double reward(const RelativeGeometry& g, const McGrewParams& params);

struct StepResult {
  AircraftState blue;
  AircraftState red;
  RelativeGeometry geometry;
  double mcgrew = 0.0;
  StepOutcome outcome;
};

// Applies blue's action and red's scripted rates at step t, then advances
// both aircraft by speed * dt along their headings. Reward is taken from
// the post-move geometry; terminal when t + 1 reaches max_steps.
StepResult step(const AircraftState& blue, const AircraftState& red, Action action,
                const OpponentScript& script, std::size_t t, const Kinematics& kin,
                const McGrewParams& mcgrew);

DiscreteIndex discretize(const RelativeGeometry& g, const DiscretizationScheme& scheme);

// Blue at the origin heading along +X; red near the nominal start with a
// random sign and a magnitude in (0, jitter] on each of x, y and heading,
// flying straight.
Spawn spawn_training_episode(SeedStream& rng, const SpawnParams& params = {});

// Same perturbation applied to a scenario's own initial red state.
Spawn spawn_scenario(SeedStream& rng, const OpponentScript& scenario,
                     const SpawnParams& params = {});

struct Config {
  Kinematics kinematics;
  McGrewParams mcgrew;
  SpawnParams spawn;
};

class Environment final : public d2dspl::Environment {
 public:
  // Without a scenario every episode uses the straight-flying training spawn.
  Environment(Config config, const DiscretizationScheme& scheme,
              std::optional<OpponentScript> scenario = std::nullopt);

  const EnvironmentSpec& spec() const override { return spec_; }
  ScoreRule score_rule() const override { return ScoreRule::kMean; }
  std::unique_ptr<d2dspl::Environment> clone() const override;

  const AircraftState& blue() const { return blue_; }
  const AircraftState& red() const { return red_; }
  const Config& config() const { return config_; }

 protected:
  ContinuousState do_reset(SeedStream& rng) override;
  StepOutcome do_step(ActionId action, std::size_t step_index) override;

 private:
  Config config_;
  EnvironmentSpec spec_;
  std::optional<OpponentScript> scenario_;
  AircraftState blue_;
  AircraftState red_;
  OpponentScript script_;
};

class GeometryDiscretizer final : public Discretizer {
 public:
  explicit GeometryDiscretizer(DiscretizationScheme scheme) : scheme_(std::move(scheme)) {}
  std::size_t size() const override { return scheme_.size(); }
  DiscreteIndex operator()(const ContinuousState& state) const override {
    return discretize(RelativeGeometry::from_vector(state), scheme_);
  }
  const DiscretizationScheme& scheme() const { return scheme_; }

 private:
  DiscretizationScheme scheme_;
};

// Bundled test opponents: straight line, gentle turn, S-turn, U-turn.
struct NamedScenario {
  std::string name;
  OpponentScript script;
};
std::vector<NamedScenario> bundled_scenarios();

}  // namespace d2dspl::pursuit

#endif  // D2DSPL_PURSUIT_HPP
