#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capmass/capacity.hpp"
#include "capmass/error.hpp"
#include "capmass/manifold.hpp"
#include "capmass/mass.hpp"
#include "capmass/regions.hpp"

namespace capmass {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Flat key = value configuration. Unknown keys are Config errors; later
/// assignments override earlier ones.
class Config {
 public:
  static const std::vector<ConfigKey>& keys();

  void set(const std::string& key, const std::string& value);
  /// Parses "key=value" (as given to --set).
  void set_assignment(const std::string& assignment);
  void load_file(const std::string& path);
  void load_string(const std::string& text, const std::string& source = "<string>");

  std::string get(const std::string& key) const;   // value or default
  bool is_set(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& explicit_values() const { return values_; }

  /// Every key with its effective value, sorted, one "key=value" per line.
  std::string canonical() const;
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& text);

struct Scenario {
  std::string metric_kind = "euclidean";
  double metric_mass = 0.0;
  int dimension = 3;
  double metric_scale = 1.0;
  std::vector<PointMass> poles;

  std::string region_shape = "ball";
  std::vector<double> region_params{1.0};
  std::vector<HarmonicTerm> harmonics;
  bool profile_abs = true;

  ExhaustionSpec exhaustion;
  std::uint64_t seed = 20240601;
  DeficitOptions deficit;
  std::string backends = "auto";
  double exponent = 1.0;
  std::vector<std::string> checks;

  std::string output_dir = "capmass-out";
  std::string output_name = "report";
  std::string output_field = "none";

  std::string sweep_key;
  std::vector<std::string> sweep_values;
  std::string sweep_command = "convergence";
};

/// Typed and range-checked view of a configuration. Throws Config errors.
Scenario parse_scenario(const Config& cfg);

MetricModel build_metric(const Scenario& s);
Region build_region(const Scenario& s);

using LineSink = std::function<void(const std::string&)>;

struct RunFlags {
  bool fast = false;
  int threads = 0;
};

/// Exit codes of the command runners.
enum ExitCode : int { kExitOk = 0, kExitFailed = 1, kExitConfig = 2, kExitSolver = 3 };

int exit_code_for(ErrorCode code);

/// Runs capacity, deficit, convergence, sweep or verify. Never throws; errors
/// are reported through `out` and mapped to exit codes.
int run_command(const std::string& command, const Config& cfg, const RunFlags& flags, const LineSink& out);

}  // namespace capmass
