#ifndef DISPCOMP_IO_HPP
#define DISPCOMP_IO_HPP

// Run configuration (JSON), observation and table files (CSV), structured
// reports (JSON) and seeded synthetic observations.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dispcomp/beam.hpp"
#include "dispcomp/compensation.hpp"
#include "dispcomp/fit.hpp"
#include "dispcomp/phase.hpp"

namespace dispcomp::io {

/// Malformed input. The message names the source, line (when known) and field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitConfig {
  bool include_sagnac = true;
  int max_iterations = 200;
  bool chi2_scaling = true;
};

struct SyntheticDesign {
  std::vector<double> voltages;        // V
  double phase_sigma_base = 0.01;      // rad
  double phase_sigma_per_rad = 0.0;    // extra sigma per rad of true phase
  double vis_sigma = 0.01;
  double rotation_jitter = 0.0;        // rad/s, white, added to Omega_y per point
  /// When false the recorded sigmas are kept but no noise is drawn.
  bool add_noise = true;

  void validate() const;
};

struct RunConfig {
  Geometry geometry{9.364e6, 0.605, 0.0};
  Capacitor capacitor{1.0, -1};
  Beam beam{1065.7, 7.67};
  AveragingOptions averaging;
  FitConfig fit;
  std::uint64_t rng_seed = 0;
  double v0 = 1.0;
  double coeff_per_U2 = 1.388e-4;      // rad/V^2, used to simulate
  std::optional<double> alpha;         // m^3
  double prism_index = 1.46;
  SyntheticDesign synthetic;
};

RunConfig parse_config(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::string& path);

/// Earth-Sagnac amplitude at u for the configured geometry and beam.
double sagnac_amplitude(const RunConfig& config);

/// Context for fitting: u, Sagnac amplitude (or 0), v0 and averaging.
ObservationSet make_observation_set(const RunConfig& config, std::vector<Observation> observations,
                                    bool include_sagnac);

// ---------------------------------------------------------------------------
// CSV

/// Header plus rows of numbers, written with 17 significant digits.
struct NumericTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

std::string format_number(double value);
double parse_number(std::string_view text, std::string_view source, int line, std::string_view field);

void write_table(std::ostream& out, const NumericTable& table);
/// Reads a table; when expected_columns is non-empty the header must match it.
NumericTable read_table(std::istream& in, std::string_view source,
                        const std::vector<std::string>& expected_columns = {});

void write_table_file(const std::string& path, const NumericTable& table);
NumericTable read_table_file(const std::string& path, const std::vector<std::string>& expected_columns = {});

/// U_volts,phase_rad,phase_sigma_rad,vis_ratio,vis_sigma
const std::vector<std::string>& observation_columns();

void write_observations(std::ostream& out, const std::vector<Observation>& observations);
std::vector<Observation> read_observations(std::istream& in, std::string_view source);
void write_observations_file(const std::string& path, const std::vector<Observation>& observations);
std::vector<Observation> read_observations_file(const std::string& path);

// ---------------------------------------------------------------------------
// JSON reports

nlohmann::json fit_report(const FitResult& result, const ObservationSet& set);
FitResult fit_result_from_report(const nlohmann::json& report);

nlohmann::json plan_report(const CompensationPlan& plan);
CompensationPlan plan_from_report(const nlohmann::json& report);

/// Pretty-printed JSON with a trailing newline.
std::string dump(const nlohmann::json& doc);
void write_json_file(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic data

/// Model observations at the configured truth (beam S, coeff, Earth Sagnac
/// term) with independent Gaussian noise drawn from rng_seed.
ObservationSet generate_synthetic(const RunConfig& config, const SyntheticDesign& design);

}  // namespace dispcomp::io

#endif  // DISPCOMP_IO_HPP
