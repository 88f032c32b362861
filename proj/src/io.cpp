#include "dispcomp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "dispcomp/fringe.hpp"

namespace dispcomp::io {

using nlohmann::json;

namespace {

constexpr double kDegree = constants::pi<double> / 180.0;

const json& member(const json& doc, std::string_view path, const char* key) {
  if (!doc.is_object()) throw ParseError("config: " + std::string(path) + ": expected an object");
  const auto it = doc.find(key);
  if (it == doc.end()) throw ParseError("config: " + std::string(path) + "." + key + ": missing");
  return *it;
}

double number_at(const json& doc, std::string_view path, const char* key) {
  const json& v = member(doc, path, key);
  if (!v.is_number()) throw ParseError("config: " + std::string(path) + "." + key + ": expected a number");
  return v.get<double>();
}

double number_or(const json& doc, std::string_view path, const char* key, double fallback) {
  return doc.contains(key) ? number_at(doc, path, key) : fallback;
}

bool bool_or(const json& doc, std::string_view path, const char* key, bool fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_boolean()) throw ParseError("config: " + std::string(path) + "." + key + ": expected true or false");
  return v.get<bool>();
}

std::int64_t integer_or(const json& doc, std::string_view path, const char* key, std::int64_t fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_number_integer())
    throw ParseError("config: " + std::string(path) + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

template <typename F>
auto with_context(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ParseError("config: " + std::string(what) + ": " + e.what());
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

const json& report_member(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("report: ") + key + ": missing");
  return *it;
}

double report_number(const json& doc, const char* key) {
  const json& v = report_member(doc, key);
  if (!v.is_number()) throw ParseError(std::string("report: ") + key + ": expected a number");
  return v.get<double>();
}

}  // namespace

void SyntheticDesign::validate() const {
  if (!(phase_sigma_base >= 0) || !(phase_sigma_per_rad >= 0) || !(vis_sigma >= 0) || !(rotation_jitter >= 0))
    throw std::invalid_argument("synthetic design: sigmas must be non-negative");
  std::set<double> seen;
  for (double v : voltages)
    if (!seen.insert(v).second) throw std::invalid_argument("synthetic design: voltages must be distinct");
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ParseError("config: expected a JSON object at top level");
  RunConfig config;

  const json& g = member(doc, "config", "geometry");
  config.geometry.k_laser = number_at(g, "geometry", "k_laser_per_m");
  config.geometry.grating_separation_L = number_at(g, "geometry", "L_m");
  config.geometry.latitude = number_at(g, "geometry", "latitude_deg") * kDegree;
  config.geometry.earth_rotation_rate =
      number_or(g, "geometry", "earth_rotation_rate_rad_per_s", constants::earth_rotation_rate<double>);
  with_context("geometry", [&] { config.geometry.validate(); return 0; });
  config.capacitor.geometry_factor_G = number_at(g, "geometry", "geometry_factor_G_per_m");
  config.capacitor.sign = static_cast<int>(integer_or(g, "geometry", "arm_sign", -1));
  with_context("geometry", [&] { config.capacitor.validate(); return 0; });

  const json& b = member(doc, "config", "beam");
  config.beam = with_context("beam", [&] {
    return Beam(number_at(b, "beam", "u_m_per_s"), number_at(b, "beam", "s_parallel"));
  });

  if (doc.contains("averaging")) {
    const json& a = doc.at("averaging");
    config.averaging.width_sigmas = number_or(a, "averaging", "width_sigmas", 8.0);
    config.averaging.node_count = static_cast<int>(integer_or(a, "averaging", "node_count", 257));
    if (!(config.averaging.width_sigmas > 0)) throw ParseError("config: averaging.width_sigmas: must be positive");
    if (config.averaging.node_count < 32) throw ParseError("config: averaging.node_count: must be at least 32");
  }
  if (doc.contains("fit")) {
    const json& f = doc.at("fit");
    config.fit.include_sagnac = bool_or(f, "fit", "include_sagnac", true);
    config.fit.max_iterations = static_cast<int>(integer_or(f, "fit", "max_iterations", 200));
    config.fit.chi2_scaling = bool_or(f, "fit", "chi2_scaling", true);
    if (config.fit.max_iterations < 1) throw ParseError("config: fit.max_iterations: must be positive");
  }
  if (doc.contains("rng_seed")) {
    const json& s = doc.at("rng_seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ParseError("config: rng_seed: expected a non-negative integer");
    config.rng_seed = s.get<std::uint64_t>();
  }
  config.v0 = number_or(doc, "config", "v0", 1.0);
  if (!(config.v0 > 0 && config.v0 <= 1)) throw ParseError("config: v0: must lie in (0, 1]");
  config.coeff_per_U2 = number_or(doc, "config", "coeff_rad_per_V2", config.coeff_per_U2);
  if (doc.contains("alpha_m3")) config.alpha = number_at(doc, "config", "alpha_m3");
  config.prism_index = number_or(doc, "config", "prism_index", 1.46);
  if (!(config.prism_index >= 1)) throw ParseError("config: prism_index: must be >= 1");

  if (doc.contains("synthetic")) {
    const json& s = doc.at("synthetic");
    const json& volts = member(s, "synthetic", "voltages_V");
    if (!volts.is_array()) throw ParseError("config: synthetic.voltages_V: expected an array");
    for (std::size_t i = 0; i < volts.size(); ++i) {
      if (!volts[i].is_number())
        throw ParseError("config: synthetic.voltages_V[" + std::to_string(i) + "]: expected a number");
      config.synthetic.voltages.push_back(volts[i].get<double>());
    }
    config.synthetic.phase_sigma_base = number_or(s, "synthetic", "phase_sigma_base_rad", 0.01);
    config.synthetic.phase_sigma_per_rad = number_or(s, "synthetic", "phase_sigma_per_rad", 0.0);
    config.synthetic.vis_sigma = number_or(s, "synthetic", "vis_sigma", 0.01);
    config.synthetic.rotation_jitter = number_or(s, "synthetic", "rotation_jitter_rad_per_s", 0.0);
    config.synthetic.add_noise = bool_or(s, "synthetic", "add_noise", true);
    with_context("synthetic", [&] { config.synthetic.validate(); return 0; });
  }
  return config;
}

json config_to_json(const RunConfig& config) {
  json doc;
  doc["geometry"] = {
      {"k_laser_per_m", config.geometry.k_laser},
      {"L_m", config.geometry.grating_separation_L},
      {"latitude_deg", config.geometry.latitude / kDegree},
      {"earth_rotation_rate_rad_per_s", config.geometry.earth_rotation_rate},
      {"geometry_factor_G_per_m", config.capacitor.geometry_factor_G},
      {"arm_sign", config.capacitor.sign},
  };
  doc["beam"] = {{"u_m_per_s", config.beam.u()}, {"s_parallel", config.beam.s_parallel()}};
  doc["averaging"] = {{"width_sigmas", config.averaging.width_sigmas},
                      {"node_count", config.averaging.node_count}};
  doc["fit"] = {{"include_sagnac", config.fit.include_sagnac},
                {"max_iterations", config.fit.max_iterations},
                {"chi2_scaling", config.fit.chi2_scaling}};
  doc["rng_seed"] = config.rng_seed;
  doc["v0"] = config.v0;
  doc["coeff_rad_per_V2"] = config.coeff_per_U2;
  if (config.alpha) doc["alpha_m3"] = *config.alpha;
  doc["prism_index"] = config.prism_index;
  doc["synthetic"] = {{"voltages_V", config.synthetic.voltages},
                      {"phase_sigma_base_rad", config.synthetic.phase_sigma_base},
                      {"phase_sigma_per_rad", config.synthetic.phase_sigma_per_rad},
                      {"vis_sigma", config.synthetic.vis_sigma},
                      {"rotation_jitter_rad_per_s", config.synthetic.rotation_jitter},
                      {"add_noise", config.synthetic.add_noise}};
  return doc;
}

RunConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

double sagnac_amplitude(const RunConfig& config) {
  return sagnac_earth_term(config.geometry, config.beam).amplitude_at_mean;
}

ObservationSet make_observation_set(const RunConfig& config, std::vector<Observation> observations,
                                    bool include_sagnac) {
  ObservationSet set;
  set.observations = std::move(observations);
  set.beam_u = config.beam.u();
  set.sagnac_amplitude_at_mean = include_sagnac ? sagnac_amplitude(config) : 0.0;
  set.v0 = config.v0;
  set.averaging = config.averaging;
  return set;
}

// ---------------------------------------------------------------------------

std::string format_number(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

double parse_number(std::string_view text, std::string_view source, int line, std::string_view field) {
  double value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto result = std::from_chars(first, last, value);
  if (text.empty() || result.ec != std::errc() || result.ptr != last || !std::isfinite(value)) {
    throw ParseError(std::string(source) + ":" + std::to_string(line) + ": field '" + std::string(field) +
                     "': invalid number '" + std::string(text) + "'");
  }
  return value;
}

void write_table(std::ostream& out, const NumericTable& table) {
  out << join(table.columns) << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_number(row[i]);
    }
    out << '\n';
  }
}

NumericTable read_table(std::istream& in, std::string_view source, const std::vector<std::string>& expected_columns) {
  NumericTable table;
  std::string line;
  int line_number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    if (!have_header) {
      std::string header = line;
      if (line_number == 1 && header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
      table.columns = split_commas(header);
      if (!expected_columns.empty() && table.columns != expected_columns) {
        throw ParseError(std::string(source) + ":" + std::to_string(line_number) + ": header must be '" +
                         join(expected_columns) + "'");
      }
      have_header = true;
      continue;
    }
    const auto fields = split_commas(line);
    if (fields.size() != table.columns.size()) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_number) + ": expected " +
                       std::to_string(table.columns.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i)
      row.push_back(parse_number(fields[i], source, line_number, table.columns[i]));
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError(std::string(source) + ":1: missing header line");
  return table;
}

void write_table_file(const std::string& path, const NumericTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_table(out, table);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

NumericTable read_table_file(const std::string& path, const std::vector<std::string>& expected_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_table(in, path, expected_columns);
}

const std::vector<std::string>& observation_columns() {
  static const std::vector<std::string> columns{"U_volts", "phase_rad", "phase_sigma_rad", "vis_ratio",
                                                "vis_sigma"};
  return columns;
}

void write_observations(std::ostream& out, const std::vector<Observation>& observations) {
  NumericTable table{observation_columns(), {}};
  for (const auto& o : observations)
    table.rows.push_back({o.voltage_U, o.phase_meas, o.phase_sigma, o.vis_ratio, o.vis_sigma});
  write_table(out, table);
}

std::vector<Observation> read_observations(std::istream& in, std::string_view source) {
  const NumericTable table = read_table(in, source, observation_columns());
  std::vector<Observation> observations;
  for (const auto& r : table.rows) observations.push_back({r[0], r[1], r[2], r[3], r[4]});
  return observations;
}

void write_observations_file(const std::string& path, const std::vector<Observation>& observations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_observations(out, observations);
}

std::vector<Observation> read_observations_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_observations(in, path);
}

// ---------------------------------------------------------------------------

json fit_report(const FitResult& result, const ObservationSet& set) {
  json residuals = json::array();
  for (std::size_t i = 0; i < result.residuals.size(); ++i) {
    residuals.push_back({{"U_volts", i < set.observations.size() ? set.observations[i].voltage_U : 0.0},
                         {"phase_residual_rad", result.residuals[i].phase},
                         {"vis_residual", result.residuals[i].visibility}});
  }
  json sigmas = nullptr;
  try {
    const Eigen::Vector2d s = parameter_uncertainties(result);
    sigmas = {{"s_parallel", s(0)}, {"coeff_rad_per_V2", s(1)}};
  } catch (const FitError&) {
  }
  return {
      {"s_parallel", result.s_parallel},
      {"coeff_rad_per_V2", result.coeff_per_U2},
      {"uncertainties", sigmas},
      {"covariance",
       {{result.covariance(0, 0), result.covariance(0, 1)}, {result.covariance(1, 0), result.covariance(1, 1)}}},
      {"chi_square", result.chi_square},
      {"dof", result.dof},
      {"converged", result.converged},
      {"iterations", result.iterations},
      {"beam_u_m_per_s", set.beam_u},
      {"sagnac_amplitude_rad", set.sagnac_amplitude_at_mean},
      {"residuals", residuals},
  };
}

FitResult fit_result_from_report(const json& report) {
  if (!report.is_object()) throw ParseError("report: expected a JSON object");
  FitResult result;
  result.s_parallel = report_number(report, "s_parallel");
  result.coeff_per_U2 = report_number(report, "coeff_rad_per_V2");
  const json& cov = report_member(report, "covariance");
  if (!cov.is_array() || cov.size() != 2) throw ParseError("report: covariance: expected a 2x2 array");
  for (int i = 0; i < 2; ++i) {
    if (!cov[i].is_array() || cov[i].size() != 2) throw ParseError("report: covariance: expected a 2x2 array");
    for (int j = 0; j < 2; ++j) {
      if (!cov[i][j].is_number()) throw ParseError("report: covariance: expected numbers");
      result.covariance(i, j) = cov[i][j].get<double>();
    }
  }
  result.chi_square = report_number(report, "chi_square");
  result.dof = report_member(report, "dof").get<int>();
  result.converged = report_member(report, "converged").get<bool>();
  result.iterations = report_member(report, "iterations").get<int>();
  for (const auto& r : report_member(report, "residuals"))
    result.residuals.push_back({r.at("phase_residual_rad").get<double>(), r.at("vis_residual").get<double>()});
  return result;
}

json plan_report(const CompensationPlan& plan) {
  return {
      {"counter_amplitude_rad", plan.counter_amplitude_at_mean},
      {"mirror_v1_m_per_s", plan.motion.v1},
      {"mirror_v3_m_per_s", plan.motion.v3},
      {"max_travel_m", plan.motion.max_travel},
      {"sustain_time_s", std::isfinite(plan.sustain_time) ? json(plan.sustain_time) : json(nullptr)},
      {"prism_dz_rate_m_per_s", plan.prism_dz_rate},
      {"residual_phase_rad", plan.residual_phase},
      {"visibility_ratio_at_null", plan.visibility_ratio_at_null},
  };
}

CompensationPlan plan_from_report(const json& report) {
  if (!report.is_object()) throw ParseError("report: expected a JSON object");
  CompensationPlan plan;
  plan.counter_amplitude_at_mean = report_number(report, "counter_amplitude_rad");
  plan.motion.v1 = report_number(report, "mirror_v1_m_per_s");
  plan.motion.v3 = report_number(report, "mirror_v3_m_per_s");
  plan.motion.max_travel = report_number(report, "max_travel_m");
  const json& t = report_member(report, "sustain_time_s");
  plan.sustain_time = t.is_null() ? std::numeric_limits<double>::infinity() : report_number(report, "sustain_time_s");
  plan.prism_dz_rate = report_number(report, "prism_dz_rate_m_per_s");
  plan.residual_phase = report_number(report, "residual_phase_rad");
  plan.visibility_ratio_at_null = report_number(report, "visibility_ratio_at_null");
  return plan;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << dump(doc);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

ObservationSet generate_synthetic(const RunConfig& config, const SyntheticDesign& design) {
  design.validate();
  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double omega = omega_y(config.geometry);
  const double L = config.geometry.grating_separation_L;
  const double u = config.beam.u();
  const double sagnac = sagnac_amplitude(config);

  std::vector<Observation> observations;
  observations.reserve(design.voltages.size());
  for (double voltage : design.voltages) {
    ObservationSet context = make_observation_set(config, {}, true);
    if (design.rotation_jitter > 0) {
      const double jitter = design.add_noise ? design.rotation_jitter * normal(rng) : 0.0;
      context.sagnac_amplitude_at_mean = 2 * config.geometry.k_grating() * (omega + jitter) * L * L / u;
    }
    const ModelPoint truth = predict(config.beam.s_parallel(), config.coeff_per_U2, voltage, context);
    Observation o;
    o.voltage_U = voltage;
    o.phase_sigma = design.phase_sigma_base + design.phase_sigma_per_rad * std::abs(truth.phase);
    o.vis_sigma = design.vis_sigma;
    o.phase_meas = truth.phase + (design.add_noise ? o.phase_sigma * normal(rng) : 0.0);
    o.vis_ratio = truth.vis_ratio + (design.add_noise ? o.vis_sigma * normal(rng) : 0.0);
    observations.push_back(o);
  }
  return make_observation_set(config, std::move(observations), sagnac != 0);
}

}  // namespace dispcomp::io
