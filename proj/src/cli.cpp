#include "dispcomp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "dispcomp/compensation.hpp"
#include "dispcomp/fringe.hpp"
#include "dispcomp/io.hpp"
#include "dispcomp/phase.hpp"

namespace dispcomp::cli {

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string obs_path;
  bool no_sagnac = false;
  std::optional<double> coeff;
  std::optional<double> pol_amplitude;
  std::optional<double> voltage;
  int steps = 21;
};

io::RunConfig load(const Options& o) {
  io::RunConfig config = io::load_config(o.config_path);
  if (o.seed) config.rng_seed = *o.seed;
  if (o.coeff) config.coeff_per_U2 = *o.coeff;
  return config;
}

// Writes text to --out when given, otherwise to out.
void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + o.out_path + "' for writing");
  file << text;
  if (!file) throw std::runtime_error("write to '" + o.out_path + "' failed");
}

std::string table_text(const io::NumericTable& table) {
  std::ostringstream s;
  io::write_table(s, table);
  return s.str();
}

void run_constants(const Options& o, std::ostream& out) {
  const io::RunConfig c = load(o);
  const PrismGeometry<double> prism{c.prism_index};
  io::NumericTable t{{"omega_y_rad_per_s", "sagnac_amplitude_rad", "prism_ratio_dx_dz", "k_grating_per_m",
                      "alpha_m3"},
                     {}};
  t.rows.push_back({omega_y(c.geometry), io::sagnac_amplitude(c), prism_displacement_ratio(prism),
                    c.geometry.k_grating(),
                    alpha_from_coefficient(c.coeff_per_U2, c.capacitor.geometry_factor_G, c.beam.u())});
  emit(o, out, table_text(t));
}

std::vector<double> sweep_voltages(const Options& o, const io::RunConfig& c) {
  if (!o.voltage) {
    if (c.synthetic.voltages.empty()) throw std::invalid_argument("simulate: no --voltage and no synthetic.voltages_V");
    return c.synthetic.voltages;
  }
  if (o.steps < 2) throw std::invalid_argument("simulate: --steps must be at least 2");
  std::vector<double> volts;
  for (int i = 0; i < o.steps; ++i) volts.push_back(*o.voltage * i / (o.steps - 1));
  return volts;
}

void run_simulate(const Options& o, std::ostream& out) {
  const io::RunConfig c = load(o);
  const ObservationSet context = io::make_observation_set(c, {}, !o.no_sagnac);
  io::NumericTable t{{"U_volts", "phase_rad", "vis_ratio", "linear_phase_rad"}, {}};
  for (double U : sweep_voltages(o, c)) {
    const ModelPoint p = predict(c.beam.s_parallel(), c.coeff_per_U2, U, context);
    t.rows.push_back({U, p.phase, p.vis_ratio, 0.0 - c.coeff_per_U2 * U * U});
  }
  emit(o, out, table_text(t));
}

void run_synth(const Options& o, std::ostream& out) {
  const io::RunConfig c = load(o);
  io::SyntheticDesign design = c.synthetic;
  if (design.voltages.empty()) throw std::invalid_argument("synth: config has no synthetic.voltages_V");
  const ObservationSet set = io::generate_synthetic(c, design);
  std::ostringstream s;
  io::write_observations(s, set.observations);
  emit(o, out, s.str());
}

void run_fit(const Options& o, std::ostream& out) {
  if (o.obs_path.empty()) throw std::invalid_argument("fit: --obs is required");
  const io::RunConfig c = load(o);
  const bool sagnac = c.fit.include_sagnac && !o.no_sagnac;
  const ObservationSet set = io::make_observation_set(c, io::read_observations_file(o.obs_path), sagnac);
  FitOptions options;
  options.max_iterations = c.fit.max_iterations;
  options.chi2_scaling = c.fit.chi2_scaling;
  const FitResult result = fit(set, std::nullopt, options);
  emit(o, out, io::dump(io::fit_report(result, set)));
}

double pol_amplitude_of(const Options& o, const io::RunConfig& c) {
  if (o.pol_amplitude) return *o.pol_amplitude;
  if (!o.voltage) throw std::invalid_argument("give --pol-amplitude or --voltage");
  return c.capacitor.sign * c.coeff_per_U2 * *o.voltage * *o.voltage;
}

void run_tune(const Options& o, std::ostream& out) {
  const io::RunConfig c = load(o);
  const PhaseTerm pol{pol_amplitude_of(o, c), 1};
  TuneOptions options;
  options.v0 = c.v0;
  options.support = default_support(c.beam, c.averaging.width_sigmas, c.averaging.node_count);
  options.prism = PrismGeometry<double>{c.prism_index};
  const CompensationPlan plan = tune_counterphase(pol, c.beam, c.geometry, 1e-9, options);
  emit(o, out, io::dump(io::plan_report(plan)));
}

void run_residual(const Options& o, std::ostream& out) {
  const io::RunConfig c = load(o);
  if (o.steps < 2) throw std::invalid_argument("residual: --steps must be at least 2");
  const PhaseTerm pol{pol_amplitude_of(o, c), 1};
  const Support support = default_support(c.beam, c.averaging.width_sigmas, c.averaging.node_count);
  io::NumericTable t{{"v2_fraction", "residual_phase_rad", "vis_ratio"}, {}};
  for (int i = 0; i < o.steps; ++i) {
    const double f = double(i) / (o.steps - 1);
    const std::vector<PhaseTerm> counter = counter_terms(1.0, f);
    const ResidualDispersion r = residual_dispersion(counter, pol, c.beam, c.v0, support);
    t.rows.push_back({f, r.residual_phase, r.visibility_ratio});
  }
  emit(o, out, table_text(t));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Velocity-dispersive phase toolkit for a three-grating atom interferometer", "dispcomp"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", o.out_path, "output path; stdout when omitted");
    sub->add_option("--seed", o.seed, "RNG seed, overrides the config");
    sub->add_option("--coeff", o.coeff, "phase coefficient rad/V^2, overrides the config");
  };
  CLI::App* constants = app.add_subcommand("constants", "Omega_y, Sagnac amplitude and prism ratio");
  common(constants);
  CLI::App* simulate = app.add_subcommand("simulate", "fringe phase and visibility over a voltage sweep");
  common(simulate);
  simulate->add_option("--voltage", o.voltage, "sweep 0..U; config voltages when omitted");
  simulate->add_option("--steps", o.steps, "sweep points");
  simulate->add_flag("--no-sagnac", o.no_sagnac, "leave out the Earth-rotation term");
  CLI::App* synth = app.add_subcommand("synth", "seeded synthetic observation file");
  common(synth);
  CLI::App* fitcmd = app.add_subcommand("fit", "joint fit of S_parallel and the phase coefficient");
  common(fitcmd);
  fitcmd->add_option("--obs", o.obs_path, "observation CSV")->required();
  fitcmd->add_flag("--no-sagnac", o.no_sagnac, "fit without the Earth-rotation term");
  CLI::App* tune = app.add_subcommand("tune", "counterphase that nulls a polarizability phase");
  common(tune);
  tune->add_option("--pol-amplitude", o.pol_amplitude, "polarizability phase at u, rad");
  tune->add_option("--voltage", o.voltage, "capacitor voltage, used with the coefficient");
  CLI::App* residual = app.add_subcommand("residual", "dispersion left by a u/v plus (u/v)^2 counterphase");
  common(residual);
  residual->add_option("--pol-amplitude", o.pol_amplitude, "polarizability phase at u, rad");
  residual->add_option("--voltage", o.voltage, "capacitor voltage, used with the coefficient");
  residual->add_option("--steps", o.steps, "number of mixture fractions in [0, 1]");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (constants->parsed()) run_constants(o, out);
    else if (simulate->parsed()) run_simulate(o, out);
    else if (synth->parsed()) run_synth(o, out);
    else if (fitcmd->parsed()) run_fit(o, out);
    else if (tune->parsed()) run_tune(o, out);
    else if (residual->parsed()) run_residual(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace dispcomp::cli
