#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dispcomp/io.hpp"
#include "support/synthetic.hpp"

using namespace dispcomp;
using nlohmann::json;

namespace {

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("dispcomp_test_" + name)).string();
}

json minimal_config() {
  return json::parse(R"({
    "geometry": {"k_laser_per_m": 9.364e6, "L_m": 0.605, "latitude_deg": 43.56027777777778,
                 "geometry_factor_G_per_m": 11519.97},
    "beam": {"u_m_per_s": 1065.7, "s_parallel": 7.67}
  })");
}

std::string observation_text(const std::vector<Observation>& obs) {
  std::ostringstream s;
  io::write_observations(s, obs);
  return s.str();
}

}  // namespace

TEST_CASE("config parse with defaults") {
  const io::RunConfig c = io::parse_config(minimal_config());
  CHECK(c.beam.u() == 1065.7);
  CHECK(c.capacitor.sign == -1);
  CHECK(c.averaging.node_count == 257);
  CHECK(c.fit.include_sagnac);
  CHECK(c.v0 == 1.0);
  CHECK(io::sagnac_amplitude(c) == doctest::Approx(0.64646).epsilon(1e-5));
  CHECK_FALSE(c.alpha.has_value());
}

TEST_CASE("config serialize round trip") {
  io::RunConfig c = testdata::paper_config();
  c.alpha = 24.34e-30;
  c.rng_seed = 18446744073709551615ull;
  const json first = io::config_to_json(c);
  const json second = io::config_to_json(io::parse_config(first));
  CHECK(io::dump(first) == io::dump(second));
}

TEST_CASE("config errors name the field") {
  json doc = minimal_config();
  doc["beam"].erase("s_parallel");
  CHECK_THROWS_WITH_AS(io::parse_config(doc), doctest::Contains("beam.s_parallel"), io::ParseError);

  doc = minimal_config();
  doc["geometry"]["L_m"] = "long";
  CHECK_THROWS_WITH_AS(io::parse_config(doc), doctest::Contains("geometry.L_m"), io::ParseError);

  doc = minimal_config();
  doc["beam"]["s_parallel"] = 0.5;
  CHECK_THROWS_WITH_AS(io::parse_config(doc), doctest::Contains("beam"), io::ParseError);

  doc = minimal_config();
  doc["synthetic"] = {{"voltages_V", {10, 10}}};
  CHECK_THROWS_WITH_AS(io::parse_config(doc), doctest::Contains("distinct"), io::ParseError);

  doc = minimal_config();
  doc["rng_seed"] = -4;
  CHECK_THROWS_AS(io::parse_config(doc), io::ParseError);
  doc = minimal_config();
  doc["v0"] = 1.5;
  CHECK_THROWS_AS(io::parse_config(doc), io::ParseError);
  CHECK_THROWS_AS(io::parse_config(json::array()), io::ParseError);
  CHECK_THROWS(io::load_config("/nonexistent/config.json"));
}

TEST_CASE("numbers round trip exactly") {
  for (double x : {0.0, -0.0, 1.0 / 3, 6.02214076e23, -1.388e-4, 5e-324, 1.7976931348623157e308}) {
    const std::string text = io::format_number(x);
    CHECK(io::parse_number(text, "t", 1, "x") == x);
  }
  CHECK(io::parse_number("+2.5", "t", 1, "x") == 2.5);
  CHECK_THROWS_WITH_AS(io::parse_number("2.5x", "obs.csv", 7, "vis_ratio"),
                       doctest::Contains("obs.csv:7"), io::ParseError);
  CHECK_THROWS_WITH_AS(io::parse_number("", "obs.csv", 7, "vis_ratio"), doctest::Contains("vis_ratio"),
                       io::ParseError);
  CHECK_THROWS_AS(io::parse_number("nan", "t", 1, "x"), io::ParseError);
  CHECK_THROWS_AS(io::parse_number("1e999", "t", 1, "x"), io::ParseError);
}

TEST_CASE("observation files are idempotent") {
  io::RunConfig c = testdata::paper_config();
  c.rng_seed = 42;
  const ObservationSet set = io::generate_synthetic(c, c.synthetic);
  const std::string first = observation_text(set.observations);
  std::istringstream in(first);
  const std::string second = observation_text(io::read_observations(in, "mem"));
  CHECK(first == second);
  CHECK(first.rfind("U_volts,phase_rad,phase_sigma_rad,vis_ratio,vis_sigma\n", 0) == 0);

  const std::string path = temp_path("obs.csv");
  io::write_observations_file(path, set.observations);
  CHECK(read_all(path) == first);
  io::write_observations_file(path, io::read_observations_file(path));
  CHECK(read_all(path) == first);
  std::remove(path.c_str());
}

TEST_CASE("observation parse errors") {
  std::istringstream bad_header("U,phase\n1,2\n");
  CHECK_THROWS_WITH_AS(io::read_observations(bad_header, "a.csv"), doctest::Contains("a.csv:1"), io::ParseError);

  std::istringstream short_row("U_volts,phase_rad,phase_sigma_rad,vis_ratio,vis_sigma\n1,2,3,4,5\n1,2\n");
  CHECK_THROWS_WITH_AS(io::read_observations(short_row, "b.csv"), doctest::Contains("b.csv:3"), io::ParseError);

  std::istringstream bad_field("U_volts,phase_rad,phase_sigma_rad,vis_ratio,vis_sigma\n1,2,abc,4,5\n");
  CHECK_THROWS_WITH_AS(io::read_observations(bad_field, "c.csv"), doctest::Contains("phase_sigma_rad"),
                       io::ParseError);

  std::istringstream empty("");
  CHECK_THROWS_AS(io::read_observations(empty, "d.csv"), io::ParseError);

  // BOM, CRLF and blank lines are tolerated
  std::istringstream lenient(
      "\xEF\xBB\xBFU_volts,phase_rad,phase_sigma_rad,vis_ratio,vis_sigma\r\n\r\n1, 2,3 ,0.5,0.01\r\n");
  const auto obs = io::read_observations(lenient, "e.csv");
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].phase_meas == 2);
  CHECK(obs[0].vis_ratio == 0.5);
}

TEST_CASE("synthetic data") {
  io::RunConfig c = testdata::paper_config();
  c.rng_seed = 1234;
  const ObservationSet a = io::generate_synthetic(c, c.synthetic);
  const ObservationSet b = io::generate_synthetic(c, c.synthetic);
  CHECK(observation_text(a.observations) == observation_text(b.observations));
  c.rng_seed = 1235;
  CHECK(observation_text(io::generate_synthetic(c, c.synthetic).observations) != observation_text(a.observations));

  const ObservationSet clean = io::generate_synthetic(c, testdata::noiseless(c.synthetic));
  for (const auto& o : clean.observations) {
    const ModelPoint p = predict(7.67, 1.388e-4, o.voltage_U, clean);
    CHECK(o.phase_meas == p.phase);
    CHECK(o.vis_ratio == p.vis_ratio);
    CHECK(o.phase_sigma == doctest::Approx(0.02 + 0.002 * std::abs(p.phase)));
  }
  CHECK(clean.sagnac_amplitude_at_mean == doctest::Approx(0.64646).epsilon(1e-5));
  // largest phase spans the paper range
  CHECK(clean.observations.back().phase_meas < -24);

  io::SyntheticDesign bad = c.synthetic;
  bad.vis_sigma = -1;
  CHECK_THROWS(io::generate_synthetic(c, bad));
}

TEST_CASE("rotation jitter perturbs only when enabled") {
  io::RunConfig c = testdata::paper_config();
  io::SyntheticDesign jitter = testdata::noiseless(c.synthetic);
  jitter.rotation_jitter = 1e-4;
  const ObservationSet quiet = io::generate_synthetic(c, jitter);
  const ObservationSet ref = io::generate_synthetic(c, testdata::noiseless(c.synthetic));
  CHECK(observation_text(quiet.observations) == observation_text(ref.observations));
  jitter.add_noise = true;
  jitter.phase_sigma_base = 1e-9;
  jitter.phase_sigma_per_rad = 0;
  jitter.vis_sigma = 1e-9;
  const ObservationSet noisy = io::generate_synthetic(c, jitter);
  CHECK(std::abs(noisy.observations[0].phase_meas) < 1e-6);  // U = 0 still reads zero shift
  CHECK(std::abs(noisy.observations[10].phase_meas - ref.observations[10].phase_meas) > 1e-5);
}

TEST_CASE("fit report round trip") {
  io::RunConfig c = testdata::paper_config();
  c.rng_seed = 8;
  const ObservationSet set = io::generate_synthetic(c, c.synthetic);
  const FitResult r = fit(set);
  const std::string first = io::dump(io::fit_report(r, set));
  const std::string second = io::dump(io::fit_report(io::fit_result_from_report(json::parse(first)), set));
  CHECK(first == second);

  const std::string path = temp_path("report.json");
  io::write_json_file(path, json::parse(first));
  CHECK(read_all(path) == first);
  std::remove(path.c_str());
  CHECK_THROWS_AS(io::fit_result_from_report(json::object()), io::ParseError);
}

TEST_CASE("plan report round trip") {
  CompensationPlan plan;
  plan.counter_amplitude_at_mean = 100.000000001;
  plan.motion = Mirrors{4.7e-3, -4.7e-3, 2e-5};
  plan.prism_dz_rate = -1.9e-2;
  plan.residual_phase = 3e-12;
  plan.visibility_ratio_at_null = 0.9999999999999987;
  plan.sustain_time = 4.25e-3;
  const std::string first = io::dump(io::plan_report(plan));
  CHECK(io::dump(io::plan_report(io::plan_from_report(json::parse(first)))) == first);

  plan.motion = Mirrors{0, 0, 2e-5};
  plan.sustain_time = std::numeric_limits<double>::infinity();
  const std::string still = io::dump(io::plan_report(plan));
  CHECK(std::isinf(io::plan_from_report(json::parse(still)).sustain_time));
  CHECK(io::dump(io::plan_report(io::plan_from_report(json::parse(still)))) == still);
}

TEST_CASE("generic tables") {
  io::NumericTable t{{"a", "b"}, {{1, 2}, {3.25, -4e-300}}};
  std::ostringstream out;
  io::write_table(out, t);
  std::istringstream in(out.str());
  const io::NumericTable back = io::read_table(in, "t.csv");
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  std::istringstream wrong(out.str());
  CHECK_THROWS_AS(io::read_table(wrong, "t.csv", {"a", "c"}), io::ParseError);
}
