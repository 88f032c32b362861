#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dispcomp/fit.hpp"
#include "support/synthetic.hpp"

using namespace dispcomp;

TEST_CASE("zero-noise round trip") {
  const io::RunConfig c = testdata::paper_config();
  const ObservationSet set = io::generate_synthetic(c, testdata::noiseless(c.synthetic));
  const FitResult r = fit(set);
  CHECK(r.converged);
  CHECK(std::abs(r.s_parallel / 7.67 - 1) < 1e-6);
  CHECK(std::abs(r.coeff_per_U2 / 1.388e-4 - 1) < 1e-6);
  CHECK(r.chi_square < 1e-12);
  CHECK(r.dof == 2 * int(set.observations.size()) - 2);
  CHECK(r.residuals.size() == set.observations.size());
}

TEST_CASE("fit from distant starting points") {
  const io::RunConfig c = testdata::paper_config();
  const ObservationSet set = io::generate_synthetic(c, testdata::noiseless(c.synthetic));
  for (const Eigen::Vector2d start : {Eigen::Vector2d(4.0, 1.2e-4), Eigen::Vector2d(15.0, 1.5e-4)}) {
    const FitResult r = fit(set, start);
    CAPTURE(start.transpose());
    CHECK(std::abs(r.s_parallel / 7.67 - 1) < 1e-6);
    CHECK(std::abs(r.coeff_per_U2 / 1.388e-4 - 1) < 1e-6);
  }
}

TEST_CASE("observation order does not matter") {
  io::RunConfig c = testdata::paper_config();
  c.rng_seed = 3;
  ObservationSet set = io::generate_synthetic(c, c.synthetic);
  const FitResult a = fit(set);
  std::mt19937_64 rng(5);
  std::shuffle(set.observations.begin(), set.observations.end(), rng);
  const FitResult b = fit(set);
  CHECK(a.s_parallel == doctest::Approx(b.s_parallel).epsilon(1e-9));
  CHECK(a.coeff_per_U2 == doctest::Approx(b.coeff_per_U2).epsilon(1e-9));
  CHECK(a.chi_square == doctest::Approx(b.chi_square).epsilon(1e-8));
}

TEST_CASE("jacobian is stable under step halving") {
  const io::RunConfig c = testdata::paper_config();
  const ObservationSet set = io::generate_synthetic(c, testdata::noiseless(c.synthetic));
  const Eigen::Vector2d p(7.67, 1.388e-4);
  const Eigen::MatrixXd j1 = model_jacobian(set, p, 1e-4, Difference::central);
  const Eigen::MatrixXd j2 = model_jacobian(set, p, 5e-5, Difference::central);
  for (int k = 0; k < 2; ++k) {
    const double scale = j1.col(k).norm();
    CHECK((j1.col(k) - j2.col(k)).norm() / scale < 1e-4);
  }
  const Eigen::MatrixXd fwd = model_jacobian(set, p, 1e-6, Difference::forward);
  for (int k = 0; k < 2; ++k) CHECK((fwd.col(k) - j2.col(k)).norm() / j2.col(k).norm() < 1e-4);
}

TEST_CASE("covariance scaling and uncertainties") {
  io::RunConfig c = testdata::paper_config();
  c.rng_seed = 9;
  const ObservationSet set = io::generate_synthetic(c, c.synthetic);
  FitOptions raw;
  raw.chi2_scaling = false;
  const FitResult scaled = fit(set);
  const FitResult plain = fit(set, std::nullopt, raw);
  const double factor = scaled.chi_square / scaled.dof;
  CHECK(scaled.covariance(0, 0) == doctest::Approx(plain.covariance(0, 0) * factor).epsilon(1e-6));
  const Eigen::Vector2d sig = parameter_uncertainties(scaled);
  CHECK(sig(0) > 0);
  CHECK(sig(1) > 0);
  CHECK(sig(0) == doctest::Approx(std::sqrt(scaled.covariance(0, 0))));

  FitResult broken = scaled;
  broken.covariance(0, 1) = 10 * std::sqrt(broken.covariance(0, 0) * broken.covariance(1, 1));
  broken.covariance(1, 0) = broken.covariance(0, 1);
  CHECK_THROWS_AS(parameter_uncertainties(broken), FitError);
  broken.covariance(0, 0) = NAN;
  CHECK_THROWS_AS(parameter_uncertainties(broken), FitError);
}

TEST_CASE("pull distribution over seeds") {
  // standardized errors of S over 20 realizations: mean ~ 0, spread ~ 1
  io::RunConfig c = testdata::paper_config();
  std::vector<double> pulls;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    c.rng_seed = seed;
    const FitResult r = fit(io::generate_synthetic(c, c.synthetic));
    const Eigen::Vector2d sig = parameter_uncertainties(r);
    pulls.push_back((r.s_parallel - 7.67) / sig(0));
  }
  double mean = 0, sq = 0;
  for (double p : pulls) mean += p / pulls.size();
  for (double p : pulls) sq += (p - mean) * (p - mean) / (pulls.size() - 1);
  CHECK(std::abs(mean) < 1.0);
  CHECK(std::sqrt(sq) > 0.4);
  CHECK(std::sqrt(sq) < 1.8);
}

TEST_CASE("input validation") {
  const io::RunConfig c = testdata::paper_config();
  ObservationSet set = io::generate_synthetic(c, testdata::noiseless(c.synthetic));
  ObservationSet few = set;
  few.observations.resize(2);
  CHECK_THROWS_AS(fit(few), std::invalid_argument);
  ObservationSet dup = set;
  dup.observations[2].voltage_U = dup.observations[1].voltage_U;
  CHECK_THROWS_AS(fit(dup), std::invalid_argument);
  ObservationSet zero_sigma = set;
  zero_sigma.observations[4].phase_sigma = 0;
  CHECK_THROWS_AS(fit(zero_sigma), std::invalid_argument);
  ObservationSet bad_vis = set;
  bad_vis.observations[4].vis_ratio = 1.5;
  CHECK_THROWS_AS(fit(bad_vis), std::invalid_argument);
  CHECK_THROWS_AS(fit(set, Eigen::Vector2d(0.5, 1e-4)), std::invalid_argument);

  ObservationSet only_zero = set;
  only_zero.observations = {{0, 0, 0.1, 1, 0.01}, {0, 0, 0.1, 1, 0.01}};
  CHECK_THROWS(default_initial(only_zero));
}

TEST_CASE("model at zero voltage") {
  const io::RunConfig c = testdata::paper_config();
  const ObservationSet context = io::make_observation_set(c, {}, true);
  const ModelPoint p = predict(7.67, 1.388e-4, 0.0, context);
  CHECK(p.phase == 0.0);
  CHECK(p.vis_ratio == 1.0);
  // sign: positive coefficient lowers the phase
  CHECK(predict(7.67, 1.388e-4, 100.0, context).phase < 0);
  CHECK(predict(7.67, 1.388e-4, 100.0, context).phase ==
        doctest::Approx(predict(7.67, 1.388e-4, -100.0, context).phase));
}

TEST_CASE("zero-noise round trip over a parameter grid") {
  for (double s : {5.0, 7.67, 12.0})
    for (double coeff : {0.5e-4, 1.388e-4, 3e-4}) {
      io::RunConfig c = testdata::paper_config();
      c.beam = Beam(1065.7, s);
      c.coeff_per_U2 = coeff;
      // keep phases within the 0-25 rad design range
      for (auto& v : c.synthetic.voltages) v *= std::sqrt(1.388e-4 / coeff);
      const ObservationSet set = io::generate_synthetic(c, testdata::noiseless(c.synthetic));
      const FitResult r = fit(set, Eigen::Vector2d(1.05 * s, 0.97 * coeff));
      CAPTURE(s);
      CAPTURE(coeff);
      CHECK(r.converged);
      CHECK(std::abs(r.s_parallel / s - 1) < 1e-6);
      CHECK(std::abs(r.coeff_per_U2 / coeff - 1) < 1e-6);
    }
}

TEST_CASE("uncertainties scale with the quoted sigmas") {
  io::RunConfig c = testdata::paper_config();
  c.rng_seed = 21;
  ObservationSet set = io::generate_synthetic(c, c.synthetic);
  FitOptions raw;
  raw.chi2_scaling = false;
  const Eigen::Vector2d base = parameter_uncertainties(fit(set, std::nullopt, raw));
  for (auto& o : set.observations) {
    o.phase_sigma *= 2;
    o.vis_sigma *= 2;
  }
  const Eigen::Vector2d doubled = parameter_uncertainties(fit(set, std::nullopt, raw));
  CHECK(doubled(0) == doctest::Approx(2 * base(0)).epsilon(1e-5));
  CHECK(doubled(1) == doctest::Approx(2 * base(1)).epsilon(1e-5));
}

TEST_CASE("zero noise gives vanishing scaled uncertainties") {
  const io::RunConfig c = testdata::paper_config();
  const Eigen::Vector2d sig = parameter_uncertainties(fit(io::generate_synthetic(c, testdata::noiseless(c.synthetic))));
  CHECK(sig(0) < 1e-6);
  CHECK(sig(1) < 1e-6 * 1.388e-4);
}

TEST_CASE("paper-scale noise gives sigma_S of the quoted order") {
  io::RunConfig c = testdata::paper_config();
  c.rng_seed = 5;
  const Eigen::Vector2d sig = parameter_uncertainties(fit(io::generate_synthetic(c, c.synthetic)));
  CHECK(sig(0) > 0.02);
  CHECK(sig(0) < 0.12);
}

TEST_CASE("objective does not increase with more iterations") {
  io::RunConfig c = testdata::paper_config();
  c.rng_seed = 13;
  const ObservationSet set = io::generate_synthetic(c, c.synthetic);
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 8; ++k) {
    FitOptions o;
    o.max_iterations = k;
    const FitResult r = fit(set, Eigen::Vector2d(12.0, 1.0e-4), o);
    CAPTURE(k);
    CHECK(r.chi_square <= previous);
    previous = r.chi_square;
  }
  FitOptions one;
  one.max_iterations = 1;
  CHECK_FALSE(fit(set, Eigen::Vector2d(12.0, 1.0e-4), one).converged);
}

TEST_CASE("sagnac delays the visibility decay") {
  const io::RunConfig c = testdata::paper_config();
  const ObservationSet with = io::make_observation_set(c, {}, true);
  const ObservationSet without = io::make_observation_set(c, {}, false);
  for (double U : {150.0, 250.0, 400.0})
    CHECK(predict(7.67, 1.388e-4, U, with).vis_ratio > predict(7.67, 1.388e-4, U, without).vis_ratio);
  // reference value was frozen with the rounded amplitude 0.646
  ObservationSet rounded = with;
  rounded.sagnac_amplitude_at_mean = 0.646;
  const ModelPoint p = predict(7.67, 1.388e-4, 250.0, rounded);
  CHECK(std::abs(p.phase - -8.708911401105784) < 1e-9);
  CHECK(std::abs(p.vis_ratio - 0.7537942418133987) < 1e-9);
}
