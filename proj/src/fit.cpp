#include "dispcomp/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <numeric>
#include <set>
#include <string>
#include <thread>

#include "dispcomp/fringe.hpp"
#include "dispcomp/phase.hpp"

namespace dispcomp {

namespace {

struct ModelFrame {
  Beam beam;
  Support support;
  std::array<PhaseTerm, 1> off;
  Fringe off_fringe;
};

ModelFrame make_frame(double s_parallel, const ObservationSet& set) {
  Beam beam(set.beam_u, s_parallel);
  const Support support = default_support(beam, set.averaging.width_sigmas, set.averaging.node_count);
  const std::array<PhaseTerm, 1> off{PhaseTerm{set.sagnac_amplitude_at_mean, 1}};
  const Fringe off_fringe = averaged_fringe<double>(off, beam, set.v0, support);
  return {beam, support, off, off_fringe};
}

ModelPoint predict_in_frame(const ModelFrame& frame, double coeff, double voltage_U, double v0) {
  const std::array<PhaseTerm, 2> on{PhaseTerm{-coeff * voltage_U * voltage_U, 1}, frame.off[0]};
  const Fringe on_fringe = averaged_fringe<double>(on, frame.beam, v0, frame.support);
  return {on_fringe.unwrapped_phase - frame.off_fringe.unwrapped_phase,
          on_fringe.visibility / frame.off_fringe.visibility};
}

template <typename Body>
void for_each_index(std::size_t count, bool parallel, Body&& body) {
  const unsigned workers = parallel ? std::min<unsigned>(std::thread::hardware_concurrency(), count) : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    }));
  }
  for (auto& job : jobs) job.get();
}

Eigen::VectorXd sigmas_of(const ObservationSet& set) {
  Eigen::VectorXd sigma(2 * set.observations.size());
  for (std::size_t i = 0; i < set.observations.size(); ++i) {
    sigma(2 * i) = set.observations[i].phase_sigma;
    sigma(2 * i + 1) = set.observations[i].vis_sigma;
  }
  return sigma;
}

Eigen::VectorXd measurements_of(const ObservationSet& set) {
  Eigen::VectorXd y(2 * set.observations.size());
  for (std::size_t i = 0; i < set.observations.size(); ++i) {
    y(2 * i) = set.observations[i].phase_meas;
    y(2 * i + 1) = set.observations[i].vis_ratio;
  }
  return y;
}

bool admissible(const Eigen::Vector2d& params) {
  return std::isfinite(params(0)) && std::isfinite(params(1)) && params(0) > 1.0;
}

}  // namespace

void ObservationSet::validate() const {
  if (observations.size() < 3) throw std::invalid_argument("observation set needs at least 3 observations");
  if (!(beam_u > 0)) throw std::invalid_argument("observation set: beam_u must be positive");
  if (!(v0 > 0 && v0 <= 1)) throw std::invalid_argument("observation set: v0 must lie in (0, 1]");
  std::set<double> voltages;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    const std::string where = "observation " + std::to_string(i) + ": ";
    if (!(o.phase_sigma > 0)) throw std::invalid_argument(where + "phase_sigma must be positive");
    if (!(o.vis_sigma > 0)) throw std::invalid_argument(where + "vis_sigma must be positive");
    if (!(o.vis_ratio >= 0 && o.vis_ratio <= 1.2))
      throw std::invalid_argument(where + "vis_ratio outside [0, 1.2]");
    if (!std::isfinite(o.voltage_U) || !std::isfinite(o.phase_meas))
      throw std::invalid_argument(where + "non-finite value");
    if (!voltages.insert(o.voltage_U).second) throw std::invalid_argument(where + "duplicate voltage");
  }
}

ModelPoint predict(double s_parallel, double coeff_per_U2, double voltage_U,
                   const ObservationSet& context) {
  const ModelFrame frame = make_frame(s_parallel, context);
  return predict_in_frame(frame, coeff_per_U2, voltage_U, context.v0);
}

Eigen::VectorXd model_vector(const ObservationSet& set, const Eigen::Vector2d& params, bool parallel) {
  const ModelFrame frame = make_frame(params(0), set);
  Eigen::VectorXd model(2 * set.observations.size());
  for_each_index(set.observations.size(), parallel, [&](std::size_t i) {
    const ModelPoint p = predict_in_frame(frame, params(1), set.observations[i].voltage_U, set.v0);
    model(2 * i) = p.phase;
    model(2 * i + 1) = p.vis_ratio;
  });
  return model;
}

Eigen::MatrixXd model_jacobian(const ObservationSet& set, const Eigen::Vector2d& params,
                               double relative_step, Difference scheme, bool parallel) {
  Eigen::MatrixXd jac(2 * set.observations.size(), 2);
  const Eigen::VectorXd base =
      scheme == Difference::forward ? model_vector(set, params, parallel) : Eigen::VectorXd();
  for (int k = 0; k < 2; ++k) {
    const double h = relative_step * (params(k) != 0 ? std::abs(params(k)) : 1.0);
    Eigen::Vector2d up = params;
    up(k) += h;
    if (scheme == Difference::forward) {
      jac.col(k) = (model_vector(set, up, parallel) - base) / (up(k) - params(k));
    } else {
      Eigen::Vector2d down = params;
      down(k) -= h;
      jac.col(k) = (model_vector(set, up, parallel) - model_vector(set, down, parallel)) / (up(k) - down(k));
    }
  }
  return jac;
}

Eigen::Vector2d default_initial(const ObservationSet& set) {
  std::vector<Observation> nonzero;
  for (const auto& o : set.observations)
    if (o.voltage_U != 0) nonzero.push_back(o);
  std::sort(nonzero.begin(), nonzero.end(), [](const Observation& a, const Observation& b) {
    return std::abs(a.voltage_U) < std::abs(b.voltage_U);
  });
  if (nonzero.size() > 3) nonzero.resize(3);
  double num = 0, den = 0;
  for (const auto& o : nonzero) {
    const double u2 = o.voltage_U * o.voltage_U;
    num += -o.phase_meas * u2;
    den += u2 * u2;
  }
  if (den == 0) throw FitError("default_initial: no non-zero voltages");
  return {8.0, num / den};
}

FitResult fit(const ObservationSet& set, std::optional<Eigen::Vector2d> initial, const FitOptions& options) {
  set.validate();
  Eigen::Vector2d params = initial ? *initial : default_initial(set);
  if (!admissible(params)) throw std::invalid_argument("fit: initial S_parallel must exceed 1");

  const Eigen::VectorXd sigma = sigmas_of(set);
  const Eigen::VectorXd y = measurements_of(set);
  const auto residuals_at = [&](const Eigen::Vector2d& p) -> Eigen::VectorXd {
    return ((y - model_vector(set, p, options.parallel)).array() / sigma.array()).matrix();
  };
  const auto weighted_jacobian = [&](const Eigen::Vector2d& p) -> Eigen::MatrixXd {
    // r = (y - f) / sigma, so dr/dp = -J / sigma
    return -(model_jacobian(set, p, options.relative_step, Difference::forward, options.parallel)
                 .array()
                 .colwise() /
             sigma.array())
                .matrix();
  };
  const auto gradient_met = [&](const Eigen::MatrixXd& jw, const Eigen::VectorXd& r) {
    const Eigen::Vector2d g = jw.transpose() * r;
    const Eigen::Vector2d scale = jw.colwise().norm().transpose();
    const double bound = options.gradient_tolerance * r.norm() + 1e-10;
    for (int k = 0; k < 2; ++k)
      if (scale(k) > 0 && std::abs(g(k)) / scale(k) > bound) return false;
    return true;
  };

  Eigen::VectorXd r = residuals_at(params);
  double chi2 = r.squaredNorm();
  double lambda = 1e-3;
  FitResult result;
  Eigen::MatrixXd jw = weighted_jacobian(params);
  int iteration = 0;
  bool converged = false;
  for (; iteration < options.max_iterations; ++iteration) {
    if (gradient_met(jw, r)) {
      converged = true;
      break;
    }
    const Eigen::Matrix2d normal = jw.transpose() * jw;
    const Eigen::Vector2d g = jw.transpose() * r;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::Matrix2d damped = normal;
      damped.diagonal() *= (1.0 + lambda);
      const Eigen::Vector2d step = damped.ldlt().solve(-g);
      const Eigen::Vector2d trial = params + step;
      if (admissible(trial)) {
        try {
          const Eigen::VectorXd r_trial = residuals_at(trial);
          const double chi2_trial = r_trial.squaredNorm();
          if (chi2_trial < chi2) {
            params = trial;
            r = r_trial;
            chi2 = chi2_trial;
            lambda = std::max(lambda * 0.1, 1e-12);
            accepted = true;
            break;
          }
        } catch (const QuadratureError&) {
        }
      }
      lambda *= 10;
    }
    if (!accepted) {
      converged = gradient_met(jw, r);
      break;
    }
    jw = weighted_jacobian(params);
  }

  const Eigen::Matrix2d normal = jw.transpose() * jw;
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(normal);
  if (!lu.isInvertible() || !(std::abs(normal.determinant()) > 1e-14 * normal.diagonal().prod()))
    throw FitError("fit: singular normal matrix");

  result.s_parallel = params(0);
  result.coeff_per_U2 = params(1);
  result.chi_square = chi2;
  result.dof = static_cast<int>(r.size()) - 2;
  result.covariance = lu.inverse();
  if (options.chi2_scaling && result.dof > 0) result.covariance *= chi2 / result.dof;
  result.covariance = 0.5 * (result.covariance + result.covariance.transpose()).eval();
  result.converged = converged;
  result.iterations = iteration;
  result.residuals.reserve(set.observations.size());
  for (std::size_t i = 0; i < set.observations.size(); ++i)
    result.residuals.push_back({r(2 * i) * sigma(2 * i), r(2 * i + 1) * sigma(2 * i + 1)});
  return result;
}

Eigen::Vector2d parameter_uncertainties(const FitResult& result) {
  const Eigen::Matrix2d& c = result.covariance;
  if (!c.allFinite()) throw FitError("parameter_uncertainties: covariance is not finite");
  if (std::abs(c(0, 1) - c(1, 0)) > 1e-12 * std::abs(c(0, 1)))
    throw FitError("parameter_uncertainties: covariance is not symmetric");
  // scale-free PSD test: non-negative variances and |correlation| <= 1
  if (c(0, 0) < 0 || c(1, 1) < 0 ||
      c(0, 1) * c(0, 1) > c(0, 0) * c(1, 1) * (1 + 1e-12))
    throw FitError("parameter_uncertainties: covariance is not positive semi-definite");
  return c.diagonal().cwiseSqrt();
}

}  // namespace dispcomp
