#ifndef DISPCOMP_FIT_HPP
#define DISPCOMP_FIT_HPP

// Joint phase + visibility fit for (S_parallel, phase per V^2 at the mean
// velocity), with u and the Earth-Sagnac amplitude held fixed.

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dispcomp/beam.hpp"

namespace dispcomp {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Observation {
  double voltage_U = 0;    // V
  double phase_meas = 0;   // rad
  double phase_sigma = 0;  // rad
  double vis_ratio = 0;    // <V(U)> / <V(0)>
  double vis_sigma = 0;
};

struct AveragingOptions {
  double width_sigmas = 8;
  int node_count = 257;
};

struct ObservationSet {
  std::vector<Observation> observations;
  double beam_u = 0;
  /// Earth-Sagnac phase at u; zero leaves the term out of the model.
  double sagnac_amplitude_at_mean = 0;
  double v0 = 1;
  AveragingOptions averaging;

  void validate() const;
};

struct ModelPoint {
  double phase;
  double vis_ratio;
};

/// Measured phase shift and reduced visibility at one voltage. The
/// polarizability term is -coeff U^2 (u/v), opposite in sign to the Sagnac term.
ModelPoint predict(double s_parallel, double coeff_per_U2, double voltage_U,
                   const ObservationSet& context);

/// Model values stacked as [phase_0, vis_0, phase_1, vis_1, ...].
Eigen::VectorXd model_vector(const ObservationSet& set, const Eigen::Vector2d& params,
                             bool parallel = true);

enum class Difference { forward, central };

/// d model / d (S_parallel, coeff) with step relative_step * |param|.
Eigen::MatrixXd model_jacobian(const ObservationSet& set, const Eigen::Vector2d& params,
                               double relative_step, Difference scheme = Difference::forward,
                               bool parallel = true);

struct FitOptions {
  int max_iterations = 200;
  bool chi2_scaling = true;
  double relative_step = 1e-6;
  /// Converged when every scaled gradient component is below
  /// gradient_tolerance * |r| + 1e-10.
  double gradient_tolerance = 1e-5;
  bool parallel = true;
};

struct ResidualPair {
  double phase;       // measured - model, rad
  double visibility;  // measured - model
};

struct FitResult {
  double s_parallel = 0;
  double coeff_per_U2 = 0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double chi_square = 0;
  int dof = 0;
  std::vector<ResidualPair> residuals;
  bool converged = false;
  int iterations = 0;
};

/// S_parallel = 8 and the least-squares slope of -phase against U^2 over the
/// three smallest non-zero voltages.
Eigen::Vector2d default_initial(const ObservationSet& set);

FitResult fit(const ObservationSet& set, std::optional<Eigen::Vector2d> initial = std::nullopt,
              const FitOptions& options = {});

/// (sigma_S, sigma_coeff) from the covariance diagonal.
Eigen::Vector2d parameter_uncertainties(const FitResult& result);

}  // namespace dispcomp

#endif  // DISPCOMP_FIT_HPP
