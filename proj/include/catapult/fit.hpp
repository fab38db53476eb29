#pragma once

// Curve fitting used by the analyses: closed-form linear least squares and
// Levenberg-Marquardt (MINPACK port in Eigen's unsupported module) for the
// nonlinear models. Parameter errors come from (J^T J)^-1 scaled by the
// reduced chi-square unless explicit sigmas are supplied.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace catapult::fit {

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd params;
  Eigen::VectorXd errors;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;

  double reduced_chi2() const { return dof > 0 ? chi2 / dof : 0.0; }
  double operator[](const std::string& name) const;
  double error(const std::string& name) const;
};

/// y = slope x + intercept.
FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& sigma = {});

/// y = amplitude exp(-rate x) (+ offset when `with_offset`).
FitResult exponential_fit(const std::vector<double>& x, const std::vector<double>& y, bool with_offset = false,
                          const std::vector<double>& sigma = {});

/// y = amplitude (exp(-rate1 x) - exp(-rate2 x)), rate1 < rate2.
FitResult double_exponential_fit(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<double>& sigma = {});

/// y = amplitude / (1 + (2 (x - center)/fwhm)^2) + offset.
FitResult lorentzian_fit(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& sigma = {});

/// z = amplitude exp(-(x-x0)^2/(2 sx^2) - (y-y0)^2/(2 sy^2)) + offset on a
/// regular grid; z(j, i) sits at (x[i], y[j]).
FitResult gauss2d_fit(const std::vector<double>& x, const std::vector<double>& y, const Eigen::MatrixXd& z,
                      const Eigen::MatrixXd& sigma = {});

/// Generic damped least squares on a residual vector r(p) (already weighted).
FitResult least_squares(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                        Eigen::VectorXd p0, int n_obs, std::vector<std::string> names,
                        bool scale_by_chi2 = true, int max_evaluations = 4000);

}  // namespace catapult::fit
