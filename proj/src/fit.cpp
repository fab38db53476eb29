#include "catapult/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "catapult/error.hpp"

namespace catapult::fit {

double FitResult::operator[](const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return params(static_cast<Eigen::Index>(i));
  }
  throw Error(ErrorCode::invalid_argument, "no fit parameter named '" + name + "'");
}

double FitResult::error(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return errors(static_cast<Eigen::Index>(i));
  }
  throw Error(ErrorCode::invalid_argument, "no fit parameter named '" + name + "'");
}

namespace {

struct ResidualFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>* f;
  int n_in;
  int n_out;

  int inputs() const { return n_in; }
  int values() const { return n_out; }
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    r = (*f)(p);
    return r.allFinite() ? 0 : -1;
  }
};

Eigen::MatrixXd central_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& p, int n_obs) {
  Eigen::MatrixXd j(n_obs, p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = 1e-6 * std::max(std::abs(p(k)), 1e-12) + 1e-300;
    Eigen::VectorXd pp = p, pm = p;
    pp(k) += h;
    pm(k) -= h;
    j.col(k) = (f(pp) - f(pm)) / (2.0 * h);
  }
  return j;
}

void check_sizes(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma,
                 std::size_t n_params) {
  if (x.size() != y.size()) throw Error(ErrorCode::dimension_mismatch, "fit: x and y sizes differ");
  if (!sigma.empty() && sigma.size() != x.size()) throw Error(ErrorCode::dimension_mismatch, "fit: sigma size differs");
  if (x.size() < n_params + 2) {
    throw Error(ErrorCode::invalid_argument, "fit needs at least " + std::to_string(n_params + 2) + " points");
  }
  for (double s : sigma) {
    if (!(s > 0.0)) throw Error(ErrorCode::invalid_argument, "fit: sigmas must be positive");
  }
}

double weight(const std::vector<double>& sigma, std::size_t i) { return sigma.empty() ? 1.0 : 1.0 / sigma[i]; }

template <class Model>
FitResult curve_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma,
                    Model model, Eigen::VectorXd p0, std::vector<std::string> names) {
  const int n = static_cast<int>(x.size());
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r(i) = (model(p, x[i]) - y[i]) * weight(sigma, i);
    return r;
  };
  return least_squares(residuals, std::move(p0), n, std::move(names), sigma.empty());
}

// log-linear estimate of (amplitude, rate) for y ~ A exp(-r x), using |y|.
std::pair<double, double> log_linear_guess(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  const double peak = std::accumulate(y.begin(), y.end(), 0.0, [](double m, double v) { return std::max(m, std::abs(v)); });
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(y[i]) > 1e-3 * peak) {
      lx.push_back(x[i]);
      ly.push_back(std::log(std::abs(y[i])));
    }
  }
  if (lx.size() < 2) return {y.front(), 1.0 / std::max(x.back() - x.front(), 1e-300)};
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {std::exp(my - slope * mx), -slope};
}

}  // namespace

FitResult least_squares(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals, Eigen::VectorXd p0,
                        int n_obs, std::vector<std::string> names, bool scale_by_chi2, int max_evaluations) {
  const int n_par = static_cast<int>(p0.size());
  if (n_obs < n_par) throw Error(ErrorCode::invalid_argument, "fit: fewer observations than parameters");
  if (!residuals(p0).allFinite()) throw Error(ErrorCode::fit_failed, "fit: residuals not finite at the initial guess");

  ResidualFunctor functor{&residuals, n_par, n_obs};
  Eigen::NumericalDiff<ResidualFunctor> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ResidualFunctor>> lm(numdiff);
  lm.parameters.maxfev = max_evaluations;
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-14;
  Eigen::VectorXd p = p0;
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
      status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation || status < 0 || !p.allFinite()) {
    throw Error(ErrorCode::fit_failed, "Levenberg-Marquardt did not converge (status " +
                                           std::to_string(static_cast<int>(status)) + ")");
  }

  FitResult out;
  out.names = std::move(names);
  out.params = p;
  const Eigen::VectorXd r = residuals(p);
  out.chi2 = r.squaredNorm();
  out.dof = n_obs - n_par;
  out.iterations = static_cast<int>(lm.iter);
  const Eigen::MatrixXd j = central_jacobian(residuals, p, n_obs);
  const Eigen::MatrixXd jtj = j.transpose() * j;
  out.covariance = jtj.completeOrthogonalDecomposition().pseudoInverse();
  if (scale_by_chi2 && out.dof > 0) out.covariance *= out.reduced_chi2();
  out.errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma) {
  check_sizes(x, y, sigma, 2);
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weight(sigma, static_cast<std::size_t>(i));
    a(i, 0) = x[static_cast<std::size_t>(i)] * w;
    a(i, 1) = w;
    b(i) = y[static_cast<std::size_t>(i)] * w;
  }
  const Eigen::MatrixXd ata = a.transpose() * a;
  if (std::abs(ata.determinant()) <= 1e-300 * ata.cwiseAbs().maxCoeff() ||
      std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
    throw Error(ErrorCode::invalid_argument, "linear fit: degenerate abscissae (all x equal)");
  }
  FitResult out;
  out.names = {"slope", "intercept"};
  out.params = a.colPivHouseholderQr().solve(b);
  out.chi2 = (a * out.params - b).squaredNorm();
  out.dof = static_cast<int>(n) - 2;
  out.covariance = ata.inverse();
  if (sigma.empty() && out.dof > 0) out.covariance *= out.reduced_chi2();
  out.errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

FitResult exponential_fit(const std::vector<double>& x, const std::vector<double>& y, bool with_offset,
                          const std::vector<double>& sigma) {
  check_sizes(x, y, sigma, with_offset ? 3 : 2);
  if (!with_offset) {
    const auto [a0, r0] = log_linear_guess(x, y);
    Eigen::VectorXd p0(2);
    p0 << (y.front() < 0 ? -a0 : a0), r0;
    return curve_fit(x, y, sigma, [](const Eigen::VectorXd& p, double t) { return p(0) * std::exp(-p(1) * t); }, p0,
                     {"amplitude", "rate"});
  }
  const double off = y.back();
  std::vector<double> shifted(y.size());
  std::transform(y.begin(), y.end(), shifted.begin(), [off](double v) { return v - off; });
  auto [a0, r0] = log_linear_guess(x, shifted);
  Eigen::VectorXd p0(3);
  p0 << (shifted.front() < 0 ? -a0 : a0), r0, off;
  return curve_fit(x, y, sigma,
                   [](const Eigen::VectorXd& p, double t) { return p(0) * std::exp(-p(1) * t) + p(2); }, p0,
                   {"amplitude", "rate", "offset"});
}

FitResult double_exponential_fit(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<double>& sigma) {
  check_sizes(x, y, sigma, 3);
  // slow rate and amplitude from the tail, fast rate from the peak position
  const std::size_t half = x.size() / 2;
  const std::vector<double> tx(x.begin() + static_cast<long>(half), x.end());
  const std::vector<double> ty(y.begin() + static_cast<long>(half), y.end());
  auto [a0, r1] = log_linear_guess(tx, ty);
  r1 = std::max(r1, 1e-3 / std::max(x.back() - x.front(), 1e-300));
  std::size_t ipk = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(y[i]) > std::abs(y[ipk])) ipk = i;
  }
  const double tpk = std::max(x[ipk] - x.front(), (x[1] - x[0]));
  // t* = ln(r2/r1)/(r2 - r1): solve for r2 > r1 by bisection on log r2
  double lo = std::log(r1 * (1.0 + 1e-9)), hi = std::log(r1) + 40.0;
  auto peak_time = [r1](double r2) { return std::log(r2 / r1) / (r2 - r1); };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (peak_time(std::exp(mid)) > tpk ? lo : hi) = mid;
  }
  double r2 = std::exp(0.5 * (lo + hi));
  if (!(r2 > r1 * 1.01)) r2 = 10.0 * r1;
  const double sign = y[ipk] < 0 ? -1.0 : 1.0;
  Eigen::VectorXd p0(3);
  p0 << sign * std::abs(a0), r1, r2;
  auto res = curve_fit(
      x, y, sigma,
      [](const Eigen::VectorXd& p, double t) { return p(0) * (std::exp(-p(1) * t) - std::exp(-p(2) * t)); }, p0,
      {"amplitude", "rate1", "rate2"});
  if (res.params(1) > res.params(2)) {
    // same curve with the labels swapped
    std::swap(res.params(1), res.params(2));
    res.params(0) = -res.params(0);
    std::swap(res.errors(1), res.errors(2));
    Eigen::PermutationMatrix<3> perm;
    perm.indices() << 0, 2, 1;
    res.covariance = perm * res.covariance * perm.transpose();
  }
  return res;
}

FitResult lorentzian_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma) {
  check_sizes(x, y, sigma, 4);
  const double off = 0.5 * (y.front() + y.back());
  std::size_t ipk = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(y[i] - off) > std::abs(y[ipk] - off)) ipk = i;
  }
  const double amp = y[ipk] - off;
  // half-maximum crossings
  std::size_t l = ipk, r = ipk;
  while (l > 0 && std::abs(y[l] - off) > 0.5 * std::abs(amp)) --l;
  while (r + 1 < y.size() && std::abs(y[r] - off) > 0.5 * std::abs(amp)) ++r;
  double fwhm = x[r] - x[l];
  if (!(fwhm > 0.0)) fwhm = 0.25 * (x.back() - x.front());
  Eigen::VectorXd p0(4);
  p0 << amp, x[ipk], fwhm, off;
  auto res = curve_fit(
      x, y, sigma,
      [](const Eigen::VectorXd& p, double t) {
        const double u = 2.0 * (t - p(1)) / p(2);
        return p(0) / (1.0 + u * u) + p(3);
      },
      p0, {"amplitude", "center", "fwhm", "offset"});
  res.params(2) = std::abs(res.params(2));
  return res;
}

FitResult gauss2d_fit(const std::vector<double>& x, const std::vector<double>& y, const Eigen::MatrixXd& z,
                      const Eigen::MatrixXd& sigma) {
  const auto nx = static_cast<Eigen::Index>(x.size());
  const auto ny = static_cast<Eigen::Index>(y.size());
  if (z.rows() != ny || z.cols() != nx) throw Error(ErrorCode::dimension_mismatch, "gauss2d fit: grid mismatch");
  if (sigma.size() != 0 && (sigma.rows() != ny || sigma.cols() != nx)) {
    throw Error(ErrorCode::dimension_mismatch, "gauss2d fit: sigma grid mismatch");
  }
  if (nx * ny < 8) throw Error(ErrorCode::invalid_argument, "gauss2d fit needs at least 8 points");

  // moment-based start
  const double zmin = z.minCoeff();
  double w = 0.0, mx = 0.0, my = 0.0;
  for (Eigen::Index j = 0; j < ny; ++j) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      const double v = z(j, i) - zmin;
      w += v;
      mx += v * x[static_cast<std::size_t>(i)];
      my += v * y[static_cast<std::size_t>(j)];
    }
  }
  if (!(w > 0.0)) throw Error(ErrorCode::fit_failed, "gauss2d fit: flat data");
  mx /= w;
  my /= w;
  double vx = 0.0, vy = 0.0;
  for (Eigen::Index j = 0; j < ny; ++j) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      const double v = z(j, i) - zmin;
      vx += v * std::pow(x[static_cast<std::size_t>(i)] - mx, 2);
      vy += v * std::pow(y[static_cast<std::size_t>(j)] - my, 2);
    }
  }
  Eigen::VectorXd p0(6);
  p0 << z.maxCoeff() - zmin, mx, my, std::sqrt(vx / w), std::sqrt(vy / w), zmin;

  const bool weighted = sigma.size() != 0;
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(nx * ny);
    for (Eigen::Index j = 0; j < ny; ++j) {
      for (Eigen::Index i = 0; i < nx; ++i) {
        const double dx = (x[static_cast<std::size_t>(i)] - p(1)) / p(3);
        const double dy = (y[static_cast<std::size_t>(j)] - p(2)) / p(4);
        const double model = p(0) * std::exp(-0.5 * (dx * dx + dy * dy)) + p(5);
        r(j * nx + i) = (model - z(j, i)) / (weighted ? sigma(j, i) : 1.0);
      }
    }
    return r;
  };
  auto res = least_squares(residuals, p0, static_cast<int>(nx * ny),
                           {"amplitude", "x0", "y0", "sigma_x", "sigma_y", "offset"}, !weighted);
  res.params(3) = std::abs(res.params(3));
  res.params(4) = std::abs(res.params(4));
  return res;
}

}  // namespace catapult::fit
