#include "catapult/detection.hpp"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "catapult/error.hpp"
#include "catapult/units.hpp"
#include "catapult/warn.hpp"

namespace catapult {

void DetectorModel::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::invalid_argument, "detection efficiency must lie in [0, 1]");
  if (!(extra_noise >= 0.0)) throw Error(ErrorCode::invalid_argument, "extra noise variance must be >= 0");
}

namespace {

// I (x) ... (x) m (x) ... (x) I with m acting on `target`.
CMatrix embed(const CMatrix& m, const Space& space, Mode target) {
  const std::size_t pos = space.position(target);
  CMatrix out = CMatrix::Identity(1, 1);
  for (std::size_t i = 0; i < space.num_modes(); ++i) {
    const int c = space.mode(i).cutoff;
    const CMatrix f = i == pos ? m : CMatrix::Identity(c, c);
    out = Eigen::kroneckerProduct(out, f).eval();
  }
  return out;
}

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::invalid_argument, "loss transmissivity must lie in [0, 1]");
}

const QuantumState& require_single_mode(const QuantumState& rho) {
  if (rho.space().num_modes() != 1) throw Error(ErrorCode::dimension_mismatch, "expected a single-mode state");
  return rho;
}

}  // namespace

QuantumState loss_channel(const QuantumState& rho, double eta, Mode mode) {
  check_eta(eta);
  const int n_cut = rho.space().cutoff(mode);
  const CMatrix r = rho.density();
  CMatrix out = CMatrix::Zero(r.rows(), r.cols());
  for (int k = 0; k < n_cut; ++k) {
    CMatrix kk = CMatrix::Zero(n_cut, n_cut);
    bool nonzero = false;
    for (int n = k; n < n_cut; ++n) {
      const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
      const double v = std::exp(0.5 * logc) * std::pow(eta, 0.5 * (n - k)) * std::pow(1.0 - eta, 0.5 * k);
      if (v != 0.0) nonzero = true;
      kk(n - k, n) = v;
    }
    if (!nonzero) continue;
    const CMatrix full = rho.space().num_modes() == 1 ? kk : embed(kk, rho.space(), mode);
    out += full * r * full.adjoint();
  }
  StateTolerances tol;
  tol.trace = 1e-7;
  return QuantumState::from_density(rho.space(), 0.5 * (out + out.adjoint()), tol);
}

QuantumState loss_channel(const QuantumState& rho, double eta) {
  require_single_mode(rho);
  return loss_channel(rho, eta, rho.space().mode(0).label);
}

QuantumState loss_channel_beamsplitter(const QuantumState& rho, double eta) {
  check_eta(eta);
  require_single_mode(rho);
  const FockSpace sig = rho.space().mode(0);
  if (sig.label == Mode::e) throw Error(ErrorCode::invalid_argument, "signal mode cannot be the environment mode");
  const Space joint{sig, FockSpace(sig.cutoff, Mode::e)};
  const CMatrix b = mode_operator(op::Annihilate{}, joint, sig.label).matrix;
  const CMatrix e = mode_operator(op::Annihilate{}, joint, Mode::e).matrix;
  const double phi = std::acos(std::sqrt(eta));
  const CMatrix gen = phi * (b.adjoint() * e - b * e.adjoint());
  const CMatrix u = gen.exp();
  CVector vac = CVector::Zero(sig.cutoff);
  vac(0) = 1.0;
  const CMatrix in = Eigen::kroneckerProduct(rho.density(), CMatrix(vac * vac.adjoint())).eval();
  StateTolerances tol;
  tol.trace = 1e-7;
  const auto out = QuantumState::from_density(joint, u * in * u.adjoint(), tol);
  return partial_trace(out, {sig.label});
}

std::vector<double> matched_envelope(double g, double kappa_out, const std::vector<double>& times) {
  if (g == 0.0) throw Error(ErrorCode::invalid_argument, "matched envelope degenerates at g = 0");
  if (!(kappa_out > 0.0)) throw Error(ErrorCode::invalid_argument, "kappa_out must be positive");
  if (times.size() < 2) throw Error(ErrorCode::invalid_argument, "matched envelope needs at least two times");
  const double dt = times[1] - times[0];
  std::vector<double> f(times.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    f[i] = std::exp(-2.0 * g * g * times[i] / kappa_out) - std::exp(-0.5 * kappa_out * times[i]);
    norm += f[i] * f[i] * dt;
  }
  if (!(norm > 0.0)) throw Error(ErrorCode::invalid_argument, "matched envelope has zero norm on this grid");
  for (auto& v : f) v /= std::sqrt(norm);
  return f;
}

// ---------------------------------------------------------------- sampling

namespace {

struct Envelope {
  Eigen::Vector2d mean;
  Eigen::Matrix2d chol;
  Eigen::Matrix2d inv_cov;
  double norm = 0.0;  // 1/(2 pi sqrt det)
  double bound = 0.0;

  double density(const Eigen::Vector2d& z) const {
    const Eigen::Vector2d d = z - mean;
    return norm * std::exp(-0.5 * d.dot(inv_cov * d));
  }
};

CMatrix trimmed_density(const QuantumState& rho) {
  const CMatrix r = rho.density();
  Eigen::Index keep = r.rows();
  while (keep > 1 && std::abs(r(keep - 1, keep - 1)) < 1e-15) --keep;
  return r.topLeftCorner(keep, keep);
}

Envelope build_envelope(const CMatrix& r) {
  const int n = static_cast<int>(r.rows());
  const CMatrix a = single_mode_matrix(op::Annihilate{}, n + 2).topLeftCorner(n, n);
  CMatrix rr = r;
  const cplx m1 = (rr * a).trace();
  const double nbar = (rr * a.adjoint() * a).trace().real();
  // <a^2> needs the level above the trimmed support, which is empty
  const cplx m2 = (rr * a * a).trace();
  Eigen::Matrix2d cov;
  cov(0, 0) = 0.5 * (nbar + 1.0 + m2.real()) - m1.real() * m1.real();
  cov(1, 1) = 0.5 * (nbar + 1.0 - m2.real()) - m1.imag() * m1.imag();
  cov(0, 1) = cov(1, 0) = 0.5 * m2.imag() - m1.real() * m1.imag();
  cov *= 1.5;
  Envelope env;
  env.mean = {m1.real(), m1.imag()};
  Eigen::LLT<Eigen::Matrix2d> llt(cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::sampling, "sampler envelope covariance not positive");
  env.chol = llt.matrixL();
  env.inv_cov = cov.inverse();
  env.norm = 1.0 / (2.0 * units::pi * std::sqrt(cov.determinant()));

  // bound Q/envelope where Q carries probability; the far tails of a
  // truncated expansion sit at ~1e-12 and would inflate the bound
  const int pts = 121;
  std::vector<std::pair<double, double>> scan;  // (Q, envelope)
  double q_max = 0.0;
  for (int i = 0; i < pts; ++i) {
    for (int j = 0; j < pts; ++j) {
      const Eigen::Vector2d u(-6.0 + 12.0 * i / (pts - 1), -6.0 + 12.0 * j / (pts - 1));
      const Eigen::Vector2d z = env.mean + env.chol * u;
      const double q = husimi_q_at(r, cplx(z(0), z(1)));
      q_max = std::max(q_max, q);
      scan.emplace_back(q, env.density(z));
    }
  }
  double worst = 0.0;
  for (const auto& [q, g] : scan) {
    if (q > 1e-10 * q_max) worst = std::max(worst, q / g);
  }
  env.bound = 1.2 * worst;
  if (!(env.bound > 0.0) || 1.0 / env.bound < 1e-3) {
    std::ostringstream msg;
    msg << "rejection sampler acceptance " << 1.0 / env.bound << " below 1e-3 (envelope mean " << m1
        << ", nbar " << nbar << ")";
    throw Error(ErrorCode::sampling, msg.str());
  }
  return env;
}

}  // namespace

ShotSet sample_heterodyne(const QuantumState& rho, const DetectorModel& det, std::size_t n_shots, std::uint64_t seed,
                          const SamplerOptions& opt) {
  det.validate();
  require_single_mode(rho);
  if (n_shots == 0) throw Error(ErrorCode::invalid_argument, "need at least one shot");
  if (opt.block_size == 0) throw Error(ErrorCode::invalid_argument, "block size must be positive");
  const CMatrix r = trimmed_density(rho);
  const Envelope env = build_envelope(r);
  const cplx rot = std::polar(1.0, -det.demod_detuning * det.demod_time);
  const double noise_sd = std::sqrt(0.5 * det.extra_noise);

  const std::size_t n_blocks = (n_shots + opt.block_size - 1) / opt.block_size;
  std::vector<std::vector<cplx>> blocks(n_blocks);
  std::atomic<long> violations{0};

  auto run_block = [&](std::size_t b) {
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    std::mt19937_64 rng(ss);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const std::size_t want = std::min(opt.block_size, n_shots - b * opt.block_size);
    auto& out = blocks[b];
    out.reserve(want);
    long local_violations = 0;
    while (out.size() < want) {
      const Eigen::Vector2d u(normal(rng), normal(rng));
      const Eigen::Vector2d z = env.mean + env.chol * u;
      const cplx s(z(0), z(1));
      const double ratio = husimi_q_at(r, s) / (env.bound * env.density(z));
      if (ratio > 1.0) ++local_violations;
      if (uniform(rng) >= ratio) continue;
      cplx shot = s;
      if (noise_sd > 0.0) shot += cplx(noise_sd * normal(rng), noise_sd * normal(rng));
      out.push_back(shot * rot);
    }
    violations += local_violations;
  };

  unsigned n_threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_blocks));
  if (n_threads <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < n_blocks; b += n_threads) run_block(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  ShotSet shots;
  shots.seed = seed;
  shots.eta = det.eta;
  shots.samples.reserve(n_shots);
  for (auto& blk : blocks) shots.samples.insert(shots.samples.end(), blk.begin(), blk.end());
  shots.bound_violations = violations;
  if (shots.bound_violations > 0) {
    warn("heterodyne sampler envelope bound exceeded " + std::to_string(shots.bound_violations) + " times");
  }
  return shots;
}

ShotSet detect(const QuantumState& rho, const DetectorModel& det, std::size_t n_shots, std::uint64_t seed,
               const SamplerOptions& opt) {
  det.validate();
  return sample_heterodyne(loss_channel(rho, det.eta), det, n_shots, seed, opt);
}

void write_shots_csv(std::ostream& os, const ShotSet& shots, const std::vector<std::string>& header) {
  for (const auto& line : header) os << "# " << line << '\n';
  os << "# seed=" << shots.seed << " eta_det=" << shots.eta << " scale=" << shots.scale << '\n';
  os << "I,Q\n" << std::setprecision(10);
  for (const auto& s : shots.samples) os << s.real() << ',' << s.imag() << '\n';
}

// -------------------------------------------------------------- histograms

double QHistogram::integral() const { return density.sum() * grid.d_re() * grid.d_im(); }

PhaseSpaceField QHistogram::as_field() const {
  PhaseSpaceField f;
  f.grid = grid;
  f.values = density;
  f.integral = integral();
  f.truncated = std::abs(f.integral - 1.0) > 1e-2;
  return f;
}

QHistogram histogram_q(const ShotSet& shots, const PhaseGrid& grid) {
  if (grid.n_re < 2 || grid.n_im < 2) throw Error(ErrorCode::invalid_argument, "histogram grid needs >= 2 points per axis");
  QHistogram h;
  h.grid = grid;
  h.counts = Eigen::MatrixXd::Zero(grid.n_im, grid.n_re);
  const double dx = grid.d_re(), dy = grid.d_im();
  for (const auto& s : shots.samples) {
    const long i = std::lround((s.real() - grid.re_min) / dx);
    const long j = std::lround((s.imag() - grid.im_min) / dy);
    if (i < 0 || j < 0 || i >= grid.n_re || j >= grid.n_im) {
      ++h.outside;
      continue;
    }
    h.counts(j, i) += 1.0;
  }
  h.total = shots.count();
  h.density = h.total ? Eigen::MatrixXd(h.counts / (static_cast<double>(h.total) * dx * dy))
                      : Eigen::MatrixXd::Zero(grid.n_im, grid.n_re);
  return h;
}

namespace {

// Gaussian fit to Poisson counts: a first pass weighted by the data, then a
// refit weighted by the fitted model, which removes the low-count bias.
fit::FitResult poisson_gauss2d(const QHistogram& h) {
  std::vector<double> x(h.grid.n_re), y(h.grid.n_im);
  for (int i = 0; i < h.grid.n_re; ++i) x[i] = h.grid.re_at(i);
  for (int j = 0; j < h.grid.n_im; ++j) y[j] = h.grid.im_at(j);
  auto f = fit::gauss2d_fit(x, y, h.counts, h.counts.cwiseMax(1.0).cwiseSqrt());
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::MatrixXd model(h.grid.n_im, h.grid.n_re);
    for (int j = 0; j < h.grid.n_im; ++j) {
      for (int i = 0; i < h.grid.n_re; ++i) {
        const double dx = (x[i] - f["x0"]) / f["sigma_x"], dy = (y[j] - f["y0"]) / f["sigma_y"];
        model(j, i) = f["amplitude"] * std::exp(-0.5 * (dx * dx + dy * dy)) + f["offset"];
      }
    }
    f = fit::gauss2d_fit(x, y, h.counts, model.cwiseMax(0.5).cwiseSqrt());
  }
  return f;
}

}  // namespace

VacuumCalibration vacuum_calibrate(const ShotSet& vacuum, double max_reduced_chi2) {
  if (vacuum.count() < 1000) throw Error(ErrorCode::invalid_argument, "vacuum calibration needs >= 1000 shots");
  double m2 = 0.0;
  for (const auto& s : vacuum.samples) m2 += std::norm(s);
  const double sigma_guess = std::sqrt(0.5 * m2 / static_cast<double>(vacuum.count()));
  const auto h = histogram_q(vacuum, PhaseGrid::square(5.0 * sigma_guess, 101));
  const auto f = poisson_gauss2d(h);
  if (f.reduced_chi2() > max_reduced_chi2) {
    throw Error(ErrorCode::fit_failed, "vacuum histogram is not Gaussian (reduced chi2 " +
                                           std::to_string(f.reduced_chi2()) + ")");
  }
  VacuumCalibration c;
  const double sx = std::abs(f["sigma_x"]), sy = std::abs(f["sigma_y"]);
  c.fitted_sigma = 0.5 * (sx + sy);
  const double var = 0.25 * (f.covariance(3, 3) + f.covariance(4, 4) + 2.0 * f.covariance(3, 4));
  c.scale = 1.0 / (std::sqrt(2.0) * c.fitted_sigma);
  c.scale_error = c.scale * std::sqrt(std::max(var, 0.0)) / c.fitted_sigma;
  c.reduced_chi2 = f.reduced_chi2();
  return c;
}

ShotSet apply_calibration(const ShotSet& shots, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::invalid_argument, "calibration scale must be positive");
  ShotSet out = shots;
  for (auto& s : out.samples) s *= scale;
  out.scale = shots.scale * scale;
  return out;
}

Marginal radial_marginal(const QHistogram& hist, int n_phi) {
  if (n_phi < 2) throw Error(ErrorCode::invalid_argument, "need at least two angular bins");
  const double in_grid = hist.counts.sum();
  if (!(in_grid > 0.0)) throw Error(ErrorCode::invalid_argument, "empty histogram");
  Marginal m;
  m.bin_width = units::two_pi / n_phi;
  m.counts.assign(static_cast<std::size_t>(n_phi), 0.0);
  // spread each bin over sub-cells so sectors near the origin are not aliased
  const int sub = 8;
  const double dx = hist.grid.d_re(), dy = hist.grid.d_im();
  for (int j = 0; j < hist.grid.n_im; ++j) {
    for (int i = 0; i < hist.grid.n_re; ++i) {
      const double c = hist.counts(j, i);
      if (c == 0.0) continue;
      for (int sj = 0; sj < sub; ++sj) {
        for (int si = 0; si < sub; ++si) {
          const double x = hist.grid.re_at(i) + dx * ((si + 0.5) / sub - 0.5);
          const double y = hist.grid.im_at(j) + dy * ((sj + 0.5) / sub - 0.5);
          double phi = std::atan2(y, x);
          if (phi < 0.0) phi += units::two_pi;
          const int k = std::min(n_phi - 1, static_cast<int>(phi / m.bin_width));
          m.counts[static_cast<std::size_t>(k)] += c / (sub * sub);
        }
      }
    }
  }
  m.total = static_cast<std::size_t>(in_grid);
  for (int k = 0; k < n_phi; ++k) {
    m.centers.push_back((k + 0.5) * m.bin_width);
    m.density.push_back(m.counts[static_cast<std::size_t>(k)] / (in_grid * m.bin_width));
  }
  return m;
}

Marginal axis_marginal(const QHistogram& hist, Axis axis) {
  const double in_grid = hist.counts.sum();
  if (!(in_grid > 0.0)) throw Error(ErrorCode::invalid_argument, "empty histogram");
  Marginal m;
  const bool along_i = axis == Axis::I;
  const int n = along_i ? hist.grid.n_re : hist.grid.n_im;
  m.bin_width = along_i ? hist.grid.d_re() : hist.grid.d_im();
  m.total = static_cast<std::size_t>(in_grid);
  for (int k = 0; k < n; ++k) {
    const double c = along_i ? hist.counts.col(k).sum() : hist.counts.row(k).sum();
    m.centers.push_back(along_i ? hist.grid.re_at(k) : hist.grid.im_at(k));
    m.counts.push_back(c);
    m.density.push_back(c / (in_grid * m.bin_width));
  }
  return m;
}

Marginal exact_axis_marginal(const QuantumState& rho, Axis axis, const std::vector<double>& centers,
                             double bin_width) {
  require_single_mode(rho);
  if (!(bin_width > 0.0)) throw Error(ErrorCode::invalid_argument, "bin width must be positive");
  const CMatrix r = trimmed_density(rho);
  const double reach = std::sqrt(static_cast<double>(r.rows())) + 7.0;
  const double step = 0.05;
  const int ny = static_cast<int>(std::ceil(2.0 * reach / step)) + 1;
  // 3-point Gauss-Legendre over each bin
  const double gl_x[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gl_w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  Marginal m;
  m.centers = centers;
  m.bin_width = bin_width;
  for (double c : centers) {
    double bin = 0.0;
    for (int q = 0; q < 3; ++q) {
      const double x = c + 0.5 * bin_width * gl_x[q];
      double line = 0.0;
      for (int k = 0; k < ny; ++k) {
        const double y = -reach + step * k;
        const cplx alpha = axis == Axis::I ? cplx(x, y) : cplx(y, x);
        const double w = (k == 0 || k == ny - 1) ? 0.5 : 1.0;
        line += w * husimi_q_at(r, alpha);
      }
      bin += 0.5 * gl_w[q] * line * step;
    }
    m.density.push_back(bin);
  }
  return m;
}

Harmonic angular_harmonic(const ShotSet& shots, int n) {
  if (shots.count() < 2) throw Error(ErrorCode::invalid_argument, "need at least two shots");
  double sr = 0.0, si = 0.0, sr2 = 0.0, si2 = 0.0;
  for (const auto& s : shots.samples) {
    const double a = std::abs(s);
    if (a == 0.0) continue;
    const cplx v = std::pow(std::conj(s) / a, n);
    sr += v.real();
    si += v.imag();
    sr2 += v.real() * v.real();
    si2 += v.imag() * v.imag();
  }
  const double N = static_cast<double>(shots.count());
  Harmonic h;
  h.value = cplx(sr / N, si / N);
  h.se_re = std::sqrt(std::max(sr2 / N - h.value.real() * h.value.real(), 0.0) / (N - 1.0));
  h.se_im = std::sqrt(std::max(si2 / N - h.value.imag() * h.value.imag(), 0.0) / (N - 1.0));
  return h;
}

cplx exact_angular_harmonic(const QuantumState& rho, int n) {
  require_single_mode(rho);
  if (n < 0) throw Error(ErrorCode::invalid_argument, "harmonic order must be >= 0");
  const CMatrix r = rho.density();
  cplx sum = 0.0;
  for (int m = 0; m + n < r.rows(); ++m) {
    const double lw = std::lgamma(m + 0.5 * n + 1.0) - 0.5 * (std::lgamma(m + 1.0) + std::lgamma(m + n + 1.0));
    sum += r(m, m + n) * std::exp(lw);
  }
  return sum;
}

EfficiencyEstimate fit_detection_efficiency(const QHistogram& hist, cplx alpha0) {
  if (std::abs(alpha0) == 0.0) throw Error(ErrorCode::invalid_argument, "reference amplitude must be nonzero");
  if (!(hist.counts.sum() > 0.0)) throw Error(ErrorCode::invalid_argument, "empty histogram");
  EfficiencyEstimate e;
  e.fit = poisson_gauss2d(hist);
  const double x0 = e.fit["x0"], y0 = e.fit["y0"];
  e.center = {x0, y0};
  const double a2 = std::norm(alpha0);
  e.eta = (x0 * x0 + y0 * y0) / a2;
  const Eigen::Vector2d grad(2.0 * x0 / a2, 2.0 * y0 / a2);
  const Eigen::Matrix2d cov = e.fit.covariance.block<2, 2>(1, 1);
  e.eta_error = std::sqrt(std::max(grad.dot(cov * grad), 0.0));
  return e;
}

AverageSignal average_signal(const std::vector<double>& times, const std::vector<cplx>& waveform,
                             const DetectorModel& det, std::size_t n_shots, std::uint64_t seed) {
  det.validate();
  if (times.size() != waveform.size() || times.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "waveform and time grid must match and hold >= 2 points");
  }
  if (n_shots == 0) throw Error(ErrorCode::invalid_argument, "need at least one shot");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "time grid must be increasing");
  AverageSignal out;
  out.times = times;
  out.sigma = std::sqrt((1.0 + det.extra_noise) / (2.0 * dt * static_cast<double>(n_shots)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, out.sigma);
  const double amp = std::sqrt(det.eta);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const cplx m = amp * waveform[k] * std::polar(1.0, -det.demod_detuning * times[k]);
    out.i_mean.push_back(m.real() + normal(rng));
    out.q_mean.push_back(m.imag() + normal(rng));
  }
  return out;
}

}  // namespace catapult
