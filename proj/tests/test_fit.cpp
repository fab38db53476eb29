#include <doctest.h>

#include <cmath>
#include <random>

#include "catapult/error.hpp"
#include "catapult/fit.hpp"

using namespace catapult;

TEST_CASE("noiseless exponential is recovered to machine precision") {
  std::vector<double> t, y;
  for (int i = 0; i < 40; ++i) {
    t.push_back(0.25 * i);
    y.push_back(1.7 * std::exp(-t.back() / 3.1));
  }
  const auto f = fit::exponential_fit(t, y);
  CHECK(f["rate"] == doctest::Approx(1.0 / 3.1).epsilon(1e-10));
  CHECK(f["amplitude"] == doctest::Approx(1.7).epsilon(1e-10));

  for (auto& v : y) v += 0.2;
  const auto g = fit::exponential_fit(t, y, true);
  CHECK(g["rate"] == doctest::Approx(1.0 / 3.1).epsilon(1e-8));
  CHECK(g["offset"] == doctest::Approx(0.2).epsilon(1e-8));
}

TEST_CASE("exponential on physical scales") {
  std::vector<double> t, y;
  for (int i = 0; i < 60; ++i) {
    t.push_back(1e-6 * i);
    y.push_back(std::exp(-t.back() * 1.1e5));
  }
  CHECK(fit::exponential_fit(t, y)["rate"] == doctest::Approx(1.1e5).epsilon(1e-9));
}

TEST_CASE("linear fit of exact quadratic Stark data gives the exact slope") {
  std::vector<double> u2, s;
  for (int i = 0; i <= 8; ++i) {
    u2.push_back(0.1 * i * 0.1 * i);
    s.push_back(-3.825 * u2.back());
  }
  const auto f = fit::linear_fit(u2, s);
  CHECK(f["slope"] == doctest::Approx(-3.825).epsilon(1e-12));
  CHECK(std::abs(f["intercept"]) < 1e-12);
  CHECK_THROWS_AS(fit::linear_fit({1, 1, 1, 1}, {1, 2, 3, 4}), Error);
  CHECK_THROWS_AS(fit::linear_fit({1, 2, 3}, {1, 2, 3}), Error);
}

TEST_CASE("double exponential recovers both rates") {
  std::vector<double> t, y;
  for (int i = 0; i < 200; ++i) {
    t.push_back(0.05e-6 * i);
    y.push_back(-0.8 * (std::exp(-0.5e5 * t.back()) - std::exp(-2.0e6 * t.back())));
  }
  const auto f = fit::double_exponential_fit(t, y);
  CHECK(f["rate1"] == doctest::Approx(0.5e5).epsilon(1e-7));
  CHECK(f["rate2"] == doctest::Approx(2.0e6).epsilon(1e-7));
  CHECK(f["amplitude"] == doctest::Approx(-0.8).epsilon(1e-7));
}

TEST_CASE("Lorentzian FWHM within 3 sigma in 95% of noisy trials") {
  const double fwhm = 4.0, center = 0.3, amp = 2.0;
  int inside = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(1000 + trial);
    std::normal_distribution<double> n(0.0, 0.01 * amp);
    std::vector<double> x, y;
    for (int i = 0; i < 41; ++i) {
      x.push_back(-10.0 + 0.5 * i);
      const double u = 2.0 * (x.back() - center) / fwhm;
      y.push_back(amp / (1.0 + u * u) + 0.1 + n(rng));
    }
    const auto f = fit::lorentzian_fit(x, y);
    if (std::abs(f["fwhm"] - fwhm) < 3.0 * f.error("fwhm")) ++inside;
  }
  CHECK(inside >= 0.95 * trials);
}

TEST_CASE("2D Gaussian fit") {
  std::vector<double> x, y;
  for (int i = 0; i < 41; ++i) x.push_back(-4.0 + 0.2 * i);
  y = x;
  Eigen::MatrixXd z(41, 41);
  for (int j = 0; j < 41; ++j) {
    for (int i = 0; i < 41; ++i) {
      const double dx = x[i] - 0.656, dy = y[j] + 0.1;
      z(j, i) = 0.3 * std::exp(-0.5 * (dx * dx / 0.49 + dy * dy / 0.64));
    }
  }
  const auto f = fit::gauss2d_fit(x, y, z);
  CHECK(f["x0"] == doctest::Approx(0.656).epsilon(1e-8));
  CHECK(f["y0"] == doctest::Approx(-0.1).epsilon(1e-8));
  CHECK(f["sigma_x"] == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(f["sigma_y"] == doctest::Approx(0.8).epsilon(1e-8));
}

TEST_CASE("too few points") {
  CHECK_THROWS_AS(fit::exponential_fit({0, 1, 2}, {1, 0.5, 0.25}), Error);
  CHECK_THROWS_AS(fit::lorentzian_fit({0, 1, 2, 3, 4}, {1, 2, 3, 2, 1}), Error);
}
