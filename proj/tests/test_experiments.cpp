#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "catapult/error.hpp"
#include "catapult/experiments.hpp"
#include "catapult/release.hpp"
#include "catapult/svg.hpp"
#include "catapult/units.hpp"

using namespace catapult;
namespace ex = catapult::experiments;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("catapult_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("svg line plot and heatmap render well-formed documents") {
  svg::LinePlot plot{"a < b", "x", "y", {{"s & t", {0, 1, 2}, {1, 4, 9}}}};
  const auto doc = svg::render(plot);
  CHECK(doc.rfind("<?xml", 0) == 0);
  CHECK(doc.find("</svg>") != std::string::npos);
  CHECK(doc.find("a &lt; b") != std::string::npos);
  CHECK(doc.find("s &amp; t") != std::string::npos);

  plot.log_y = true;
  CHECK_NOTHROW(svg::render(plot));
  CHECK_THROWS_AS(svg::render(svg::LinePlot{"empty", "x", "y", {}}), Error);
  CHECK_THROWS_AS(svg::render(svg::LinePlot{"bad", "x", "y", {{"s", {0, 1}, {1}}}}), Error);

  const PhaseGrid g = PhaseGrid::square(2.0, 11);
  svg::Heatmap map{"q", "I", "Q", husimi_q(make_state(state::Fock{0}, FockSpace(4, Mode::b_out)), g)};
  const auto h = svg::render(map);
  CHECK(h.find("<rect") != std::string::npos);
  map.diverging = true;
  CHECK_NOTHROW(svg::render(map));
}

TEST_CASE("settings resolve against defaults with type coercion") {
  const auto& info = ex::find("qswitch-decay");
  const auto cfg = ex::resolve(info, json{{"g_khz", "10,20"}, {"points", "1e2"}, {"kerr", "false"}, {"seed", 7}});
  CHECK(cfg["g_khz"] == json::array({10.0, 20.0}));
  CHECK(cfg["points"] == 100);
  CHECK(cfg["kerr"] == false);
  CHECK(cfg["duration_us"] == 40.0);
  CHECK(cfg["seed"] == 7);
  CHECK(ex::resolve(info, json{{"duration-us", 12}})["duration_us"] == 12.0);

  CHECK_THROWS_AS(ex::resolve(info, json{{"bogus", 1}}), Error);
  CHECK_THROWS_AS(ex::resolve(info, json{{"points", "2.5"}}), Error);
  CHECK_THROWS_AS(ex::resolve(info, json{{"kerr", "maybe"}}), Error);
  CHECK_THROWS_AS(ex::resolve(info, json{{"seed", -1}}), Error);
  CHECK_THROWS_AS(ex::find("nope"), Error);
}

TEST_CASE("config hash is stable and sensitive") {
  CHECK(ex::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(ex::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  const auto& info = ex::find("shaping");
  const auto a = ex::config_hash(ex::resolve(info, json::object()));
  CHECK(a.size() == 16);
  CHECK(a == ex::config_hash(ex::resolve(info, json::object())));
  CHECK(a != ex::config_hash(ex::resolve(info, json{{"seed", 2}})));
}

TEST_CASE("every experiment is registered with a figure and help text") {
  CHECK(ex::registry().size() == 9);
  for (const auto& i : ex::registry()) {
    CHECK_FALSE(i.figure.empty());
    CHECK_FALSE(i.summary.empty());
    for (const auto& p : i.params) CHECK_FALSE(p.help.empty());
  }
}

TEST_CASE("named states") {
  CHECK(ex::named_state("fock2", 6).mean_photons(Mode::a) == doctest::Approx(2.0));
  CHECK(ex::named_state("sup3", 6).mean_photons(Mode::a) == doctest::Approx(1.5));
  CHECK(ex::named_state("coh0.5", 12).mean_photons(Mode::a) == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(ex::named_state("cat2-", 16).density().trace().real() == doctest::Approx(1.0));
  CHECK_THROWS_AS(ex::named_state("squeezed", 6), Error);
  CHECK_THROWS_AS(ex::named_state("fockx", 6), Error);
}

TEST_CASE("runs write headed outputs and are byte-identical on rerun") {
  const auto d1 = scratch("stark1"), d2 = scratch("stark2");
  const auto r = ex::run("stark-calibration", json{{"seed", 3}}, d1.string());
  ex::run("stark-calibration", json{{"seed", 3}}, d2.string());
  REQUIRE(r.files.size() == 3);
  for (const auto& f : r.files) {
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  const auto csv = slurp(d1 / "stark.csv");
  CHECK(csv.rfind("# experiment=stark-calibration\n# seed=3\n# config=" + r.manifest["config_hash"].get<std::string>(), 0) == 0);
  CHECK(slurp(d1 / "stark.svg").find("<!-- experiment=stark-calibration seed=3") != std::string::npos);
  const auto m = json::parse(slurp(d1 / "manifest.json"));
  CHECK(m["experiment"] == "stark-calibration");
  CHECK(m["derived"]["xi_per_unit"].get<double>() == doctest::Approx(2.0).epsilon(0.02));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("detuning sweep width and decay fit") {
  const auto p = table_s1();
  const auto sw = ex::detuning_sweep(p, units::khz(54), [&] {
    std::vector<double> d;
    for (int i = -10; i <= 10; ++i) d.push_back(units::khz(100.0 * i));
    return d;
  }(), units::us(40));
  CHECK(sw.fwhm / p.kappa_out == doctest::Approx(1.0).epsilon(0.05));

  const auto run = ex::fock_decay(p, units::khz(25), 1, units::us(40), 81);
  const double kappa = 4.0 * units::khz(25) * units::khz(25) / p.kappa_out * (1 + p.kappa_loss_frac) + p.kappa_0;
  CHECK(run.rate == doctest::Approx(kappa).epsilon(0.02));
  CHECK(run.populations.size() == 2);
  CHECK(run.populations[0].back() + run.populations[1].back() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("coherent contrast through the POVM equals the evolved state") {
  const auto joint = apply_release(make_state(state::Cat{std::sqrt(2.0), 1}, FockSpace(14, Mode::a)), units::pi / 2);
  const double chi = table_s1().chi.aa;
  const double c0 = ex::coherent_contrast(joint, 1.0, 1.0, 0.0, chi);
  const double c3 = ex::coherent_contrast(joint, 1.0, 1.0, units::us(3), chi);
  CHECK(c3 < c0);
  CHECK(c3 == doctest::Approx(ex::coherent_contrast_evolved(joint, 1.0, 1.0, units::us(3), chi)).epsilon(1e-9));
}

TEST_CASE("unknown settings and bad values raise before any output") {
  const auto d = scratch("bad");
  CHECK_THROWS_AS(ex::run("shaping", json{{"target", "no-such-file.csv"}}, d.string()), Error);
  CHECK_THROWS_AS(ex::run("half-release", json{{"basis", "parity"}}, d.string()), Error);
  fs::remove_all(d);
}
