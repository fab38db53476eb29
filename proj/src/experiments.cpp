#include "catapult/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "catapult/dynamics.hpp"
#include "catapult/error.hpp"
#include "catapult/release.hpp"
#include "catapult/shaping.hpp"
#include "catapult/svg.hpp"
#include "catapult/units.hpp"

namespace catapult::experiments {

namespace fs = std::filesystem;
using units::khz;
using units::us;

std::string version() { return "0.1.0"; }

// ---- analyses -------------------------------------------------------------

DecayRun fock_decay(const SystemParams& p, double g, int m, double duration, int points, bool kerr) {
  if (m < 1) throw Error(ErrorCode::invalid_argument, "initial Fock number must be >= 1");
  if (!(duration > 0.0) || points < 5) throw Error(ErrorCode::invalid_argument, "decay needs duration > 0, >= 5 points");
  const Space s{FockSpace(m + 2, Mode::a), FockSpace(m >= 3 ? 4 : 3, Mode::b)};
  StarkShifts shift;
  if (g != 0.0) {
    const double amp = std::sqrt(std::abs(g) / std::abs(p.chi.ab));
    shift = stark_shifts(amp, amp, p.chi);
  }
  const auto sched = DriveSchedule::from_coupling([g](double) { return cplx(g); }, g == 0.0 ? 0.0 : resonant_delta(shift), p);
  HamiltonianOptions ho;
  ho.self_kerr = kerr;

  EvolveOptions eo;
  eo.store_states = false;
  for (int n = 0; n <= m; ++n) {
    CMatrix proj = CMatrix::Zero(static_cast<Eigen::Index>(s.dim()), static_cast<Eigen::Index>(s.dim()));
    for (std::size_t i = 0; i < s.dim(); ++i) {
      if (s.occupations(i)[0] == n) proj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
    eo.observables.emplace_back("P" + std::to_string(n), LinearOp(s, proj));
  }
  eo.observables.emplace_back("n_a", mode_operator(op::Number{}, s, Mode::a));
  const auto rho0 = tensor(make_state(state::Fock{m}, s.mode(0)), make_state(state::Fock{0}, s.mode(1)));
  DecayRun run;
  run.g = g;
  run.m = m;
  run.times = linspace(0.0, duration, points);
  const auto sol = evolve_lindblad(rho0, conversion_hamiltonian(p, sched, s, ho), conversion_collapses(p, sched, s),
                                   run.times, eo);
  for (int n = 0; n <= m; ++n) {
    std::vector<double> pn;
    for (const auto& v : sol.observable("P" + std::to_string(n))) pn.push_back(v.real());
    run.populations.push_back(std::move(pn));
  }
  for (const auto& v : sol.observable("n_a")) run.mean_photons.push_back(v.real());
  // skip the initial non-exponential transient while b fills (a few 1/kappa_out)
  const double t_fit = g == 0.0 ? 0.0 : 6.0 / p.kappa_out;
  std::vector<double> t_us, pm;
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    if (run.times[i] < t_fit) continue;
    t_us.push_back(units::to_us(run.times[i]));
    pm.push_back(run.populations[static_cast<std::size_t>(m)][i]);
  }
  if (t_us.size() < 5) throw Error(ErrorCode::invalid_argument, "decay window too short for a rate fit");
  const auto f = fit::exponential_fit(t_us, pm);
  run.rate = f["rate"] * 1e6;
  run.rate_error = f.error("rate") * 1e6;
  return run;
}

DetuningSweep detuning_sweep(const SystemParams& p, double g, const std::vector<double>& deltas, double duration,
                             int points) {
  if (deltas.size() < 6) throw Error(ErrorCode::invalid_argument, "detuning sweep needs at least 6 points");
  DetuningSweep out;
  const auto times = linspace(0.0, duration, points);
  std::vector<double> t_us;
  for (double t : times) t_us.push_back(units::to_us(t));
  for (double d : deltas) {
    std::vector<double> pop;
    for (double t : times) pop.push_back(std::norm(analytic_two_mode(1.0, g, p.kappa_out, d, t).a) * std::exp(-p.kappa_0 * t));
    out.delta.push_back(d);
    out.rate.push_back(fit::exponential_fit(t_us, pop)["rate"] * 1e6);
  }
  std::vector<double> x, y;
  const double peak = *std::max_element(out.rate.begin(), out.rate.end());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    x.push_back(deltas[i] / p.kappa_out);
    y.push_back(out.rate[i] / peak);
  }
  out.fit = fit::lorentzian_fit(x, y);
  out.fwhm = std::abs(out.fit["fwhm"]) * p.kappa_out;
  return out;
}

QuantumState named_state(const std::string& name, int cutoff) {
  const FockSpace f(cutoff, Mode::a);
  auto number = [&](std::size_t pos) {
    try {
      return std::stod(name.substr(pos));
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_argument, "cannot parse state '" + name + "'");
    }
  };
  if (name == "vacuum") return make_state(state::Fock{0}, f);
  if (name == "cat2+" || name == "cat2-") return make_state(state::Cat{std::sqrt(2.0), name.back() == '+' ? 1 : -1}, f);
  if (name.rfind("fock", 0) == 0) return make_state(state::Fock{static_cast<int>(number(4))}, f);
  if (name.rfind("sup", 0) == 0) return make_state(state::FockSuperposition{static_cast<int>(number(3))}, f);
  if (name.rfind("coh", 0) == 0) return make_state(state::Coherent{number(3)}, f);
  throw Error(ErrorCode::invalid_argument,
              "unknown state '" + name + "' (expected vacuum, fockN, supN, cat2+, cat2-, cohX)");
}

QuantumState fully_released(const QuantumState& rho_a, const SystemParams& p, double g, bool lossless) {
  const auto joint = lossless ? apply_release(rho_a, units::pi)
                              : apply_release(rho_a, ReleaseChannel{0.0, conversion_efficiency(p, g)});
  return partial_trace(joint, {Mode::b_out});
}

namespace {

double contrast_of(const QuantumState& joint, const Povm& povm, cplx alpha_b) {
  const int nb = joint.space().cutoff(Mode::b_out);
  // "-alpha" selects |-alpha> in the cavity and leaves |-alpha_b> behind
  const CVector minus = coherent_amplitudes(-alpha_b, nb), plus = coherent_amplitudes(alpha_b, nb);
  double c = 0.0;
  for (const auto& r : condition_all(joint, povm)) {
    const CVector& t = r.label == "-alpha" ? minus : plus;
    c += r.probability * (t.adjoint() * r.state.density() * t)(0).real() / t.squaredNorm();
  }
  return c;
}

}  // namespace

double coherent_contrast(const QuantumState& joint, cplx alpha_a, cplx alpha_b, double dwell, double chi_aa) {
  auto m = CavityMeasurement::ideal(Basis::coherent);
  m.alpha = alpha_a;
  m.dwell = dwell;
  m.chi_aa = chi_aa;
  return contrast_of(joint, cavity_povm(m, joint.space().cutoff(Mode::a)), alpha_b);
}

double coherent_contrast_evolved(const QuantumState& joint, cplx alpha_a, cplx alpha_b, double dwell, double chi_aa) {
  auto m = CavityMeasurement::ideal(Basis::coherent);
  m.alpha = alpha_a;
  return contrast_of(kerr_dwell(joint, dwell, chi_aa), cavity_povm(m, joint.space().cutoff(Mode::a)), alpha_b);
}

// ---- registry -------------------------------------------------------------

const std::vector<Info>& registry() {
  static const std::vector<Info> r = {
      {"qswitch-decay", "Fig. 2b", "Decay of |1> for several pump strengths; exponential fits give 1/kappa.",
       {{"g_khz", json::array({0.0, 25.0, 54.0}), "conversion strengths g/2pi"},
        {"duration_us", 40.0, "simulated time"},
        {"points", 201, "time samples"},
        {"kerr", true, "include self-Kerr"}}},
      {"fock-ladder", "Fig. 2c/d, S4", "Decay of |m>, m = 1..n_max: kappa_n and binomial populations.",
       {{"g_khz", 54.0, "conversion strength g/2pi"},
        {"n_max", 5, "largest initial Fock state"},
        {"duration_us", 30.0, "simulated time"},
        {"points", 151, "time samples"},
        {"kerr", true, "include self-Kerr"}}},
      {"detuning-sweep", "Fig. S3a", "Effective decay rate versus pump detuning with a Lorentzian fit.",
       {{"g_khz", 54.0, "conversion strength g/2pi"},
        {"span_khz", 2000.0, "detuning range +-span/2 (delta/2pi)"},
        {"steps", 41, "detuning points"},
        {"duration_us", 40.0, "fit window"}}},
      {"release-qfunctions", "Fig. 3c-e", "Full release of a cavity state, heterodyne sampling, Q histograms.",
       {{"state", "sup1", "vacuum, fockN, supN, cat2+, cat2-, cohX"},
        {"shots", 1000000, "heterodyne shots"},
        {"eta", 0.43, "detection efficiency"},
        {"g_khz", 164.0, "release coupling (sets the conversion loss)"},
        {"lossless", false, "ideal conversion"},
        {"cutoff", 16, "Fock cutoff"},
        {"half_width", 4.0, "histogram half width"},
        {"bins", 81, "histogram bins per axis"}}},
      {"half-release", "Fig. 4b/c", "50:50 release of |1>, conditioned histograms and the Bell-fidelity bound.",
       {{"basis", "both", "number, superpos01 or both (outcome histograms written)"},
        {"shots", 1000000, "cavity measurements per basis"},
        {"eta", 0.43, "detection efficiency"},
        {"fe", 0.99, "assignment fidelity, selected outcome"},
        {"fg", 0.96, "assignment fidelity, other outcome"},
        {"postselect", true, "discard the unselected transmon outcome"}}},
      {"fock2-half-release", "appendix, conditioned Q after half-release", "50:50 release of |2>, number-basis conditioning.",
       {{"shots", 1000000, "cavity measurements"},
        {"eta", 0.43, "detection efficiency"},
        {"fe", 0.99, "assignment fidelity, selected outcome"},
        {"fg", 0.96, "assignment fidelity, other outcome"}}},
      {"kerr-smearing", "Fig. S6", "Half-released cat, coherent-basis conditioning with and without the Kerr dwell.",
       {{"dwell_us", 3.0, "cavity dwell before the measurement"},
        {"alpha", 1.0, "cavity displacement of the measurement"},
        {"shots", 200000, "heterodyne shots per outcome"},
        {"eta", 0.43, "detection efficiency"},
        {"cutoff", 16, "Fock cutoff"}}},
      {"shaping", "Fig. S7", "Coupling and pump envelopes for a target wavepacket, with forward checks.",
       {{"target", "gaussian", "gaussian, exponential, flat-top or a CSV path (time_us,re,im)"},
        {"sigma_us", 0.5, "gaussian width"},
        {"center_us", 2.0, "gaussian centre"},
        {"rate_khz", 100.0, "exponential decay rate kappa/2pi of |b|^2"},
        {"width_us", 1.5, "flat-top plateau"},
        {"rise_us", 0.5, "exponential/flat-top rise"},
        {"photons", 0.9, "emitted photons"},
        {"t_end_us", 4.0, "grid length"},
        {"a0", 1.0, "initial cavity amplitude"},
        {"cap_khz", 500.0, "coupling cap g/2pi"}}},
      {"stark-calibration", "Fig. S2", "Synthetic Stark sweep and the linear fit giving |xi| per DAC unit.",
       {{"amplitudes", json::array({0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}), "pump DAC amplitudes"},
        {"xi_per_unit", 2.0, "true |xi| per DAC unit"},
        {"noise_khz", 50.0, "shift noise (1 sd)"}}},
  };
  return r;
}

const Info& find(std::string_view name) {
  for (const auto& i : registry()) {
    if (i.name == name) return i;
  }
  std::string known;
  for (const auto& i : registry()) known += (known.empty() ? "" : ", ") + i.name;
  throw Error(ErrorCode::invalid_argument, "unknown experiment '" + std::string(name) + "' (known: " + known + ")");
}

namespace {

json common_defaults() { return {{"seed", 1}, {"params_file", ""}}; }

json coerce(const std::string& key, const json& def, const json& v) {
  auto bad = [&]() {
    return Error(ErrorCode::invalid_argument, "setting '" + key + "' expects " + std::string(def.type_name()) +
                                                  ", got " + v.dump());
  };
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double x;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      throw bad();
    }
    if (used != s.size()) throw bad();
    return x;
  };
  if (def.is_boolean()) {
    if (v.is_boolean()) return v;
    if (v.is_number_integer()) return json(v.get<long>() != 0);
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "true" || s == "1" || s == "yes") return json(true);
      if (s == "false" || s == "0" || s == "no") return json(false);
    }
    throw bad();
  }
  if (def.is_number_integer()) {
    const double x = v.is_number() ? v.get<double>() : v.is_string() ? number(v.get<std::string>()) : throw bad();
    if (x != std::floor(x)) throw bad();
    return json(static_cast<long long>(x));
  }
  if (def.is_number()) {
    if (v.is_number()) return json(v.get<double>());
    if (v.is_string()) return json(number(v.get<std::string>()));
    throw bad();
  }
  if (def.is_array()) {
    json out = json::array();
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(coerce(key, def.empty() ? json(0.0) : def.front(), e));
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_string()) {
      std::stringstream ss(v.get<std::string>());
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(number(item));
    } else {
      throw bad();
    }
    if (out.empty()) throw bad();
    return out;
  }
  if (def.is_string()) {
    if (v.is_string()) return v;
    throw bad();
  }
  throw bad();
}

}  // namespace

json resolve(const Info& info, const json& settings) {
  json out = common_defaults();
  for (const auto& p : info.params) out[p.key] = p.default_value;
  if (!settings.is_null() && !settings.is_object()) throw Error(ErrorCode::invalid_argument, "settings must be an object");
  if (settings.is_object()) {
    for (const auto& [key, value] : settings.items()) {
      std::string k = key;
      std::replace(k.begin(), k.end(), '-', '_');
      if (!out.contains(k)) {
        throw Error(ErrorCode::invalid_argument, "experiment '" + info.name + "' has no setting '" + key + "'");
      }
      out[k] = coerce(k, out[k], value);
    }
  }
  if (out["seed"].get<long long>() < 0) throw Error(ErrorCode::invalid_argument, "seed must be >= 0");
  return out;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const json& resolved) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(resolved.dump());
  return os.str();
}

json error_record(const std::string& experiment, const std::exception& e) {
  json r{{"experiment", experiment}, {"message", e.what()}};
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    r["code"] = std::string(to_string(err->code()));
  } else {
    r["code"] = "internal";
  }
  return r;
}

// ---- runners --------------------------------------------------------------

namespace {

class Output {
 public:
  Output(fs::path dir, std::vector<std::string> header) : dir_(std::move(dir)), header_(std::move(header)) {
    fs::create_directories(dir_);
  }

  const std::vector<std::string>& header() const { return header_; }

  /// Opens a file and writes the comment header.
  std::ofstream csv(const std::string& name) {
    auto os = open(name);
    for (const auto& h : header_) os << "# " << h << '\n';
    return os;
  }
  /// Opens a file for a writer that emits the header itself.
  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream os(dir_ / name);
    if (!os) throw Error(ErrorCode::io, "cannot write " + (dir_ / name).string());
    os << std::setprecision(10);
    return os;
  }
  void svg(const std::string& name, std::string doc) {
    std::string comment = "<!--";
    for (const auto& h : header_) comment += ' ' + h;
    comment += " -->\n";
    doc.insert(doc.find('\n') + 1, comment);
    auto os = open(name);
    os << doc;
  }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> header_;
  std::vector<std::string> files_;
};

struct Context {
  const json& cfg;
  SystemParams params;
  std::uint64_t seed;
  Output& out;
  json derived = json::object();

  double num(const char* k) const { return cfg.at(k).get<double>(); }
  long long integer(const char* k) const { return cfg.at(k).get<long long>(); }
  bool flag(const char* k) const { return cfg.at(k).get<bool>(); }
  std::string str(const char* k) const { return cfg.at(k).get<std::string>(); }
  std::vector<double> list(const char* k) const { return cfg.at(k).get<std::vector<double>>(); }
};

std::vector<double> to_us(const std::vector<double>& t) {
  std::vector<double> o;
  for (double x : t) o.push_back(units::to_us(x));
  return o;
}

std::string khz_tag(double g) {
  std::ostringstream os;
  os << units::to_khz(g);
  return os.str();
}

void run_qswitch(Context& c) {
  const auto gs = c.list("g_khz");
  const double duration = us(c.num("duration_us"));
  std::vector<DecayRun> runs;
  for (double g : gs) runs.push_back(fock_decay(c.params, khz(g), 1, duration, static_cast<int>(c.integer("points")), c.flag("kerr")));

  auto os = c.out.csv("decay.csv");
  os << "time_us";
  for (const auto& r : runs) os << ",p1_g" << khz_tag(r.g) << "khz";
  os << '\n';
  for (std::size_t i = 0; i < runs.front().times.size(); ++i) {
    os << units::to_us(runs.front().times[i]);
    for (const auto& r : runs) os << ',' << r.populations[1][i];
    os << '\n';
  }
  auto fits = c.out.csv("decay_fits.csv");
  fits << "g_khz,inverse_kappa_us,inverse_kappa_error_us,predicted_inverse_kappa_us\n";
  json d = json::array();
  svg::LinePlot plot{"Q-switch decay of |1>", "time (us)", "P(1)", {}, true};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k];
    const double predicted = 1.0 / (4.0 * r.g * r.g / c.params.kappa_out * (1.0 + c.params.kappa_loss_frac) + c.params.kappa_0);
    const double inv = units::to_us(1.0 / r.rate), inv_err = units::to_us(r.rate_error / (r.rate * r.rate));
    fits << gs[k] << ',' << inv << ',' << inv_err << ',' << units::to_us(predicted) << '\n';
    d.push_back({{"g_khz", gs[k]}, {"inverse_kappa_us", inv}, {"inverse_kappa_error_us", inv_err},
                 {"predicted_inverse_kappa_us", units::to_us(predicted)}});
    plot.series.push_back({"g/2pi = " + khz_tag(r.g) + " kHz", to_us(r.times), r.populations[1]});
  }
  c.derived["fits"] = d;
  c.out.svg("decay.svg", svg::render(plot));
}

void run_ladder(Context& c) {
  const double g = khz(c.num("g_khz"));
  const int n_max = static_cast<int>(c.integer("n_max"));
  if (n_max < 1) throw Error(ErrorCode::invalid_argument, "n_max must be >= 1");
  std::vector<DecayRun> runs;
  for (int m = 1; m <= n_max; ++m) {
    runs.push_back(fock_decay(c.params, g, m, us(c.num("duration_us")), static_cast<int>(c.integer("points")), c.flag("kerr")));
  }
  const double k1 = runs.front().rate;
  auto rates = c.out.csv("ladder_rates.csv");
  rates << "n,kappa_n_per_us,kappa_n_error_per_us,n_kappa_1_per_us,kerr_corrected_per_us\n";
  json d = json::array();
  svg::LinePlot rp{"Fock ladder rates", "n", "kappa_n (1/us)", {}};
  svg::Series fitted{"fitted", {}, {}, "", true}, linear{"n kappa_1", {}, {}, "", false, true};
  for (const auto& r : runs) {
    const double kc = kerr_corrected_rate(r.m, g, c.params.kappa_out, c.params.chi.aa) + r.m * c.params.kappa_0;
    rates << r.m << ',' << r.rate * 1e-6 << ',' << r.rate_error * 1e-6 << ',' << r.m * k1 * 1e-6 << ',' << kc * 1e-6 << '\n';
    d.push_back({{"n", r.m}, {"kappa_n_per_us", r.rate * 1e-6}, {"deviation_from_n_kappa_1", r.rate / (r.m * k1) - 1.0}});
    fitted.x.push_back(r.m);
    fitted.y.push_back(r.rate * 1e-6);
    linear.x.push_back(r.m);
    linear.y.push_back(r.m * k1 * 1e-6);
  }
  rp.series = {fitted, linear};
  c.out.svg("ladder_rates.svg", svg::render(rp));

  // populations of the top state against the binomial model with the fitted kappa_1
  // linear fit kappa_loss + n kappa with the loss rate held at kappa_0
  double num = 0.0, den = 0.0;
  for (const auto& r : runs) {
    num += r.m * (r.rate - c.params.kappa_0);
    den += r.m * r.m;
  }
  const double k_lin = num / den;
  double worst_lin = 0.0;
  for (const auto& r : runs) worst_lin = std::max(worst_lin, std::abs(r.rate / (c.params.kappa_0 + r.m * k_lin) - 1.0));
  c.derived["linear_fit_kappa_per_us"] = k_lin * 1e-6;
  c.derived["max_deviation_from_linear_fit"] = worst_lin;

  const auto& top = runs.back();
  const double k_model = 4.0 * g * g / c.params.kappa_out + c.params.kappa_0;
  double worst_model = 0.0;
  auto pops = c.out.csv("ladder_populations.csv");
  pops << "time_us";
  for (int n = 0; n <= top.m; ++n) pops << ",p" << n << ",binomial_p" << n;
  pops << '\n';
  double worst = 0.0;
  for (std::size_t i = 0; i < top.times.size(); ++i) {
    pops << units::to_us(top.times[i]);
    for (int n = 0; n <= top.m; ++n) {
      const double b = fock_decay_populations(top.m, n, k1, top.times[i]);
      worst = std::max(worst, std::abs(b - top.populations[static_cast<std::size_t>(n)][i]));
      worst_model = std::max(worst_model, std::abs(fock_decay_populations(top.m, n, k_model, top.times[i]) -
                                                   top.populations[static_cast<std::size_t>(n)][i]));
      pops << ',' << top.populations[static_cast<std::size_t>(n)][i] << ',' << b;
    }
    pops << '\n';
  }
  svg::LinePlot pp{"Populations from |" + std::to_string(top.m) + ">", "time (us)", "P(n)", {}};
  for (int n = 0; n <= top.m; ++n) pp.series.push_back({"n = " + std::to_string(n), to_us(top.times), top.populations[static_cast<std::size_t>(n)]});
  c.out.svg("ladder_populations.svg", svg::render(pp));
  c.derived["rates"] = d;
  c.derived["binomial_max_abs_deviation"] = worst;
  c.derived["binomial_max_abs_deviation_no_free_parameters"] = worst_model;
}

void run_detuning(Context& c) {
  const int steps = static_cast<int>(c.integer("steps"));
  const double span = khz(c.num("span_khz"));
  const auto deltas = linspace(-span / 2, span / 2, steps);
  const auto sw = detuning_sweep(c.params, khz(c.num("g_khz")), deltas, us(c.num("duration_us")));
  auto os = c.out.csv("detuning.csv");
  os << "delta_khz,kappa_per_us,lorentzian_per_us\n";
  const double peak = *std::max_element(sw.rate.begin(), sw.rate.end());
  svg::LinePlot plot{"Decay rate versus pump detuning", "delta/2pi (kHz)", "kappa (1/us)", {}};
  svg::Series pts{"simulated", {}, {}, "", true}, lor{"Lorentzian fit", {}, {}, "", false};
  for (std::size_t i = 0; i < sw.delta.size(); ++i) {
    const double x = sw.delta[i] / c.params.kappa_out;
    const double model = peak * (sw.fit["amplitude"] / (1 + std::pow(2 * (x - sw.fit["center"]) / sw.fit["fwhm"], 2)) + sw.fit["offset"]);
    os << units::to_khz(sw.delta[i]) << ',' << sw.rate[i] * 1e-6 << ',' << model * 1e-6 << '\n';
    pts.x.push_back(units::to_khz(sw.delta[i]));
    pts.y.push_back(sw.rate[i] * 1e-6);
    lor.x.push_back(units::to_khz(sw.delta[i]));
    lor.y.push_back(model * 1e-6);
  }
  plot.series = {pts, lor};
  c.out.svg("detuning.svg", svg::render(plot));
  c.derived["fwhm_khz"] = units::to_khz(sw.fwhm);
  c.derived["kappa_out_khz"] = units::to_khz(c.params.kappa_out);
  c.derived["fwhm_over_kappa_out"] = sw.fwhm / c.params.kappa_out;
}

void write_marginal(std::ostream& os, const Marginal& m, const std::vector<double>& exact, const char* axis) {
  os << axis << ",density,counts,exact\n";
  for (std::size_t i = 0; i < m.centers.size(); ++i) {
    os << m.centers[i] << ',' << m.density[i] << ',' << (m.counts.empty() ? 0.0 : m.counts[i]) << ',' << exact[i] << '\n';
  }
}

void run_release_q(Context& c) {
  const std::string name = c.str("state");
  const int cutoff = static_cast<int>(c.integer("cutoff"));
  const double g = khz(c.num("g_khz"));
  DetectorModel det;
  det.eta = c.num("eta");
  const auto shots_n = static_cast<std::size_t>(c.integer("shots"));
  const auto grid = PhaseGrid::square(c.num("half_width"), static_cast<int>(c.integer("bins")));

  auto measure = [&](const std::string& state_name, std::uint64_t seed) {
    const auto it = fully_released(named_state(state_name, cutoff), c.params, g, c.flag("lossless"));
    const auto seen = loss_channel(it, det.eta);
    const auto shots = sample_heterodyne(seen, det, shots_n, seed);
    return std::make_tuple(it, seen, shots, histogram_q(shots, grid));
  };
  const auto [itinerant, seen, shots, hist] = measure(name, c.seed);

  {
    auto os = c.out.open("qfunction.csv");
    write_field_csv(os, hist.as_field(), c.out.header());
  }
  const auto ideal = husimi_q(seen, grid);
  {
    auto os = c.out.open("qfunction_ideal.csv");
    write_field_csv(os, ideal, c.out.header());
  }
  c.out.svg("qfunction.svg", svg::render(svg::Heatmap{"Q of released " + name + " (sampled)", "I", "Q", hist.as_field()}));

  const auto radial = radial_marginal(hist);
  {
    auto os = c.out.csv("phase_marginal.csv");
    os << "phi,density\n";
    for (std::size_t i = 0; i < radial.centers.size(); ++i) os << radial.centers[i] << ',' << radial.density[i] << '\n';
  }
  json harmonics = json::array();
  for (int n = 1; n <= 4; ++n) {
    const auto h = angular_harmonic(shots, n);
    const cplx ex = exact_angular_harmonic(seen, n);
    harmonics.push_back({{"n", n}, {"measured_abs", std::abs(h.value)}, {"exact_abs", std::abs(ex)},
                         {"se_re", h.se_re}, {"se_im", h.se_im},
                         {"z", std::hypot((h.value.real() - ex.real()) / h.se_re, (h.value.imag() - ex.imag()) / h.se_im)}});
  }
  c.derived["harmonics"] = harmonics;
  c.derived["itinerant_mean_photons"] = itinerant.mean_photons(Mode::b_out);
  c.derived["fidelity_to_ideal"] = fidelity(itinerant, partial_trace(apply_release(named_state(name, cutoff), units::pi), {Mode::b_out}));

  const auto mi = axis_marginal(hist, Axis::I);
  const auto exact_i = exact_axis_marginal(seen, Axis::I, mi.centers, mi.bin_width).density;
  {
    auto os = c.out.csv("marginal_i.csv");
    write_marginal(os, mi, exact_i, "i");
  }
  if (name == "cat2+" || name == "cat2-") {
    // even minus odd marginal difference
    const std::string other = name == "cat2+" ? "cat2-" : "cat2+";
    const auto [it2, seen2, shots2, hist2] = measure(other, c.seed + 1);
    const auto m2 = axis_marginal(hist2, Axis::I);
    const auto exact2 = exact_axis_marginal(seen2, Axis::I, m2.centers, m2.bin_width).density;
    const bool even_first = name == "cat2+";
    auto os = c.out.csv("marginal_difference.csv");
    os << "i,difference,sigma,exact\n";
    svg::LinePlot plot{"Even minus odd cat marginal", "I", "Pr_even(I) - Pr_odd(I)", {}};
    svg::Series meas{"sampled", {}, {}, "", true}, ex{"ideal (lossy)", {}, {}, "", false};
    double peak_z = 0.0, peak_abs = -1.0;
    for (std::size_t i = 0; i < mi.centers.size(); ++i) {
      const double scale = 1.0 / (shots_n * mi.bin_width);
      const double d = (even_first ? 1 : -1) * (mi.density[i] - m2.density[i]);
      const double sigma = std::sqrt(mi.counts[i] + m2.counts[i]) * scale;
      const double e = (even_first ? 1 : -1) * (exact_i[i] - exact2[i]);
      os << mi.centers[i] << ',' << d << ',' << sigma << ',' << e << '\n';
      meas.x.push_back(mi.centers[i]);
      meas.y.push_back(d);
      ex.x.push_back(mi.centers[i]);
      ex.y.push_back(e);
      if (std::abs(e) > peak_abs) {
        peak_abs = std::abs(e);
        peak_z = sigma > 0.0 ? (d - e) / sigma : 0.0;
      }
    }
    plot.series = {meas, ex};
    c.out.svg("marginal_difference.svg", svg::render(plot));
    c.derived["difference_peak_z"] = peak_z;
  }
}

void write_outcome(Context& c, const std::string& stem, const QHistogram& hist, const Marginal& m,
                   const std::vector<double>& exact_a, const std::vector<double>& exact_b, const std::string& title) {
  {
    auto os = c.out.open(stem + "_q.csv");
    write_field_csv(os, hist.as_field(), c.out.header());
  }
  c.out.svg(stem + "_q.svg", svg::render(svg::Heatmap{title, "I", "Q", hist.as_field()}));
  if (!exact_a.empty()) {
    auto os = c.out.csv(stem + "_marginal.csv");
    os << "i,density,counts,correlated,anticorrelated\n";
    for (std::size_t i = 0; i < m.centers.size(); ++i) {
      os << m.centers[i] << ',' << m.density[i] << ',' << m.counts[i] << ',' << exact_a[i] << ',' << exact_b[i] << '\n';
    }
    svg::LinePlot plot{title + ": Pr(I)", "I", "Pr(I)", {}};
    plot.series.push_back({"sampled", m.centers, m.density, "", true});
    plot.series.push_back({"correlated", m.centers, exact_a});
    plot.series.push_back({"anti-correlated", m.centers, exact_b, "", false, true});
    c.out.svg(stem + "_marginal.svg", svg::render(plot));
  }
}

void run_half_release(Context& c) {
  const std::string basis = c.str("basis");
  if (basis != "both" && basis != "number" && basis != "superpos01") {
    throw Error(ErrorCode::invalid_argument, "basis must be number, superpos01 or both");
  }
  BellPipelineOptions opt;
  opt.fe = c.num("fe");
  opt.fg = c.num("fg");
  opt.postselect = c.flag("postselect");
  opt.detector.eta = c.num("eta");
  opt.shots = static_cast<std::size_t>(c.integer("shots"));
  opt.seed = c.seed;
  const auto joint = apply_release(make_state(state::Fock{1}, FockSpace(4, Mode::a)), units::pi / 2);
  const auto res = simulate_bell_experiment(joint, opt);

  auto table = c.out.csv("outcomes.csv");
  table << "basis,outcome,probability,shots,mixing_fraction,mixing_error,reduced_chi2\n";
  json outcomes = json::array();
  for (const auto& o : res.outcomes) {
    table << o.basis << ',' << o.label << ',' << o.probability << ',' << o.shots << ',' << o.fit.alpha << ','
          << o.fit.error << ',' << o.fit.reduced_chi2() << '\n';
    outcomes.push_back({{"basis", o.basis}, {"outcome", o.label}, {"probability", o.probability}, {"shots", o.shots},
                        {"mixing_fraction", o.fit.alpha}, {"mixing_error", o.fit.error}});
    if (basis == "both" || basis == o.basis) {
      const std::string stem = o.basis + "_" + (o.label == "+" ? std::string("plus") : o.label == "-" ? std::string("minus") : o.label);
      write_outcome(c, stem, o.histogram, o.marginal, o.ideal_correlated, o.ideal_anticorrelated,
                    "b_out | cavity " + o.label + " (" + o.basis + ")");
    }
  }
  c.derived["outcomes"] = outcomes;
  c.derived["bell_fidelity_bound"] = res.bound.value;
  c.derived["bell_fidelity_error"] = res.bound.error;
  c.derived["significance_sigma"] = res.bound.significance();
  c.derived["ideal_bound"] = exact_bell_bound(joint).value;
}

void run_fock2(Context& c) {
  const auto joint = apply_release(make_state(state::Fock{2}, FockSpace(5, Mode::a)), units::pi / 2);
  CavityMeasurement m;
  m.basis = Basis::number;
  m.levels = {0, 1, 2};
  m.fe = c.num("fe");
  m.fg = c.num("fg");
  DetectorModel det;
  det.eta = c.num("eta");
  const auto povm = cavity_povm(m, 5);
  const auto cond = condition_all(joint, povm);
  const auto total = static_cast<std::size_t>(c.integer("shots"));
  auto table = c.out.csv("outcomes.csv");
  table << "outcome,probability,itinerant_mean_photons,p0,p1,p2\n";
  json d = json::array();
  std::uint64_t k = 0;
  for (const auto& r : cond) {
    const auto seen = loss_channel(r.state, det.eta);
    const auto n = static_cast<std::size_t>(std::llround(r.probability * static_cast<double>(total)));
    const auto& rho = r.state.density();
    table << r.label << ',' << r.probability << ',' << r.state.mean_photons(Mode::b_out) << ',' << rho(0, 0).real()
          << ',' << rho(1, 1).real() << ',' << rho(2, 2).real() << '\n';
    d.push_back({{"outcome", r.label}, {"probability", r.probability}, {"itinerant_mean_photons", r.state.mean_photons(Mode::b_out)}});
    if (n > 0) {
      const auto hist = histogram_q(sample_heterodyne(seen, det, n, c.seed * 7919 + k), PhaseGrid{});
      write_outcome(c, "outcome_" + r.label, hist, {}, {}, {}, "b_out | cavity " + r.label);
    }
    auto ideal = husimi_q(seen, PhaseGrid{});
    auto os = c.out.open("outcome_" + r.label + "_q_ideal.csv");
    write_field_csv(os, ideal, c.out.header());
    ++k;
  }
  c.derived["outcomes"] = d;
}

void run_kerr(Context& c) {
  const int cutoff = static_cast<int>(c.integer("cutoff"));
  const double dwell = us(c.num("dwell_us"));
  const double alpha = c.num("alpha");
  const auto joint = apply_release(make_state(state::Cat{std::sqrt(2.0), 1}, FockSpace(cutoff, Mode::a)), units::pi / 2);
  const double chi = c.params.chi.aa;
  const double without = coherent_contrast(joint, alpha, alpha, 0.0, chi);
  const double with = coherent_contrast(joint, alpha, alpha, dwell, chi);
  const double predicted = coherent_contrast_evolved(joint, alpha, alpha, dwell, chi);
  c.derived["contrast_without_dwell"] = without;
  c.derived["contrast_with_dwell"] = with;
  c.derived["contrast_predicted_by_kerr_dwell"] = predicted;
  const auto ov = coherent_overlap(alpha);
  c.derived["overlap_probability"] = ov.probability;
  c.derived["overlap_amplitude"] = ov.amplitude;

  DetectorModel det;
  det.eta = c.num("eta");
  auto table = c.out.csv("contrast.csv");
  table << "dwell_us,outcome,probability,contrast\n";
  std::uint64_t k = 0;
  for (double t : {0.0, dwell}) {
    auto m = CavityMeasurement::ideal(Basis::coherent);
    m.alpha = alpha;
    m.dwell = t;
    m.chi_aa = chi;
    for (const auto& r : condition_all(joint, cavity_povm(m, cutoff))) {
      const CVector target = coherent_amplitudes(r.label == "-alpha" ? -alpha : alpha, cutoff);
      table << units::to_us(t) << ',' << r.label << ',' << r.probability << ','
            << (target.adjoint() * r.state.density() * target)(0).real() << '\n';
      const auto hist = histogram_q(sample_heterodyne(loss_channel(r.state, det.eta), det,
                                                      static_cast<std::size_t>(c.integer("shots")), c.seed * 104729 + k++),
                                    PhaseGrid{});
      write_outcome(c, std::string(t == 0.0 ? "nodwell_" : "dwell_") + (r.label == "-alpha" ? "minus" : "plus"), hist, {}, {},
                    {}, "b_out | cavity " + r.label + (t == 0.0 ? "" : " after dwell"));
    }
  }
}

void run_shaping(Context& c) {
  const std::string kind = c.str("target");
  const double dt = 1.0 / (25.0 * c.params.kappa_out);
  const double t_end = us(c.num("t_end_us"));
  TargetWaveform target;
  if (kind == "gaussian") {
    target = gaussian_target(us(c.num("sigma_us")), us(c.num("center_us")), c.num("photons"), t_end, dt);
  } else if (kind == "exponential") {
    target = exponential_target(khz(c.num("rate_khz")), us(c.num("rise_us")), c.num("photons"), t_end, dt);
  } else if (kind == "flat-top") {
    target = flat_top_target(us(c.num("width_us")), us(c.num("rise_us")), c.num("photons"), t_end, dt);
  } else {
    std::ifstream is(kind);
    if (!is) throw Error(ErrorCode::io, "cannot read target '" + kind + "'");
    target = read_target_csv(is);
  }
  ShapingOptions so;
  so.max_coupling = khz(c.num("cap_khz"));
  auto sol = invert_for_coupling(target, c.params.kappa_out, c.num("a0"), so);
  const cplx a0 = c.num("a0");
  const auto ideal = forward_verify(sol, a0, {}, c.params);
  ForwardOptions stark;
  stark.stark = true;
  sol.pumps = uncompensated_pumps(sol, c.params);
  const auto raw = forward_verify(sol, a0, stark, c.params);
  sol.pumps = compensate_stark(sol, c.params, so);
  const auto comp = forward_verify(sol, a0, stark, c.params);
  ForwardOptions lossy;
  lossy.kappa_0 = lossy.kappa_loss = true;
  const auto real = forward_verify(sol, a0, lossy, c.params);

  {
    auto os = c.out.open("shaping.csv");
    write_shaping_csv(os, sol, c.out.header());
  }
  auto os = c.out.csv("forward.csv");
  os << "time_us,target_abs,ideal_abs,stark_compensated_abs,stark_uncompensated_abs,lossy_abs\n";
  svg::LinePlot plot{"Shaped emission", "time (us)", "|<b_out>| (sqrt(photons/us))", {}};
  svg::Series st{"target", {}, {}, "", false, true}, si{"forward (ideal)", {}, {}}, sc{"Stark compensated", {}, {}, "", true},
      su{"Stark uncompensated", {}, {}};
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    const double t = units::to_us(sol.times[i]);
    os << t << ',' << std::abs(sol.target[i]) * 1e-3 << ',' << std::abs(ideal.b_out[i]) * 1e-3 << ','
       << std::abs(comp.b_out[i]) * 1e-3 << ',' << std::abs(raw.b_out[i]) * 1e-3 << ',' << std::abs(real.b_out[i]) * 1e-3 << '\n';
    st.x.push_back(t);
    st.y.push_back(std::abs(sol.target[i]) * 1e-3);
    si.x.push_back(t);
    si.y.push_back(std::abs(ideal.b_out[i]) * 1e-3);
    if (i % 10 == 0) {
      sc.x.push_back(t);
      sc.y.push_back(std::abs(comp.b_out[i]) * 1e-3);
    }
    su.x.push_back(t);
    su.y.push_back(std::abs(raw.b_out[i]) * 1e-3);
  }
  plot.series = {st, si, sc, su};
  c.out.svg("shaping.svg", svg::render(plot));
  svg::LinePlot gp{"Required coupling", "time (us)", "|g|/2pi (kHz)", {}};
  svg::Series gs{"|g|", {}, {}};
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    gs.x.push_back(units::to_us(sol.times[i]));
    gs.y.push_back(units::to_khz(std::abs(sol.g[i])));
  }
  gp.series = {gs};
  c.out.svg("coupling.svg", svg::render(gp));

  c.derived["peak_g_khz"] = units::to_khz(sol.peak_g);
  c.derived["bandwidth_margin"] = sol.bandwidth_margin;
  c.derived["round_trip_l2_error"] = ideal.l2_error;
  c.derived["stark_compensated_error"] = envelope_distance(comp.b_out, ideal.b_out);
  c.derived["stark_uncompensated_error"] = envelope_distance(raw.b_out, ideal.b_out);
  c.derived["lossy_photon_deficit"] = real.photon_deficit;
  c.derived["residual_cavity"] = sol.residual_cavity;
  c.derived["truncated_photons"] = sol.truncated_photons;
}

void run_stark(Context& c) {
  const auto amps = c.list("amplitudes");
  const auto cal = simulate_stark_calibration(c.params, amps, khz(c.num("noise_khz")), c.num("xi_per_unit"), c.seed);
  auto os = c.out.csv("stark.csv");
  os << "amplitude,amplitude_squared,shift_mhz,fit_mhz\n";
  svg::LinePlot plot{"Transmon Stark shift", "amplitude^2 (DAC units^2)", "shift/2pi (MHz)", {}};
  svg::Series pts{"simulated", {}, {}, "", true}, line{"linear fit", {}, {}};
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double u2 = amps[i] * amps[i];
    const double fitv = cal.slope * u2 + cal.intercept;
    os << amps[i] << ',' << u2 << ',' << units::to_mhz(cal.shifts[i]) << ',' << units::to_mhz(fitv) << '\n';
    pts.x.push_back(u2);
    pts.y.push_back(units::to_mhz(cal.shifts[i]));
    line.x.push_back(u2);
    line.y.push_back(units::to_mhz(fitv));
  }
  plot.series = {pts, line};
  c.out.svg("stark.svg", svg::render(plot));
  c.derived["slope_mhz_per_unit2"] = units::to_mhz(cal.slope);
  c.derived["slope_error_mhz_per_unit2"] = units::to_mhz(cal.slope_error);
  c.derived["xi_per_unit"] = cal.xi_per_unit;
  c.derived["xi_per_unit_error"] = cal.xi_per_unit_error;
}

}  // namespace

Result run(const std::string& name, const json& settings, const std::string& out_dir) {
  const Info& info = find(name);
  const json cfg = resolve(info, settings);
  const std::string hash = config_hash(cfg);
  const auto seed = static_cast<std::uint64_t>(cfg["seed"].get<long long>());
  const std::string pfile = cfg["params_file"].get<std::string>();
  const SystemParams params = pfile.empty() ? table_s1() : load_params(pfile);

  Output out(out_dir, {"experiment=" + name, "seed=" + std::to_string(seed), "config=" + hash});
  Context c{cfg, params, seed, out};
  if (name == "qswitch-decay") run_qswitch(c);
  else if (name == "fock-ladder") run_ladder(c);
  else if (name == "detuning-sweep") run_detuning(c);
  else if (name == "release-qfunctions") run_release_q(c);
  else if (name == "half-release") run_half_release(c);
  else if (name == "fock2-half-release") run_fock2(c);
  else if (name == "kerr-smearing") run_kerr(c);
  else if (name == "shaping") run_shaping(c);
  else if (name == "stark-calibration") run_stark(c);

  const double g_ref = cfg.contains("g_khz") && cfg["g_khz"].is_number() ? khz(cfg["g_khz"].get<double>()) : 0.0;
  json derived = c.derived;
  if (g_ref > 0.0) {
    derived["kappa_per_us"] = 4.0 * g_ref * g_ref / params.kappa_out * 1e-6;
    derived["theta_half_release_duration_us"] = units::to_us(release_duration(4.0 * g_ref * g_ref / params.kappa_out, units::pi / 2));
  }
  Result r;
  r.files = out.files();
  r.files.push_back("manifest.json");
  r.manifest = {{"experiment", name},
                {"figure", info.figure},
                {"version", version()},
                {"config", cfg},
                {"config_hash", hash},
                {"seed", seed},
                {"params", params_to_json(params)},
                {"derived", derived},
                {"files", r.files}};
  std::ofstream m(fs::path(out_dir) / "manifest.json");
  if (!m) throw Error(ErrorCode::io, "cannot write manifest in " + out_dir);
  m << r.manifest.dump(2) << '\n';
  return r;
}

}  // namespace catapult::experiments
