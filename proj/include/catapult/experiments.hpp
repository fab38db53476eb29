#pragma once

// Figure-level experiments: the analyses behind each panel, and a registry
// that runs them from a JSON settings object into CSV/SVG/manifest files.
//
// Settings use human units: frequencies in kHz (omega/2pi), times in us.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "catapult/conditioning.hpp"
#include "catapult/detection.hpp"
#include "catapult/fit.hpp"
#include "catapult/hilbert.hpp"
#include "catapult/model.hpp"

namespace catapult::experiments {

using nlohmann::json;

// ---- analyses -------------------------------------------------------------

/// Lindblad decay of |m> on a (x) b with the pumps on resonance (Stark
/// shifts compensated through the pump detuning).
struct DecayRun {
  double g = 0.0;
  int m = 1;
  std::vector<double> times;
  std::vector<std::vector<double>> populations;  // [n][t], n = 0..m
  std::vector<double> mean_photons;
  double rate = 0.0;  // exponential fit to P(m)
  double rate_error = 0.0;
};

DecayRun fock_decay(const SystemParams& p, double g, int m, double duration, int points, bool kerr = true);

/// Effective decay rate of |1> versus pump detuning (exact two-mode model)
/// and a Lorentzian fit of kappa(delta).
struct DetuningSweep {
  std::vector<double> delta;  // rad/s
  std::vector<double> rate;
  fit::FitResult fit;
  double fwhm = 0.0;  // rad/s
};

DetuningSweep detuning_sweep(const SystemParams& p, double g, const std::vector<double>& deltas, double duration,
                             int points = 400);

/// fockN, supN ((|0> + |N>)/sqrt2), cat2+ / cat2- (alpha = sqrt2), cohX.
QuantumState named_state(const std::string& name, int cutoff);

/// Itinerant state after a full release of `rho_a`; the lossy version uses
/// the steady-state conversion efficiency at coupling g.
QuantumState fully_released(const QuantumState& rho_a, const SystemParams& p, double g, bool lossless);

/// sum_k p_k <t_k|rho_k|t_k> for a coherent-basis cavity measurement with
/// itinerant targets |-+alpha_b>; dwell applied through the POVM.
double coherent_contrast(const QuantumState& joint, cplx alpha_a, cplx alpha_b, double dwell, double chi_aa);
/// Same contrast with the dwell applied to the joint state instead.
double coherent_contrast_evolved(const QuantumState& joint, cplx alpha_a, cplx alpha_b, double dwell, double chi_aa);

// ---- registry -------------------------------------------------------------

struct ParamSpec {
  std::string key;
  json default_value;
  std::string help;
};

struct Info {
  std::string name;
  std::string figure;
  std::string summary;
  std::vector<ParamSpec> params;  // seed and params_file are added to all
};

const std::vector<Info>& registry();
/// Throws invalid_argument naming the known experiments.
const Info& find(std::string_view name);

/// Defaults overlaid with `settings`. Keys are checked against the
/// experiment; values are coerced to the default's type (strings such as
/// "1e6", "true" or "25,54" are accepted).
json resolve(const Info& info, const json& settings);

std::uint64_t fnv1a(std::string_view data);
/// 16 hex digits of FNV-1a over the canonical dump of the resolved config.
std::string config_hash(const json& resolved);

struct Result {
  json manifest;
  std::vector<std::string> files;
};

/// Runs `name` into `out_dir` (created if missing) and writes manifest.json.
Result run(const std::string& name, const json& settings, const std::string& out_dir);

/// Machine-readable record of a failure.
json error_record(const std::string& experiment, const std::exception& e);

std::string version();

}  // namespace catapult::experiments
