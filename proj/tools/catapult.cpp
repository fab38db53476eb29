// catapult: run figure experiments from the command line.
//
//   catapult list
//   catapult describe half-release
//   catapult run half-release --shots 1e6 --seed 3 --out results/
//   catapult run shaping --config shaping.json --sigma-us 0.4

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "catapult/error.hpp"
#include "catapult/experiments.hpp"

namespace ex = catapult::experiments;
using nlohmann::json;

namespace {

json read_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw catapult::Error(catapult::ErrorCode::io, "cannot read config " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw catapult::Error(catapult::ErrorCode::invalid_argument, "config " + path + ": " + e.what());
  }
}

// "--key value" / "--key=value" pairs left over by CLI11
json parse_extras(const std::vector<std::string>& extras) {
  json out = json::object();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string a = extras[i];
    if (a.rfind("--", 0) != 0) {
      throw catapult::Error(catapult::ErrorCode::invalid_argument, "unexpected argument '" + a + "'");
    }
    a = a.substr(2);
    std::string value;
    if (const auto eq = a.find('='); eq != std::string::npos) {
      value = a.substr(eq + 1);
      a = a.substr(0, eq);
    } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
      value = extras[++i];
    } else {
      value = "true";
    }
    std::replace(a.begin(), a.end(), '-', '_');
    out[a] = value;
  }
  return out;
}

void describe(const ex::Info& info) {
  std::cout << info.name << "  (" << info.figure << ")\n  " << info.summary << "\n\n";
  const auto defaults = ex::resolve(info, json::object());
  for (const auto& p : info.params) {
    std::string flag = p.key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    std::cout << "  --" << flag << " (default " << p.default_value.dump() << ")  " << p.help << '\n';
  }
  std::cout << "  --seed (default " << defaults["seed"] << ")  random seed\n"
            << "  --params-file (default \"\")  device parameters JSON\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate on-demand photon release from a storage cavity and regenerate the figures."};
  app.require_subcommand(1);
  app.set_version_flag("--version", ex::version());

  auto* list = app.add_subcommand("list", "List experiments");
  auto* desc = app.add_subcommand("describe", "Show an experiment's settings");
  std::string desc_name;
  desc->add_option("experiment", desc_name)->required();

  auto* run = app.add_subcommand("run", "Run an experiment (extra --key value pairs override settings)");
  run->allow_extras();
  std::string name, config, out;
  run->add_option("experiment", name)->required();
  run->add_option("--config", config, "JSON settings file (command-line flags take precedence)");
  run->add_option("--out", out, "output directory (default $CATAPULT_OUT/<experiment> or ./catapult-out/<experiment>)");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& i : ex::registry()) std::cout << i.name << "\t" << i.figure << "\t" << i.summary << '\n';
    return 0;
  }
  if (desc->parsed()) {
    try {
      describe(ex::find(desc_name));
      return 0;
    } catch (const std::exception& e) {
      std::cerr << ex::error_record(desc_name, e).dump() << '\n';
      return 2;
    }
  }

  if (out.empty()) {
    const char* env = std::getenv("CATAPULT_OUT");
    out = (env && *env ? std::string(env) : std::string("catapult-out")) + "/" + name;
  }
  try {
    json settings = config.empty() ? json::object() : read_config(config);
    if (!settings.is_object()) throw catapult::Error(catapult::ErrorCode::invalid_argument, "config must be a JSON object");
    const json overrides = parse_extras(run->remaining());
    for (const auto& [k, v] : overrides.items()) settings[k] = v;
    const auto r = ex::run(name, settings, out);
    std::cout << r.manifest["derived"].dump(2) << '\n';
    std::cout << "wrote " << r.files.size() << " files to " << out << '\n';
    return 0;
  } catch (const std::exception& e) {
    const json rec = ex::error_record(name, e);
    try {
      std::filesystem::create_directories(out);
      std::ofstream(std::filesystem::path(out) / "error.json") << rec.dump(2) << '\n';
    } catch (...) {
    }
    std::cerr << rec.dump() << '\n';
    return 1;
  }
}
