#include "bladeenv/errors.hpp"
#include "bladeenv/pipeline/artifacts.hpp"
#include "bladeenv/pipeline/config.hpp"
#include "bladeenv/pipeline/stages.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

using namespace bladeenv;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string envelope;
  std::string profiles;
};

pipeline::Workspace workspace(const Options& o) {
  auto cfg = o.config.empty() ? pipeline::parse_config(nlohmann::json::object()) : pipeline::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  return pipeline::Workspace(std::move(cfg), o.out, o.jobs);
}

int run(const std::string& verb, const Options& o) {
  using Stage = std::function<nlohmann::json(const pipeline::Workspace&)>;
  static const std::map<std::string, Stage> stages = {
      {"doe", pipeline::stage_doe},           {"evaluate", pipeline::stage_evaluate},
      {"fit", pipeline::stage_fit},           {"subspace", pipeline::stage_subspace},
      {"sample", pipeline::stage_sample},     {"envelope", pipeline::stage_envelope},
      {"report", pipeline::stage_report},     {"run-all", pipeline::run_all},
  };
  if (verb == "gate" && !o.profiles.empty()) {
    const std::string env = o.envelope.empty() ? (std::filesystem::path(o.out) / pipeline::files::kEnvelope).string()
                                               : o.envelope;
    std::filesystem::create_directories(o.out);
    const auto target = (std::filesystem::path(o.out) / pipeline::files::kUserVerdicts).string();
    const auto summary = pipeline::gate_profiles(env, o.profiles, target, o.jobs);
    std::cout << "gate: " << summary.dump() << "\nwrote " << target << '\n';
    return 0;
  }
  const auto ws = workspace(o);
  const auto summary = verb == "gate" ? pipeline::stage_gate(ws) : stages.at(verb)(ws);
  if (verb == "run-all") {
    for (const auto& s : summary) std::cout << s["stage"].get<std::string>() << ": " << s["summary"].dump() << '\n';
  } else {
    std::cout << verb << ": " << summary.dump() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blade envelope pipeline: inactive-subspace sampling and manufacturing tolerance gates"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "pipeline config (JSON); defaults apply when omitted")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "artifact directory")->capture_default_str();
  app.add_option("--seed", o.seed, "override the config seed");
  app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"doe", "draw (or ingest) the design of experiments"},
      {"evaluate", "evaluate the qoi at every design"},
      {"fit", "fit the sparse polynomial surrogate"},
      {"subspace", "estimate the gradient covariance and split active/inactive"},
      {"sample", "sample the inactive polytope and lift to designs"},
      {"envelope", "build the envelope statistics and gate"},
      {"gate", "render verdicts on validation sets or on --profiles"},
      {"report", "write plots and summary from the artifacts"},
      {"run-all", "run every stage in order"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : verbs) subs[name] = app.add_subcommand(name, help);
  subs["gate"]->add_option("--envelope", o.envelope, "envelope JSON (default: <out>/envelope.json)");
  subs["gate"]->add_option("--profiles", o.profiles, "multi-profile CSV to gate")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfigError);
  }

  std::string verb;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) verb = name;
  try {
    return run(verb, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfigError);
  } catch (const ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kArtifactError);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kNumericalError);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kNumericalError);
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
}
