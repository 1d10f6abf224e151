// Experiment runner: one subcommand per experiment, JSON spec in, report.json + data/ + plots/ out.
#include "experiments.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

nlohmann::json load_spec(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read spec file " + path);
  nlohmann::json spec = nlohmann::json::parse(in);
  if (!spec.is_object()) throw std::runtime_error("spec must be a JSON object");
  return spec;
}

struct Flags {
  std::string spec_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

int run(const std::string& name, const Flags& flags) {
  nlohmann::json spec = load_spec(flags.spec_path);
  if (spec.contains("experiment") && spec.at("experiment") != name)
    throw std::runtime_error("spec is for experiment '" + spec.at("experiment").get<std::string>() + "', not '" +
                             name + "'");
  const std::uint64_t seed = flags.seed ? *flags.seed : spec.value("seed", std::uint64_t{1});
  if (flags.threads > 0) omp_set_num_threads(flags.threads);
  lab::ArtifactWriter out(flags.out_dir.empty() ? "out/" + name : flags.out_dir);

  lab::RunContext ctx{spec, seed, &out};
  lab::Outcome outcome;
  try {
    outcome = lab::experiments().at(name)(ctx);
  } catch (const std::exception& e) {
    out.json("report.json", {{"experiment", name},
                             {"seed", seed},
                             {"passed", false},
                             {"error", {{"operation", name}, {"message", e.what()}, {"spec", spec}}}});
    std::cerr << name << " failed: " << e.what() << '\n';
    return 2;
  }

  for (const auto& [key, value] : spec.items())
    if (key != "experiment" && key != "seed" && !outcome.parameters.contains(key))
      std::cerr << "warning: unused spec key '" << key << "'\n";

  out.json("report.json", lab::report_json(name, seed, outcome));
  for (const auto& a : outcome.assertions)
    std::cout << (a.passed ? "PASS  " : "FAIL  ") << a.name << (a.detail.empty() ? "" : "  [" + a.detail + "]")
              << '\n';
  std::cout << "report: " << (out.root() / "report.json").string() << '\n';
  return outcome.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field lab: degree counts, Green checks, blow-up branches, radial shooting"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  for (const auto& [name, runner] : lab::experiments()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--spec", flags.spec_path, "JSON parameter file")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out_dir, "output directory (default out/<experiment>)");
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { flags.seed = s; },
                                            "random seed, overrides the seed in the spec file");
    sub->add_option("--threads", flags.threads, "OpenMP threads")->check(CLI::NonNegativeNumber);
    sub->callback([&chosen, n = name] { chosen = n; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    return run(chosen, flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
