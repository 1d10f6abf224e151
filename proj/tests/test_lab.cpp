#include "experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mflab_lab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string run_to_json(const std::string& name, const nlohmann::json& spec, std::uint64_t seed, const fs::path& dir) {
  lab::ArtifactWriter out(dir);
  const lab::Outcome o = lab::experiments().at(name)({spec, seed, &out});
  out.json("report.json", lab::report_json(name, seed, o));
  return slurp(dir / "report.json");
}

}  // namespace

TEST_CASE("numbers round trip through their text form") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12.566370614359172}) CHECK(std::stod(lab::num(v)) == v);
  CHECK(lab::num(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("svg carries its data and parses as a single document") {
  lab::Plot p{"t & <x>", "x", "y", true, true};
  p.series = {{"s", {1, 10, 100}, {1, 0.1, 0.01}}};
  p.reference_lines = {{"ref", 0.5}};
  const std::string svg = lab::render_svg(p);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("s,100,0.01") != std::string::npos);
  CHECK(svg.find("t &amp; &lt;x&gt;") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("every experiment is registered") {
  for (const char* name : {"degree", "strip-degree", "compactness-scan", "xi-certificates", "green-validation",
                           "meanfield-branch", "shooting-fit", "jump-table"})
    CHECK(lab::experiments().count(name) == 1);
}

TEST_CASE("reports are byte-identical across runs and record seed and anchor") {
  const nlohmann::json spec = {{"N", 1}, {"starts", 200}};
  const fs::path dir = scratch("b");
  const std::string a = run_to_json("degree", spec, 9, scratch("a"));
  const std::string b = run_to_json("degree", spec, 9, dir);
  CHECK(a == b);
  const auto j = nlohmann::json::parse(a);
  CHECK(j.at("seed") == 9);
  CHECK_FALSE(j.at("anchor").get<std::string>().empty());
  CHECK(j.at("passed") == true);
  CHECK(j.at("results").at("runs")[0].at("signed_total") == 1);
  CHECK(fs::exists(dir / "data" / "zeros.csv"));
  CHECK(fs::exists(dir / "plots" / "zeros.svg"));
}

TEST_CASE("jump table experiment writes exact rows") {
  const fs::path dir = scratch("jump");
  const auto j = nlohmann::json::parse(run_to_json("jump-table", nlohmann::json::object(), 1, dir));
  CHECK(j.at("passed") == true);
  CHECK(j.at("results").at("jump_table").size() == 5 * 7);
  const std::string csv = slurp(dir / "data" / "jump_table.csv");
  CHECK(csv.rfind("chi,N,d_N,d_N_plus_1,jump,predicted,holds\n", 0) == 0);
}

TEST_CASE("parameters echo the effective values") {
  const fs::path dir = scratch("xi");
  const auto j = nlohmann::json::parse(
      run_to_json("xi-certificates", {{"samples", 200}, {"J", {2}}, {"variants", {"plane", "hat_halfspace"}}}, 3, dir));
  CHECK(j.at("parameters").at("samples") == 200);
  CHECK(j.at("parameters").at("scale") == 0.5);
  CHECK(j.at("results").at("variants").size() == 2);
  CHECK(j.at("passed") == true);
}
