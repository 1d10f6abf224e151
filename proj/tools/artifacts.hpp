#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace lab {

// Shortest round-trip text for a double.
std::string num(double v);

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool markers = false;  // scatter instead of polyline
};

struct Plot {
  std::string title, xlabel, ylabel;
  bool log_x = false, log_y = false;
  bool equal_aspect = false;
  std::vector<Series> series;
  std::vector<std::pair<std::string, double>> reference_lines;  // horizontal
};

// Standalone SVG; the plotted numbers ride along as CSV inside <metadata>.
std::string render_svg(const Plot& p);

// Owns the output tree: report.json, data/*.csv, plots/*.svg and any sidecars.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);
  void svg(const std::string& name, const Plot& p);
  void json(const std::string& relative, const nlohmann::json& j);
  std::ofstream open(const std::string& relative, bool binary = false);
  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

}  // namespace lab
