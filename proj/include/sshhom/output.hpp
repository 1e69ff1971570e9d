#pragma once

// CSV tables, minimal SVG plots and content hashes for run outputs.

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace sshhom::output {

/// Shortest round-trip decimal representation of a double.
std::string format_number(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& row);
  void add_row(const std::vector<std::string>& row);
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> lines_;
};

/// Matrix as a headerless CSV grid (row q, column r).
void write_grid(const std::filesystem::path& path, const Eigen::MatrixXd& grid);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

void write_heatmap(const std::filesystem::path& path, const std::string& title,
                   const Eigen::MatrixXd& grid);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace sshhom::output
