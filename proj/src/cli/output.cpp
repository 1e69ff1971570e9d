#include "sshhom/output.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace sshhom::output {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), end);
}

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void CsvTable::add_row(const std::vector<double>& row) {
  std::vector<std::string> cells;
  cells.reserve(row.size());
  for (double v : row) cells.push_back(format_number(v));
  add_row(cells);
}

void CsvTable::add_row(const std::vector<std::string>& row) {
  if (row.size() != header_.size()) throw std::invalid_argument("CSV row width does not match header");
  lines_.push_back(join(row));
}

std::string CsvTable::str() const {
  std::string text = join(header_) + '\n';
  for (const auto& line : lines_) text += line + '\n';
  return text;
}

void CsvTable::write(const std::filesystem::path& path) const { open_for_write(path) << str(); }

void write_grid(const std::filesystem::path& path, const Eigen::MatrixXd& grid) {
  auto out = open_for_write(path);
  for (Eigen::Index q = 0; q < grid.rows(); ++q) {
    for (Eigen::Index r = 0; r < grid.cols(); ++r) {
      if (r) out << ',';
      out << format_number(grid(q, r));
    }
    out << '\n';
  }
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 60.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int precision = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (double y : s.y) {
      if (std::isnan(y)) continue;
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  auto sx = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * ph; };

  auto out = open_for_write(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  out << "<text x=\"15\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << kHeight / 2 << ")\">" << escape(y_label) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    out << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"middle\">" << format_number(std::round(xv * 1000) / 1000) << "</text>\n";
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << fixed(sy(yv) + 4)
        << "\" text-anchor=\"end\">" << format_number(std::round(yv * 1000) / 1000) << "</text>\n";
  }
  int legend = 0;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (s.dashed) out << " stroke-dasharray=\"6,4\"";
    out << " points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (std::isnan(s.y[i])) continue;
      out << fixed(sx(s.x[i])) << ',' << fixed(sy(s.y[i])) << ' ';
    }
    out << "\"/>\n";
    if (!s.label.empty()) {
      const double ly = kMargin + 14 + 16 * legend++;
      out << "<line x1=\"" << kWidth - kMargin - 120 << "\" y1=\"" << ly - 4 << "\" x2=\""
          << kWidth - kMargin - 100 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color << "\"/>\n";
      out << "<text x=\"" << kWidth - kMargin - 95 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
    }
  }
  out << "</svg>\n";
}

void write_heatmap(const std::filesystem::path& path, const std::string& title, const Eigen::MatrixXd& grid) {
  const double lo = grid.size() ? grid.minCoeff() : 0.0;
  const double hi = grid.size() ? grid.maxCoeff() : 1.0;
  const double span = hi > lo ? hi - lo : 1.0;
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  const double cw = pw / std::max<Eigen::Index>(1, grid.cols());
  const double ch = ph / std::max<Eigen::Index>(1, grid.rows());
  auto out = open_for_write(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  for (Eigen::Index q = 0; q < grid.rows(); ++q) {
    for (Eigen::Index r = 0; r < grid.cols(); ++r) {
      const double f = (grid(q, r) - lo) / span;
      // White to dark blue.
      const int red = static_cast<int>(std::lround(255 * (1 - f)));
      const int green = static_cast<int>(std::lround(255 * (1 - 0.8 * f)));
      out << "<rect x=\"" << fixed(kMargin + r * cw) << "\" y=\"" << fixed(kMargin + q * ch) << "\" width=\""
          << fixed(cw) << "\" height=\"" << fixed(ch) << "\" fill=\"rgb(" << red << ',' << green << ",255)\"/>\n";
    }
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 20 << "\" text-anchor=\"middle\">range ["
      << format_number(lo) << ", " << format_number(hi) << "]</text>\n";
  out << "</svg>\n";
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 14> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

}  // namespace sshhom::output
