#include "qus/csv_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <system_error>

#include "qus/error.hpp"

namespace qus::csv {
namespace {

using Row = std::vector<std::string_view>;

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

// Streams data rows, validating the header; `row` counts from 1 at the header.
class Reader {
 public:
  Reader(const std::filesystem::path& path, std::string_view header)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
    std::string first;
    if (!std::getline(in_, first)) throw ParseError(path.string() + ": empty file", 1);
    strip_cr(first);
    if (first != header) {
      throw ParseError(path.string() + ": row 1: expected header '" + std::string(header) +
                           "', found '" + first + "'",
                       1);
    }
    columns_ = split(header).size();
  }

  bool next(Row& fields) {
    while (std::getline(in_, line_)) {
      ++row_;
      strip_cr(line_);
      if (line_.empty()) continue;
      fields = split(line_);
      if (fields.size() != columns_) {
        fail("expected " + std::to_string(columns_) + " fields, found " +
             std::to_string(fields.size()));
      }
      return true;
    }
    return false;
  }

  double number(std::string_view field, const char* column) const {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      fail(std::string("column ") + column + ": cannot parse '" + std::string(field) +
           "' as a number");
    }
    return value;
  }

  std::size_t index(std::string_view field, const char* column) const {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      fail(std::string("column ") + column + ": cannot parse '" + std::string(field) +
           "' as a non-negative integer");
    }
    return value;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(path_.string() + ": row " + std::to_string(row_) + ": " + message, row_);
  }

  std::size_t row() const noexcept { return row_; }

 private:
  static void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::string line_;
  std::size_t columns_ = 0;
  std::size_t row_ = 1;
};

void write_sampled(const std::filesystem::path& path, std::string_view header,
                   const std::vector<Eigen::MatrixXd>& lines, std::span<const double> depths,
                   std::span<const double> freqs, int digits) {
  std::ofstream out = open_for_write(path);
  out << header << '\n';
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const Eigen::MatrixXd& m = lines[l];
    for (std::size_t j = 0; j < depths.size(); ++j) {
      for (std::size_t i = 0; i < freqs.size(); ++i) {
        out << l << ',' << format_number(depths[j], digits) << ','
            << format_number(freqs[i], digits) << ','
            << format_number(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), digits)
            << '\n';
      }
    }
  }
  finish(out, path);
}

// Rows must come line by line, depth-major within a line, with the same
// (depth, frequency) sampling on every line.
SampledLines read_sampled(const std::filesystem::path& path, std::string_view header,
                          bool require_positive) {
  Reader reader(path, header);
  SampledLines out;
  struct Sample {
    double depth, freq, value;
  };
  std::vector<std::vector<Sample>> per_line;
  Row fields;
  while (reader.next(fields)) {
    const std::size_t line = reader.index(fields[0], "line_index");
    const Sample s{reader.number(fields[1], "depth_cm"), reader.number(fields[2], "freq_mhz"),
                   reader.number(fields[3], header == kSpectraHeader ? "S" : "X")};
    if (require_positive && !(s.value > 0.0)) reader.fail("power spectrum must be > 0");
    if (line == per_line.size()) {
      per_line.emplace_back();
    } else if (line + 1 != per_line.size()) {
      reader.fail("line_index " + std::to_string(line) + " out of order");
    }
    per_line.back().push_back(s);
  }
  if (per_line.empty()) throw ParseError(path.string() + ": no data rows", reader.row());

  // Sampling from line 0.
  const std::vector<Sample>& first = per_line.front();
  for (const Sample& s : first) {
    if (out.depths.empty() || s.depth != out.depths.back()) {
      if (!out.depths.empty() && !(s.depth > out.depths.back())) {
        throw ParseError(path.string() + ": depths are not increasing in line 0", 0);
      }
      out.depths.push_back(s.depth);
    }
    if (out.depths.size() == 1) out.frequencies.push_back(s.freq);
  }
  const std::size_t nf = out.frequencies.size();
  const std::size_t nd = out.depths.size();
  std::size_t data_row = 1;
  for (std::size_t l = 0; l < per_line.size(); ++l) {
    const std::vector<Sample>& samples = per_line[l];
    if (samples.size() != nf * nd) {
      throw ParseError(path.string() + ": line " + std::to_string(l) + " has " +
                           std::to_string(samples.size()) + " samples, expected " +
                           std::to_string(nf * nd),
                       data_row + 1);
    }
    Eigen::MatrixXd m(nf, nd);
    for (std::size_t j = 0; j < nd; ++j) {
      for (std::size_t i = 0; i < nf; ++i) {
        const Sample& s = samples[j * nf + i];
        ++data_row;
        if (s.depth != out.depths[j] || s.freq != out.frequencies[i]) {
          throw ParseError(path.string() + ": row " + std::to_string(data_row) +
                               ": sample is not on the grid of line 0",
                           data_row);
        }
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.value;
      }
    }
    out.lines.push_back(std::move(m));
  }
  return out;
}

// Reads a map or truth file into a ParameterField. Columns are located by
// offset from the end: alpha_abs_db, b_abs, n_abs are always the last three.
ParameterField read_field(const std::filesystem::path& path, std::string_view header) {
  Reader reader(path, header);
  std::map<std::size_t, std::pair<double, std::vector<std::array<double, 4>>>> lines;
  Row fields;
  while (reader.next(fields)) {
    const std::size_t line = reader.index(fields[0], "line_index");
    const double lateral = reader.number(fields[1], "lateral_cm");
    const double depth = reader.number(fields[2], "depth_cm");
    const std::size_t c = fields.size();
    const double alpha = reader.number(fields[c - 3], "alpha_abs_db");
    const double b = reader.number(fields[c - 2], "b_abs");
    const double n = reader.number(fields[c - 1], "n_abs");
    if (!(b > 0.0)) reader.fail("b_abs must be > 0");
    auto& entry = lines[line];
    if (entry.second.empty()) {
      entry.first = lateral;
    } else if (entry.first != lateral) {
      reader.fail("lateral_cm changes within line " + std::to_string(line));
    }
    entry.second.push_back({depth, alpha, b, n});
  }
  if (lines.empty()) throw ParseError(path.string() + ": no data rows", reader.row());

  ParameterField f;
  for (const auto& s : lines.begin()->second.second) f.depth_cm.push_back(s[0]);
  const auto nd = static_cast<Eigen::Index>(f.depth_cm.size());
  const auto nl = static_cast<Eigen::Index>(lines.size());
  f.alpha_db.resize(nl, nd);
  f.b.resize(nl, nd);
  f.n.resize(nl, nd);
  Eigen::Index l = 0;
  for (const auto& [index, entry] : lines) {
    if (entry.second.size() != f.depth_cm.size()) {
      throw ParseError(path.string() + ": line " + std::to_string(index) +
                           " has a different number of depth samples",
                       0);
    }
    f.lateral_cm.push_back(entry.first);
    for (Eigen::Index j = 0; j < nd; ++j) {
      const auto& s = entry.second[static_cast<std::size_t>(j)];
      if (s[0] != f.depth_cm[static_cast<std::size_t>(j)]) {
        throw ParseError(path.string() + ": line " + std::to_string(index) +
                             " uses different depths",
                         0);
      }
      f.alpha_db(l, j) = s[1];
      f.b(l, j) = s[2];
      f.n(l, j) = s[3];
    }
    ++l;
  }
  return f;
}

}  // namespace

std::string format_number(double value, int digits) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, digits);
  if (ec != std::errc()) throw Error("format_number: buffer too small");
  return std::string(buf, ptr);
}

void write_spectra(const std::filesystem::path& path, const PowerSpectra& spectra,
                   const AcquisitionGrid& grid) {
  write_sampled(path, kSpectraHeader, spectra.lines, grid.depths(), grid.frequencies(), 17);
}

SampledLines read_spectra(const std::filesystem::path& path) {
  return read_sampled(path, kSpectraHeader, true);
}

void write_ratio(const std::filesystem::path& path, const std::vector<SpectralRatioField>& lines,
                 const AcquisitionGrid& grid) {
  std::vector<Eigen::MatrixXd> values;
  values.reserve(lines.size());
  for (const auto& l : lines) values.push_back(l.values());
  write_sampled(path, kRatioHeader, values, grid.depths(), grid.frequencies(), 9);
}

SampledLines read_ratio(const std::filesystem::path& path) {
  return read_sampled(path, kRatioHeader, false);
}

void write_solve_result(std::ostream& out, const SolveResult& result,
                        std::span<const double> depths, const ReferencePhantom& reference) {
  const ParameterLine diff = unpack(result.x, reference);
  if (diff.size() != depths.size()) throw DimensionError("depth count does not match result");
  const AbsoluteParameters abs = absolute_parameters(diff);
  out << kSolveResultHeader << '\n';
  for (std::size_t j = 0; j < depths.size(); ++j) {
    out << format_number(depths[j]) << ',' << format_number(diff.alpha_np[j]) << ','
        << format_number(diff.b[j]) << ',' << format_number(diff.n[j]) << ','
        << format_number(abs.alpha_db[j]) << ',' << format_number(abs.b[j]) << ','
        << format_number(abs.n[j]) << '\n';
  }
}

void write_history(std::ostream& out, const SolveResult& result) {
  out << kHistoryHeader << '\n';
  for (std::size_t k = 0; k < result.cost_history.size(); ++k) {
    out << (k + 1) << ',' << format_number(result.primal_residual_history[k]) << ','
        << format_number(result.dual_residual_history[k]) << ','
        << format_number(result.cost_history[k]) << '\n';
  }
}

void write_parameter_map(const std::filesystem::path& path, const std::vector<LineEstimate>& lines,
                         std::span<const double> depths, const ReferencePhantom& reference) {
  std::ofstream out = open_for_write(path);
  out << kMapHeader << '\n';
  for (const LineEstimate& line : lines) {
    const ParameterLine diff = unpack(line.result.x, reference);
    if (diff.size() != depths.size()) throw DimensionError("depth count does not match result");
    const AbsoluteParameters abs = absolute_parameters(diff);
    for (std::size_t j = 0; j < depths.size(); ++j) {
      out << line.line_index << ',' << format_number(line.lateral_cm) << ','
          << format_number(depths[j]) << ',' << format_number(diff.alpha_np[j]) << ','
          << format_number(diff.b[j]) << ',' << format_number(diff.n[j]) << ','
          << format_number(abs.alpha_db[j]) << ',' << format_number(abs.b[j]) << ','
          << format_number(abs.n[j]) << '\n';
    }
  }
  finish(out, path);
}

void write_convergence(const std::filesystem::path& path, const std::vector<LineEstimate>& lines) {
  std::ofstream out = open_for_write(path);
  out << kConvergenceHeader << '\n';
  for (const LineEstimate& line : lines) {
    const SolveResult& r = line.result;
    for (std::size_t k = 0; k < r.cost_history.size(); ++k) {
      out << line.line_index << ',' << (k + 1) << ','
          << format_number(r.primal_residual_history[k]) << ','
          << format_number(r.dual_residual_history[k]) << ',' << format_number(r.cost_history[k])
          << '\n';
    }
  }
  finish(out, path);
}

ParameterField read_parameter_map(const std::filesystem::path& path) {
  return read_field(path, kMapHeader);
}

void write_truth(const std::filesystem::path& path, const ParameterField& truth) {
  std::ofstream out = open_for_write(path);
  out << kTruthHeader << '\n';
  for (std::size_t l = 0; l < truth.line_count(); ++l) {
    for (std::size_t j = 0; j < truth.depth_count(); ++j) {
      const auto li = static_cast<Eigen::Index>(l);
      const auto ji = static_cast<Eigen::Index>(j);
      out << l << ',' << format_number(truth.lateral_cm[l]) << ','
          << format_number(truth.depth_cm[j]) << ',' << format_number(truth.alpha_db(li, ji))
          << ',' << format_number(truth.b(li, ji)) << ',' << format_number(truth.n(li, ji))
          << '\n';
    }
  }
  finish(out, path);
}

ParameterField read_truth(const std::filesystem::path& path) { return read_field(path, kTruthHeader); }

void write_metrics(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, MetricsReport>>& reports) {
  std::ofstream out = open_for_write(path);
  out << kMetricsHeader << '\n';
  for (const auto& [method, report] : reports) {
    for (const MetricEntry& e : report.entries) {
      out << method << ',' << e.roi << ',' << parameter_name(e.parameter) << ','
          << format_number(e.bias) << ',' << format_number(e.variance) << '\n';
    }
  }
  finish(out, path);
}

}  // namespace qus::csv
