#include "upconv/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "upconv/error.hpp"

namespace upconv {
namespace {

struct Table {
  FileHeader header;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      const auto colon = text.find(':');
      if (colon != std::string::npos && !have_header) {
        t.header.add(trim(std::string_view(text).substr(1, colon - 1)),
                     trim(std::string_view(text).substr(colon + 1)));
      }
      continue;
    }
    if (!have_header) {
      t.columns = split(text);
      have_header = true;
      continue;
    }
    auto fields = split(text);
    if (fields.size() != t.columns.size()) {
      throw InputError("line " + std::to_string(number) + ": expected " +
                       std::to_string(t.columns.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(number);
  }
  if (!have_header) throw InputError("CSV has no header row");
  return t;
}

double parse_double(const std::string& field, std::size_t line) {
  double value = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw InputError("line " + std::to_string(line) + ": '" + field + "' is not a number");
  }
  return value;
}

std::uint64_t parse_count(const std::string& field, std::size_t line) {
  std::uint64_t value = 0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InputError("line " + std::to_string(line) + ": '" + field +
                     "' is not a non-negative integer count");
  }
  return value;
}

void expect_columns(const Table& t, std::initializer_list<std::string_view> names) {
  std::vector<std::string> want(names.begin(), names.end());
  if (t.columns != want) {
    std::string joined;
    for (const auto& n : want) joined += (joined.empty() ? "" : ",") + n;
    throw InputError("unexpected CSV header; expected '" + joined + "'");
  }
}

void write_header(std::ostream& out, const FileHeader& header) {
  for (const auto& [key, value] : header.entries) out << "# " << key << ": " << value << '\n';
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  return out;
}

template <class F>
auto with_file_context(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace

void FileHeader::add(std::string key, std::string value) {
  entries.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> FileHeader::get(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

void write_spectrum(std::ostream& out, const Spectrum& spectrum, const FileHeader& header) {
  spectrum.validate();
  write_header(out, header);
  out << "wavelength_nm," << column_name(spectrum.unit) << '\n';
  for (std::size_t i = 0; i < spectrum.grid_nm.size(); ++i) {
    out << format_double(spectrum.grid_nm[i]) << ',' << format_double(spectrum.values[i]) << '\n';
  }
}

Spectrum read_spectrum(std::istream& in, FileHeader* header) {
  Table t = read_table(in);
  if (t.columns.size() != 2 || t.columns[0] != "wavelength_nm") {
    throw InputError("spectrum CSV header must be 'wavelength_nm,<unit column>'");
  }
  Spectrum s;
  s.unit = unit_from_column_name(t.columns[1]);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    s.grid_nm.push_back(parse_double(t.rows[r][0], t.line_numbers[r]));
    s.values.push_back(parse_double(t.rows[r][1], t.line_numbers[r]));
  }
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  if (header) *header = std::move(t.header);
  return s;
}

void write_kernel(std::ostream& out, const ResponseKernel& kernel, const FileHeader& header) {
  write_header(out, header);
  out << "pump_nm/signal_nm";
  for (double s : kernel.signal_grid()) out << ',' << format_double(s);
  out << '\n';
  for (std::size_t i = 0; i < kernel.rows(); ++i) {
    out << format_double(kernel.pump_grid()[i]);
    for (double v : kernel.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

ResponseKernel read_kernel(std::istream& in, FileHeader* header) {
  Table t = read_table(in);
  if (t.columns.size() < 2 || t.columns[0] != "pump_nm/signal_nm") {
    throw InputError("kernel CSV header must start with 'pump_nm/signal_nm'");
  }
  std::vector<double> signal;
  for (std::size_t c = 1; c < t.columns.size(); ++c) signal.push_back(parse_double(t.columns[c], 0));
  std::vector<double> pump;
  std::vector<double> values;
  values.reserve(t.rows.size() * signal.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    pump.push_back(parse_double(t.rows[r][0], t.line_numbers[r]));
    for (std::size_t c = 1; c < t.rows[r].size(); ++c) {
      values.push_back(parse_double(t.rows[r][c], t.line_numbers[r]));
    }
  }
  ResponseKernel kernel(std::move(pump), std::move(signal), std::move(values));
  for (std::size_t i = 0; i < kernel.rows(); ++i) {
    const auto row = kernel.row(i);
    const auto peak = std::max_element(row.begin(), row.end()) - row.begin();
    kernel.mapped_signal_nm.push_back(kernel.signal_grid()[static_cast<std::size_t>(peak)]);
  }
  if (header) {
    if (auto eff = t.header.get("efficiency")) kernel.efficiency = parse_double(*eff, 0);
    *header = std::move(t.header);
  }
  return kernel;
}

void write_scan(std::ostream& out, const ScanResult& scan, const FileHeader& header) {
  const std::size_t n = scan.size();
  const auto column = [&](const std::vector<double>& v, std::size_t i) {
    return i < v.size() ? format_double(v[i]) : std::string("nan");
  };
  write_header(out, header);
  out << "pump_nm,signal_nm_mapped,vbg_center_nm,expected_rate_cps,counts,dwell_s\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << format_double(scan.pump_nm[i]) << ',' << column(scan.mapped_signal_nm, i) << ','
        << column(scan.vbg_centers_nm, i) << ',' << column(scan.expected_rate_cps, i) << ','
        << scan.counts[i] << ',' << format_double(scan.dwell_s[i]) << '\n';
  }
}

ScanResult read_scan(std::istream& in, FileHeader* header) {
  Table t = read_table(in);
  expect_columns(t, {"pump_nm", "signal_nm_mapped", "vbg_center_nm", "expected_rate_cps",
                     "counts", "dwell_s"});
  ScanResult s;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    s.pump_nm.push_back(parse_double(f[0], line));
    s.mapped_signal_nm.push_back(parse_double(f[1], line));
    s.vbg_centers_nm.push_back(parse_double(f[2], line));
    s.expected_rate_cps.push_back(parse_double(f[3], line));
    s.counts.push_back(parse_count(f[4], line));
    s.dwell_s.push_back(parse_double(f[5], line));
    if (!(s.dwell_s.back() > 0.0)) {
      throw InputError("line " + std::to_string(line) + ": dwell must be > 0 s");
    }
  }
  if (auto seed = t.header.get("seed")) s.seed = parse_count(*seed, 0);
  if (header) *header = std::move(t.header);
  return s;
}

std::vector<CalibrationPoint> read_points(std::istream& in) {
  Table t = read_table(in);
  if (t.columns.size() != 2 || t.columns[0] != "pump_mw") {
    throw InputError("calibration CSV header must be 'pump_mw,<value column>'");
  }
  std::vector<CalibrationPoint> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({parse_double(t.rows[r][0], t.line_numbers[r]),
                   parse_double(t.rows[r][1], t.line_numbers[r])});
  }
  return out;
}

void write_spectrum(const std::filesystem::path& path, const Spectrum& spectrum,
                    const FileHeader& header) {
  auto out = open_out(path);
  write_spectrum(out, spectrum, header);
}

Spectrum read_spectrum(const std::filesystem::path& path, FileHeader* header) {
  auto in = open_in(path);
  return with_file_context(path, [&] { return read_spectrum(in, header); });
}

void write_kernel(const std::filesystem::path& path, const ResponseKernel& kernel,
                  const FileHeader& header) {
  auto out = open_out(path);
  write_kernel(out, kernel, header);
}

ResponseKernel read_kernel(const std::filesystem::path& path, FileHeader* header) {
  auto in = open_in(path);
  return with_file_context(path, [&] { return read_kernel(in, header); });
}

void write_scan(const std::filesystem::path& path, const ScanResult& scan,
                const FileHeader& header) {
  auto out = open_out(path);
  write_scan(out, scan, header);
}

ScanResult read_scan(const std::filesystem::path& path, FileHeader* header) {
  auto in = open_in(path);
  return with_file_context(path, [&] { return read_scan(in, header); });
}

std::vector<CalibrationPoint> read_points(const std::filesystem::path& path) {
  auto in = open_in(path);
  return with_file_context(path, [&] { return read_points(in); });
}

void write_json(const std::filesystem::path& path, const nlohmann::json& report) {
  auto out = open_out(path);
  out << report.dump(2) << '\n';
}

std::filesystem::path report_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

}  // namespace upconv
