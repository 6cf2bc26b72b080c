#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "upconv/conversion.hpp"
#include "upconv/spectrometer.hpp"
#include "upconv/spectrum.hpp"

namespace upconv {

/// `# key: value` comment lines written above the CSV header row.
struct FileHeader {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(std::string key, std::string value);
  [[nodiscard]] std::optional<std::string> get(std::string_view key) const;
};

/// Shortest decimal form that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

void write_spectrum(std::ostream& out, const Spectrum& spectrum, const FileHeader& header);
[[nodiscard]] Spectrum read_spectrum(std::istream& in, FileHeader* header = nullptr);

/// First row `pump_nm/signal_nm,<signal grid>`, then one row per pump point.
void write_kernel(std::ostream& out, const ResponseKernel& kernel, const FileHeader& header);
/// Mapped signal provenance is rebuilt from each row's peak column.
[[nodiscard]] ResponseKernel read_kernel(std::istream& in, FileHeader* header = nullptr);

/// Columns pump_nm, signal_nm_mapped, vbg_center_nm, expected_rate_cps,
/// counts, dwell_s. The seed travels in the `seed` header entry.
void write_scan(std::ostream& out, const ScanResult& scan, const FileHeader& header);
[[nodiscard]] ScanResult read_scan(std::istream& in, FileHeader* header = nullptr);

/// Two columns: pump_mw and a value column of any name.
[[nodiscard]] std::vector<CalibrationPoint> read_points(std::istream& in);

// File wrappers; InputError when a file cannot be opened or parsed.
void write_spectrum(const std::filesystem::path& path, const Spectrum& spectrum,
                    const FileHeader& header);
[[nodiscard]] Spectrum read_spectrum(const std::filesystem::path& path,
                                     FileHeader* header = nullptr);
void write_kernel(const std::filesystem::path& path, const ResponseKernel& kernel,
                  const FileHeader& header);
[[nodiscard]] ResponseKernel read_kernel(const std::filesystem::path& path,
                                         FileHeader* header = nullptr);
void write_scan(const std::filesystem::path& path, const ScanResult& scan,
                const FileHeader& header);
[[nodiscard]] ScanResult read_scan(const std::filesystem::path& path, FileHeader* header = nullptr);
[[nodiscard]] std::vector<CalibrationPoint> read_points(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& report);

/// `out.csv` -> `out.json`.
[[nodiscard]] std::filesystem::path report_path_for(const std::filesystem::path& csv_path);

}  // namespace upconv
