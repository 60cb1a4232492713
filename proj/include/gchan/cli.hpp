#pragma once

#include "gchan/infocore.hpp"
#include "gchan/kernels.hpp"
#include "gchan/operator.hpp"
#include "gchan/stationary.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gchan::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2 };

// Command-line overrides applied on top of the JSON config.
struct RunOptions {
  std::filesystem::path config;  // empty: start from {}
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

// ---- config ---------------------------------------------------------------

// Reads a JSON object from disk; ConfigError on I/O or syntax problems.
Json load_config(const std::filesystem::path& path);

struct CommonConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = ".";
  unsigned threads = 1;
  Json effective;  // the input object with command-line overrides applied
};

struct SpectrumConfig {
  CommonConfig common;
  Json kernel_json;
  std::optional<KernelSpec> kernel;
  TimeGrid grid;
  std::optional<std::size_t> count;
};

struct CurvesConfig {
  CommonConfig common;
  Json source_json;  // {"kernel": ..., "grid": ...} or {"eigenvalues": ...}
  std::optional<KernelSpec> kernel;
  TimeGrid grid;
  std::vector<double> eigenvalues;
  GammaGrid gamma{std::vector<double>{1.0}};
  DerivativeMode derivative = DerivativeMode::Analytic;
};

struct VerifyConfig {
  CommonConfig common;
  double tolerance_scale = 1.0;
  std::size_t n = 400;                                   // Brownian / exponential spectra
  std::vector<std::size_t> innovation_n{100, 200, 400};  // refinement levels
  std::size_t feedback_n = 40;
  std::size_t binary_n = 100;
  std::size_t paths = 20000;
  std::vector<double> horizons{10.0, 20.0, 40.0};
  double step = 0.1;
  GammaGrid gamma = GammaGrid::log_spaced(1e-3, 1e2, 50);
};

enum class SignalKind { Binary, Gaussian };

struct SimulateConfig {
  CommonConfig common;
  SignalKind signal = SignalKind::Binary;
  double gamma = 1.0;
  std::size_t paths = 20000;
  TimeGrid grid;
  std::string profile = "constant";
  Json kernel_json;
  std::optional<KernelSpec> kernel;
};

struct YjConfig {
  CommonConfig common;
  SpectralDensity density = SpectralDensity::lorentzian(1.0, 1.0);
  double gamma = 1.0;
  std::vector<double> horizons{10.0, 20.0, 40.0};
  double step = 0.05;
  std::size_t max_dimension = kDefaultEigenBudget;
};

// Schema validation: every parser rejects unknown keys, missing required keys
// and out-of-range values with ConfigError naming the offending path.
KernelSpec parse_kernel(const Json& j, const TimeGrid& grid);
TimeGrid parse_grid(const Json& j);
GammaGrid parse_gamma_grid(const Json& j);

SpectrumConfig parse_spectrum_config(const Json& j, const RunOptions& opts);
CurvesConfig parse_curves_config(const Json& j, const RunOptions& opts);
VerifyConfig parse_verify_config(const Json& j, const RunOptions& opts);
SimulateConfig parse_simulate_config(const Json& j, const RunOptions& opts);
YjConfig parse_yj_config(const Json& j, const RunOptions& opts);

// ---- output ---------------------------------------------------------------

// Shortest form with 17 significant digits, '.' decimal point, no locale.
std::string format_double(double v);
// RFC 4180 field quoting.
std::string csv_field(std::string_view s);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// UTC, e.g. 2024-05-01T12:00:00Z
std::string iso_timestamp();

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

// ---- commands -------------------------------------------------------------

int cmd_spectrum(const SpectrumConfig& cfg, std::ostream& log);
int cmd_curves(const CurvesConfig& cfg, std::ostream& log);
int cmd_verify(const VerifyConfig& cfg, std::ostream& log);
int cmd_simulate(const SimulateConfig& cfg, std::ostream& log);
int cmd_yj(const YjConfig& cfg, std::ostream& log);

// The verification report (without writing it).
Json run_verification(const VerifyConfig& cfg);

// Loads the config, applies overrides, dispatches and maps exceptions to
// exit codes (ConfigError/DomainError -> 2, NumericError -> 1).
int run(std::string_view command, const RunOptions& opts, std::ostream& log, std::ostream& err);

std::string_view version();

}  // namespace gchan::cli
