#include "gchan/cli.hpp"

#include "gchan/errors.hpp"

#include <fstream>
#include <initializer_list>
#include <cmath>
#include <set>

namespace gchan::cli {

namespace {

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + ": expected a JSON object");
}

void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  require_object(j, path);
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.contains(item.key())) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
      throw ConfigError("unknown key '" + join_path(path, item.key()) + "' (allowed: " + list + ")");
    }
  }
}

const Json& required(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError("missing required key '" + join_path(path, key) + "'");
  return j.at(key);
}

double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path + ": expected a finite number");
  return x;
}

double positive(const Json& v, const std::string& path) {
  const double x = as_number(v, path);
  if (!(x > 0.0)) throw ConfigError(path + ": must be > 0 (got " + format_double(x) + ")");
  return x;
}

double nonnegative(const Json& v, const std::string& path) {
  const double x = as_number(v, path);
  if (!(x >= 0.0)) throw ConfigError(path + ": must be >= 0 (got " + format_double(x) + ")");
  return x;
}

std::uint64_t as_count(const Json& v, const std::string& path, std::uint64_t min = 0) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  if (v.is_number_unsigned()) {
    const auto x = v.get<std::uint64_t>();
    if (x < min) throw ConfigError(path + ": must be >= " + std::to_string(min));
    return x;
  }
  const auto x = v.get<std::int64_t>();
  if (x < 0 || static_cast<std::uint64_t>(x) < min) throw ConfigError(path + ": must be >= " + std::to_string(min));
  return static_cast<std::uint64_t>(x);
}

std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> number_list(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<ExponentialTerm>> parse_channels(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a nonempty array of channels");
  std::vector<std::vector<ExponentialTerm>> out;
  for (std::size_t c = 0; c < v.size(); ++c) {
    const std::string cp = path + "[" + std::to_string(c) + "]";
    const Json& ch = v[c];
    if (!ch.is_array() || ch.empty()) throw ConfigError(cp + ": expected a nonempty array of {variance, rate}");
    std::vector<ExponentialTerm> terms;
    for (std::size_t t = 0; t < ch.size(); ++t) {
      const std::string tp = cp + "[" + std::to_string(t) + "]";
      check_keys(ch[t], tp, {"variance", "rate"});
      terms.push_back({positive(required(ch[t], tp, "variance"), tp + ".variance"),
                       positive(required(ch[t], tp, "rate"), tp + ".rate")});
    }
    out.push_back(std::move(terms));
  }
  return out;
}

// DomainError from library validation surfaces as a configuration problem.
template <class F>
auto as_config(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

CommonConfig parse_common(const Json& j, const RunOptions& opts) {
  CommonConfig c;
  if (j.contains("seed")) c.seed = as_count(j.at("seed"), "seed");
  if (j.contains("output_dir")) c.output_dir = as_string(j.at("output_dir"), "output_dir");
  if (j.contains("threads")) c.threads = static_cast<unsigned>(as_count(j.at("threads"), "threads", 1));
  if (opts.seed) c.seed = *opts.seed;
  if (opts.out) c.output_dir = *opts.out;
  if (opts.threads) {
    if (*opts.threads == 0) throw ConfigError("--threads must be at least 1");
    c.threads = *opts.threads;
  }
  c.effective = j;
  c.effective["seed"] = c.seed;
  c.effective["output_dir"] = c.output_dir.string();
  c.effective["threads"] = c.threads;
  return c;
}

SignalKind parse_signal(const Json& v) {
  const std::string s = as_string(v, "signal");
  if (s == "binary") return SignalKind::Binary;
  if (s == "gaussian") return SignalKind::Gaussian;
  throw ConfigError("signal: expected \"binary\" or \"gaussian\" (got \"" + s + "\")");
}

}  // namespace

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  require_object(j, "");
  return j;
}

TimeGrid parse_grid(const Json& j) {
  check_keys(j, "grid", {"T", "n"});
  const double T = positive(required(j, "grid", "T"), "grid.T");
  const auto n = as_count(required(j, "grid", "n"), "grid.n", 1);
  return TimeGrid::midpoint(T, n);
}

KernelSpec parse_kernel(const Json& j, const TimeGrid& grid) {
  require_object(j, "kernel");
  const std::string family = as_string(required(j, "kernel", "family"), "kernel.family");
  const double T = grid.horizon();
  if (family == "exponential") {
    check_keys(j, "kernel", {"family", "variance", "rate"});
    return KernelSpec(family::Exponential{positive(required(j, "kernel", "variance"), "kernel.variance"),
                                          positive(required(j, "kernel", "rate"), "kernel.rate")},
                      T);
  }
  if (family == "brownian_motion") {
    check_keys(j, "kernel", {"family"});
    return KernelSpec(family::BrownianMotion{}, T);
  }
  if (family == "brownian_bridge") {
    check_keys(j, "kernel", {"family"});
    return KernelSpec(family::BrownianBridge{}, T);
  }
  if (family == "squared_exponential") {
    check_keys(j, "kernel", {"family", "variance", "length_scale"});
    return KernelSpec(family::SquaredExponential{positive(required(j, "kernel", "variance"), "kernel.variance"),
                                                 positive(required(j, "kernel", "length_scale"),
                                                          "kernel.length_scale")},
                      T);
  }
  if (family == "finite_rank") {
    check_keys(j, "kernel", {"family", "eigenvalues", "basis"});
    const auto values = number_list(required(j, "kernel", "eigenvalues"), "kernel.eigenvalues");
    for (std::size_t i = 0; i < values.size(); ++i) {
      nonnegative(Json(values[i]), "kernel.eigenvalues[" + std::to_string(i) + "]");
    }
    const Json basis_json = j.contains("basis") ? j.at("basis") : Json("cosine");
    Eigen::MatrixXd basis;
    if (basis_json.is_string()) {
      if (basis_json.get<std::string>() != "cosine") throw ConfigError("kernel.basis: expected \"cosine\" or a matrix");
      if (values.size() > grid.size()) throw ConfigError("kernel.eigenvalues: rank exceeds grid size");
      basis = cosine_basis(grid, values.size());
    } else {
      if (!basis_json.is_array() || basis_json.size() != grid.size()) {
        throw ConfigError("kernel.basis: expected grid.n rows of length rank");
      }
      basis.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(values.size()));
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto row = number_list(basis_json[i], "kernel.basis[" + std::to_string(i) + "]");
        if (row.size() != values.size()) throw ConfigError("kernel.basis: row length must equal the rank");
        for (std::size_t r = 0; r < row.size(); ++r) {
          basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = row[r];
        }
      }
    }
    return as_config("kernel", [&] { return KernelSpec(family::FiniteRank{values, basis, grid}, T); });
  }
  if (family == "matrix_stationary") {
    check_keys(j, "kernel", {"family", "channels"});
    return KernelSpec(family::MatrixStationary{parse_channels(required(j, "kernel", "channels"), "kernel.channels")},
                      T);
  }
  throw ConfigError("kernel.family: unknown family \"" + family +
                    "\" (expected exponential, brownian_motion, brownian_bridge, squared_exponential, finite_rank, "
                    "matrix_stationary)");
}

GammaGrid parse_gamma_grid(const Json& j) {
  if (j.is_array()) {
    const auto values = number_list(j, "gamma");
    for (std::size_t i = 0; i < values.size(); ++i) positive(Json(values[i]), "gamma[" + std::to_string(i) + "]");
    return as_config("gamma", [&] { return GammaGrid(values); });
  }
  check_keys(j, "gamma", {"min", "max", "points", "spacing"});
  const double lo = positive(required(j, "gamma", "min"), "gamma.min");
  const double hi = positive(required(j, "gamma", "max"), "gamma.max");
  const auto points = as_count(required(j, "gamma", "points"), "gamma.points", 1);
  if (hi < lo || (points > 1 && hi == lo)) throw ConfigError("gamma: max must exceed min");
  const std::string spacing = j.contains("spacing") ? as_string(j.at("spacing"), "gamma.spacing") : "log";
  if (spacing == "log") return as_config("gamma", [&] { return GammaGrid::log_spaced(lo, hi, points); });
  if (spacing == "lin") return as_config("gamma", [&] { return GammaGrid::linear(lo, hi, points); });
  throw ConfigError("gamma.spacing: expected \"log\" or \"lin\"");
}

SpectrumConfig parse_spectrum_config(const Json& j, const RunOptions& opts) {
  check_keys(j, "", {"kernel", "grid", "count", "seed", "output_dir", "threads"});
  SpectrumConfig c;
  c.common = parse_common(j, opts);
  c.grid = parse_grid(required(j, "", "grid"));
  c.kernel_json = required(j, "", "kernel");
  c.kernel = parse_kernel(c.kernel_json, c.grid);
  if (j.contains("count")) c.count = as_count(j.at("count"), "count", 1);
  if (c.grid.size() * static_cast<std::size_t>(c.kernel->channels()) > kDefaultEigenBudget) {
    throw ConfigError("grid.n * channels exceeds the eigensolver budget " + std::to_string(kDefaultEigenBudget) +
                      "; use n <= " + std::to_string(kDefaultEigenBudget / c.kernel->channels()));
  }
  return c;
}

CurvesConfig parse_curves_config(const Json& j, const RunOptions& opts) {
  check_keys(j, "", {"kernel", "grid", "eigenvalues", "gamma", "derivative", "seed", "output_dir", "threads"});
  CurvesConfig c;
  c.common = parse_common(j, opts);
  const bool has_kernel = j.contains("kernel");
  const bool has_values = j.contains("eigenvalues");
  if (has_kernel == has_values) throw ConfigError("curves: give exactly one of 'kernel' (with 'grid') or 'eigenvalues'");
  if (has_values) {
    if (j.contains("grid")) throw ConfigError("curves: 'grid' is only used together with 'kernel'");
    c.eigenvalues = number_list(j.at("eigenvalues"), "eigenvalues");
    for (std::size_t i = 0; i < c.eigenvalues.size(); ++i) {
      nonnegative(Json(c.eigenvalues[i]), "eigenvalues[" + std::to_string(i) + "]");
    }
    c.source_json = Json{{"eigenvalues", j.at("eigenvalues")}};
  } else {
    c.grid = parse_grid(required(j, "", "grid"));
    c.kernel = parse_kernel(j.at("kernel"), c.grid);
    if (c.grid.size() * static_cast<std::size_t>(c.kernel->channels()) > kDefaultEigenBudget) {
      throw ConfigError("grid.n * channels exceeds the eigensolver budget " + std::to_string(kDefaultEigenBudget));
    }
    c.source_json = Json{{"kernel", j.at("kernel")}, {"grid", j.at("grid")}};
  }
  c.gamma = parse_gamma_grid(required(j, "", "gamma"));
  if (j.contains("derivative")) {
    const std::string d = as_string(j.at("derivative"), "derivative");
    if (d == "analytic") c.derivative = DerivativeMode::Analytic;
    else if (d == "complex_step") c.derivative = DerivativeMode::ComplexStep;
    else if (d == "finite_difference") c.derivative = DerivativeMode::FiniteDifference;
    else throw ConfigError("derivative: expected analytic, complex_step or finite_difference");
  }
  return c;
}

VerifyConfig parse_verify_config(const Json& j, const RunOptions& opts) {
  check_keys(j, "", {"tolerance_scale", "n", "innovation_n", "feedback_n", "binary_n", "paths", "horizons", "step",
                     "gamma", "seed", "output_dir", "threads"});
  VerifyConfig c;
  c.common = parse_common(j, opts);
  if (j.contains("tolerance_scale")) c.tolerance_scale = nonnegative(j.at("tolerance_scale"), "tolerance_scale");
  if (j.contains("n")) c.n = as_count(j.at("n"), "n", 2);
  if (j.contains("innovation_n")) {
    const Json& v = j.at("innovation_n");
    if (!v.is_array() || v.size() < 2) throw ConfigError("innovation_n: expected at least two grid sizes");
    c.innovation_n.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      c.innovation_n.push_back(as_count(v[i], "innovation_n[" + std::to_string(i) + "]", 1));
      if (i > 0 && c.innovation_n[i] <= c.innovation_n[i - 1]) throw ConfigError("innovation_n: must increase");
    }
  }
  if (j.contains("feedback_n")) c.feedback_n = as_count(j.at("feedback_n"), "feedback_n", 2);
  if (j.contains("binary_n")) c.binary_n = as_count(j.at("binary_n"), "binary_n", 1);
  if (j.contains("paths")) c.paths = as_count(j.at("paths"), "paths", 2);
  if (j.contains("horizons")) {
    c.horizons = number_list(j.at("horizons"), "horizons");
    for (std::size_t i = 0; i < c.horizons.size(); ++i) {
      positive(Json(c.horizons[i]), "horizons[" + std::to_string(i) + "]");
      if (i > 0 && !(c.horizons[i] > c.horizons[i - 1])) throw ConfigError("horizons: must increase");
    }
  }
  if (j.contains("step")) c.step = positive(j.at("step"), "step");
  if (j.contains("gamma")) c.gamma = parse_gamma_grid(j.at("gamma"));
  const std::size_t largest = c.n;
  std::size_t inn = c.innovation_n.back();
  if (std::max(largest, inn) > kDefaultEigenBudget) throw ConfigError("n: exceeds the eigensolver budget");
  return c;
}

SimulateConfig parse_simulate_config(const Json& j, const RunOptions& opts) {
  check_keys(j, "", {"signal", "gamma", "paths", "grid", "kernel", "profile", "seed", "output_dir", "threads"});
  SimulateConfig c;
  c.common = parse_common(j, opts);
  c.signal = parse_signal(required(j, "", "signal"));
  c.gamma = nonnegative(required(j, "", "gamma"), "gamma");
  if (!required(j, "", "paths").is_number_integer()) throw ConfigError("paths: expected an integer");
  c.paths = as_count(j.at("paths"), "paths");
  if (c.paths < 2) throw ConfigError("paths: at least 2 paths are needed for a standard error");
  c.grid = parse_grid(required(j, "", "grid"));
  if (c.signal == SignalKind::Gaussian) {
    if (j.contains("profile")) throw ConfigError("profile: only used with the binary signal");
    c.kernel_json = required(j, "", "kernel");
    c.kernel = parse_kernel(c.kernel_json, c.grid);
    if (c.grid.size() * static_cast<std::size_t>(c.kernel->channels()) > kDefaultEigenBudget) {
      throw ConfigError("grid.n * channels exceeds the eigensolver budget " + std::to_string(kDefaultEigenBudget));
    }
  } else {
    if (j.contains("kernel")) throw ConfigError("kernel: only used with the gaussian signal");
    if (j.contains("profile")) c.profile = as_string(j.at("profile"), "profile");
    if (c.profile != "constant" && c.profile != "ramp") throw ConfigError("profile: expected \"constant\" or \"ramp\"");
  }
  return c;
}

YjConfig parse_yj_config(const Json& j, const RunOptions& opts) {
  check_keys(j, "", {"kernel", "channels", "gamma", "horizons", "step", "max_dimension", "seed", "output_dir",
                     "threads"});
  YjConfig c;
  c.common = parse_common(j, opts);
  const bool has_kernel = j.contains("kernel");
  const bool has_channels = j.contains("channels");
  if (has_kernel == has_channels) throw ConfigError("yj: give exactly one of 'kernel' or 'channels'");
  if (has_channels) {
    c.density = SpectralDensity(parse_channels(j.at("channels"), "channels"));
  } else {
    const KernelSpec k = parse_kernel(j.at("kernel"), TimeGrid::midpoint(1.0, 1));
    c.density = as_config("kernel", [&] { return SpectralDensity::from_kernel(k); });
  }
  c.gamma = positive(required(j, "", "gamma"), "gamma");
  if (j.contains("horizons")) {
    c.horizons = number_list(j.at("horizons"), "horizons");
    for (std::size_t i = 0; i < c.horizons.size(); ++i) {
      positive(Json(c.horizons[i]), "horizons[" + std::to_string(i) + "]");
      if (i > 0 && !(c.horizons[i] > c.horizons[i - 1])) throw ConfigError("horizons: must increase");
    }
  }
  if (j.contains("step")) c.step = positive(j.at("step"), "step");
  if (j.contains("max_dimension")) c.max_dimension = as_count(j.at("max_dimension"), "max_dimension", 1);
  return c;
}

}  // namespace gchan::cli
