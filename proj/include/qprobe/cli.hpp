#pragma once

// Command implementations behind the `qprobe` executable. Each command takes a
// resolved JSON config (defaults < config file < flags), validates it fully,
// then computes and writes its outputs with a `.meta.json` sidecar.

#include "qprobe/certify.hpp"
#include "qprobe/checks.hpp"
#include "qprobe/generation.hpp"
#include "qprobe/io.hpp"
#include "qprobe/readout.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace qprobe::cli {

using Json = io::Json;
namespace fs = std::filesystem;

inline constexpr const char* tool_version = "0.1.0";

enum ExitCode : int { ok = 0, check_failed = 1, config_error = 2, numerical_failure = 3 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ParamKind { integer, unsigned_integer, real, text };

struct ParamSpec {
    std::string key;
    ParamKind kind;
    Json default_value;  ///< null means "not set"
    std::string help;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"generate", "readout", "certify", "oracle-check"};
    return names;
}

inline std::vector<ParamSpec> parameters(const std::string& command) {
    using K = ParamKind;
    std::vector<ParamSpec> p{
        {"out", K::text, ".", "output directory"},
        {"seed", K::unsigned_integer, 0, "seed for randomized suites"},
    };
    auto add = [&](std::vector<ParamSpec> more) { p.insert(p.end(), more.begin(), more.end()); };
    const std::vector<ParamSpec> state_keys{
        {"n_qubits", K::integer, nullptr, "system qubits N (default 8, or taken from state_file)"},
        {"state", K::text, nullptr, "css | ghz | oat | oat(<chi_t>) | file (default css)"},
        {"chi_t", K::real, nullptr, "twisting chi*t for the oat state"},
        {"align", K::text, "squeezing", "oat alignment: squeezing | bell | none"},
        {"state_file", K::text, nullptr, "JSON state file for state = file"},
        {"n_theta", K::integer, nullptr, "theta grid size (default 4(N+1))"},
        {"coupling", K::real, 1.0, "uniform probe coupling J"},
    };
    if (command == "generate") {
        add({{"mu", K::integer, 8, "total qubits mu = N + 1 (system plus probe)"},
             {"omega_probe", K::real, 11.0, "probe frequency Omega"},
             {"omega_sys", K::real, 1.0, "system frequency omega"},
             {"g", K::real, 0.05, "flip-flop coupling g"},
             {"t_max", K::real, pi, "end of the chi*t grid"},
             {"points", K::integer, 201, "samples on [0, t_max], endpoints included"},
             {"azimuth_grid", K::integer, 64, "azimuth grid for the Bell-axis optimization"}});
    } else if (command == "readout") {
        add(state_keys);
    } else if (command == "certify") {
        add(state_keys);
        add({{"grid_file", K::text, nullptr, "certify a previously written readout_grid.csv"},
             {"grid_source", K::text, "probe", "grid built from a state: probe | direct"},
             {"derivative", K::text, "spectral", "theta derivative: spectral | central"},
             {"tau", K::real, nullptr, "read-out time for the QFI bound (default (N+1)/2)"}});
    } else if (command == "oracle-check") {
        add({{"mu", K::integer, 8, "total qubits in the generation checks"},
             {"n_qubits", K::integer, 8, "system qubits in the read-out checks"},
             {"trials", K::integer, 5, "random cases per check"},
             {"omega_probe", K::real, 11.0, "probe frequency Omega"},
             {"omega_sys", K::real, 1.0, "system frequency omega"},
             {"g", K::real, 0.05, "flip-flop coupling g"}});
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }
    return p;
}

namespace detail {

inline Json parse_flag_value(const ParamSpec& spec, const std::string& text) {
    auto fail = [&] { return ConfigError("invalid value '" + text + "' for " + spec.key); };
    if (spec.kind == ParamKind::text) return text;
    if (spec.kind == ParamKind::real) {
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(text, &used);
        } catch (const std::exception&) {
            throw fail();
        }
        if (used != text.size()) throw fail();
        return v;
    }
    if (spec.kind == ParamKind::unsigned_integer) {
        std::uint64_t v;
        const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
        if (r.ec != std::errc() || r.ptr != text.data() + text.size()) throw fail();
        return v;
    }
    std::int64_t v;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) throw fail();
    return v;
}

inline void check_type(const ParamSpec& spec, const Json& value) {
    if (value.is_null()) return;
    bool good = false;
    switch (spec.kind) {
        case ParamKind::text: good = value.is_string(); break;
        case ParamKind::real: good = value.is_number(); break;
        case ParamKind::integer: good = value.is_number_integer(); break;
        case ParamKind::unsigned_integer: good = value.is_number_unsigned(); break;
    }
    if (!good) throw ConfigError("config key '" + spec.key + "' has the wrong type");
}

}  // namespace detail

/// Defaults, then the config document, then flag overrides. Unknown keys are rejected.
inline Json resolve_config(const std::string& command, const Json& file_doc,
                           const std::map<std::string, std::string>& overrides = {}) {
    const auto specs = parameters(command);
    Json config = Json::object();
    for (const auto& s : specs) config[s.key] = s.default_value;
    if (!file_doc.is_null()) {
        if (!file_doc.is_object()) throw ConfigError("config must be a JSON object");
        for (const auto& [key, value] : file_doc.items()) {
            const auto it = std::find_if(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.key == key; });
            if (it == specs.end()) throw ConfigError("unknown config key '" + key + "' for " + command);
            detail::check_type(*it, value);
            config[key] = value;
        }
    }
    for (const auto& [key, text] : overrides) {
        const auto it = std::find_if(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.key == key; });
        if (it == specs.end()) throw ConfigError("unknown option '" + key + "' for " + command);
        config[key] = detail::parse_flag_value(*it, text);
    }
    return config;
}

inline Json load_config_file(const fs::path& path) {
    std::string text;
    try {
        text = io::read_text(path);
    } catch (const std::exception&) {
        throw ConfigError("cannot read config file " + path.string());
    }
    try {
        return Json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
}

namespace detail {

inline int get_int(const Json& c, const char* key) { return c.at(key).get<int>(); }
inline double get_real(const Json& c, const char* key) { return c.at(key).get<double>(); }
inline std::optional<double> get_opt_real(const Json& c, const char* key) {
    return c.at(key).is_null() ? std::nullopt : std::optional<double>(c.at(key).get<double>());
}
inline std::optional<std::string> get_opt_text(const Json& c, const char* key) {
    return c.at(key).is_null() ? std::nullopt : std::optional<std::string>(c.at(key).get<std::string>());
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ConfigError(message);
}

inline Json config_for_metadata(const Json& config) {
    Json out = Json::object();
    for (const auto& [key, value] : config.items())
        if (key != "out") out[key] = value.is_number_float() ? io::json_number(value.get<double>()) : value;
    return out;
}

inline std::string eigen_version() {
    return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
           std::to_string(EIGEN_MINOR_VERSION);
}

inline fs::path prepare_out_dir(const Json& config) {
    const fs::path out = config.at("out").get<std::string>();
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw ConfigError("cannot create output directory " + out.string());
    return out;
}

/// Writes `name` and `name.meta.json` next to it.
inline void emit(const fs::path& dir, const std::string& name, const std::string& content, const std::string& command,
                 const Json& config, const Json& conventions, const Json& summary, std::ostream& log) {
    io::write_text(dir / name, content);
    Json meta = Json::object();
    meta["file"] = name;
    meta["command"] = command;
    meta["tool"] = "qprobe";
    meta["version"] = tool_version;
    meta["eigen"] = eigen_version();
    meta["config"] = config_for_metadata(config);
    meta["conventions"] = conventions;
    meta["summary"] = summary;
    io::write_json(dir / (name + ".meta.json"), meta);
    log << (dir / name).string() << "\n";
}

inline Json common_conventions() {
    return Json{{"dicke_order", "descending m; row k carries m = N/2 - k"},
                {"n_label", "n is the collective J_z eigenvalue m = (N_up - N_down)/2"},
                {"number_format", "12 significant digits, LF line endings"}};
}

}  // namespace detail

// ---------------------------------------------------------------- states

/// Where the state under read-out comes from, with an exact QFI when available.
struct ResolvedState {
    SymmetricDensityMatrix rho;
    std::string label;
    std::optional<double> qfi_oracle;
};

inline TwistAlignment parse_alignment(const std::string& s) {
    if (s == "squeezing") return TwistAlignment::squeezing;
    if (s == "bell") return TwistAlignment::bell;
    if (s == "none") return TwistAlignment::none;
    throw ConfigError("align must be squeezing, bell or none (got '" + s + "')");
}

inline const char* to_string(TwistAlignment a) {
    switch (a) {
        case TwistAlignment::squeezing: return "squeezing";
        case TwistAlignment::bell: return "bell";
        default: return "none";
    }
}

namespace detail {

inline complex parse_complex(const Json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError("state file entries must be numbers or [re, im] pairs");
}

}  // namespace detail

/// State file: {"n_qubits": N, "amplitudes": [[re, im], ...]} (Dicke order,
/// normalized) or {"n_qubits": N, "rho": [[[re, im], ...], ...]}.
inline ResolvedState load_state_file(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("state file " + path.string() + " does not exist");
    const Json doc = load_config_file(path);
    detail::require(doc.is_object(), "state file must hold a JSON object");
    for (const auto& [key, value] : doc.items())
        detail::require(key == "n_qubits" || key == "amplitudes" || key == "rho",
                        "unknown key '" + key + "' in state file");
    detail::require(doc.contains("n_qubits") && doc["n_qubits"].is_number_integer(), "state file needs integer n_qubits");
    const int n = doc["n_qubits"].get<int>();
    detail::require(n >= 1 && n <= 512, "state file n_qubits out of range");
    detail::require(doc.contains("amplitudes") != doc.contains("rho"), "state file needs exactly one of amplitudes, rho");
    try {
        if (doc.contains("amplitudes")) {
            const Json& a = doc["amplitudes"];
            detail::require(a.is_array() && a.size() == static_cast<std::size_t>(n + 1), "amplitudes must have N+1 entries");
            StateVector psi{HalfInteger::from_twice(n), ComplexVector(n + 1)};
            for (int k = 0; k <= n; ++k) psi.amplitudes[k] = detail::parse_complex(a[k]);
            detail::require(std::abs(psi.amplitudes.norm() - 1.0) <= 1e-10, "amplitudes must be normalized");
            return {SymmetricDensityMatrix::pure(psi), "file", qfi_oracle_pure(psi)};
        }
        const Json& r = doc["rho"];
        detail::require(r.is_array() && r.size() == static_cast<std::size_t>(n + 1), "rho must have N+1 rows");
        ComplexMatrix rho(n + 1, n + 1);
        for (int i = 0; i <= n; ++i) {
            detail::require(r[i].is_array() && r[i].size() == static_cast<std::size_t>(n + 1), "rho must be square");
            for (int j = 0; j <= n; ++j) rho(i, j) = detail::parse_complex(r[i][j]);
        }
        SymmetricDensityMatrix sym(n, rho);
        const double qfi = qfi_oracle_mixed(sym);
        return {std::move(sym), "file", qfi};
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("state file: ") + e.what());
    }
}

/// Parses css | ghz | oat | oat(<chi_t>) | file into a density matrix.
inline ResolvedState resolve_state(const Json& config) {
    const std::string selector = detail::get_opt_text(config, "state").value_or("css");
    const auto chi_key = detail::get_opt_real(config, "chi_t");
    const auto file = detail::get_opt_text(config, "state_file");
    const auto n_key = config.at("n_qubits").is_null() ? std::nullopt : std::optional<int>(detail::get_int(config, "n_qubits"));
    const auto alignment = parse_alignment(config.at("align").get<std::string>());

    if (selector == "file") {
        detail::require(file.has_value(), "state = file needs state_file");
        auto state = load_state_file(*file);
        detail::require(!n_key || *n_key == state.rho.n_qubits(), "n_qubits does not match the state file");
        detail::require(!chi_key, "chi_t only applies to the oat state");
        state.label = "file:" + fs::path(*file).filename().string();
        return state;
    }
    detail::require(!file, "state_file is only used with state = file");
    const int n = n_key.value_or(8);
    detail::require(n >= 1 && n <= 512, "n_qubits must lie in [1, 512]");
    const auto spin = HalfInteger::from_twice(n);
    auto pure = [&](const StateVector& psi, std::string label) {
        return ResolvedState{SymmetricDensityMatrix::pure(psi), std::move(label), qfi_oracle_pure(psi)};
    };
    if (selector == "css") {
        detail::require(!chi_key, "chi_t only applies to the oat state");
        return pure(coherent_state(spin, 0.5 * pi, 0.0), "css");
    }
    if (selector == "ghz") {
        detail::require(!chi_key, "chi_t only applies to the oat state");
        return pure(ghz_state(spin), "ghz");
    }
    if (selector.rfind("oat", 0) == 0) {
        std::optional<double> chi_t = chi_key;
        if (selector != "oat") {
            detail::require(selector.size() > 5 && selector[3] == '(' && selector.back() == ')',
                            "state must look like oat(<chi_t>)");
            const std::string inner = selector.substr(4, selector.size() - 5);
            const double inline_value = detail::parse_flag_value({"state", ParamKind::real, nullptr, ""}, inner).get<double>();
            detail::require(!chi_t || *chi_t == inline_value, "chi_t given twice with different values");
            chi_t = inline_value;
        }
        detail::require(chi_t.has_value(), "oat state needs chi_t");
        detail::require(std::isfinite(*chi_t), "chi_t must be finite");
        const auto psi = aligned_twisted_state(n, *chi_t, alignment);
        return pure(psi, "oat(" + io::format_number(*chi_t) + "," + to_string(alignment) + ")");
    }
    throw ConfigError("unknown state selector '" + selector + "'");
}

inline int resolve_theta_points(const Json& config, int n_qubits) {
    const int nt = config.at("n_theta").is_null() ? default_theta_points(n_qubits) : detail::get_int(config, "n_theta");
    detail::require(nt >= 2 * n_qubits + 2, "n_theta must be at least 2N+2 = " + std::to_string(2 * n_qubits + 2));
    detail::require(nt <= 1 << 16, "n_theta is too large");
    return nt;
}

inline double resolve_coupling(const Json& config) {
    const double j = detail::get_real(config, "coupling");
    detail::require(std::isfinite(j) && j > 0.0, "coupling must be positive");
    return j;
}

// ---------------------------------------------------------------- generate

struct GenerateSummary {
    double q_exact_max, chi_t_at_q_exact_max, q_oat_max, chi_t_at_q_oat_max;
    std::optional<double> first_bell_crossing;
    double max_abs_deviation, mean_abs_deviation, short_window_max_abs_deviation;
    double fast_oscillation_max, fast_oscillation_mean;
};

inline GenerateSummary summarize(const GenerationSweepResult& r, const std::vector<double>& spread) {
    GenerateSummary s{};
    const auto n = r.times.size();
    const auto ie = std::max_element(r.q_exact.begin(), r.q_exact.end()) - r.q_exact.begin();
    const auto io_ = std::max_element(r.q_oat.begin(), r.q_oat.end()) - r.q_oat.begin();
    s.q_exact_max = r.q_exact[ie];
    s.chi_t_at_q_exact_max = r.times[ie];
    s.q_oat_max = r.q_oat[io_];
    s.chi_t_at_q_oat_max = r.times[io_];
    for (std::size_t i = 0; i < n; ++i)
        if (r.q_exact[i] > 0.0) {
            s.first_bell_crossing = r.times[i];
            break;
        }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::abs(r.q_exact[i] - r.q_oat[i]);
        s.max_abs_deviation = std::max(s.max_abs_deviation, a);
        total += a;
        if (r.times[i] <= 0.2) s.short_window_max_abs_deviation = std::max(s.short_window_max_abs_deviation, a);
    }
    s.mean_abs_deviation = total / n;
    s.fast_oscillation_max = *std::max_element(spread.begin(), spread.end());
    s.fast_oscillation_mean = std::accumulate(spread.begin(), spread.end(), 0.0) / n;
    return s;
}

inline int run_generate(const Json& config, std::ostream& log, std::ostream& err) {
    const int mu = detail::get_int(config, "mu");
    detail::require(mu >= 2 && mu <= 400, "mu must lie in [2, 400]");
    const int points = detail::get_int(config, "points");
    detail::require(points >= 1, "time grid is empty (points must be at least 1)");
    detail::require(points <= 1000000, "points is too large");
    const double t_max = detail::get_real(config, "t_max");
    detail::require(std::isfinite(t_max) && t_max >= 0.0 && (points == 1 || t_max > 0.0),
                    "t_max must be positive (or 0 with a single point)");
    const int azimuth_grid = detail::get_int(config, "azimuth_grid");
    detail::require(azimuth_grid >= 1, "azimuth_grid must be at least 1");
    std::optional<CentralSpinParams> maybe;
    try {
        maybe.emplace(detail::get_real(config, "omega_probe"), detail::get_real(config, "omega_sys"),
                      detail::get_real(config, "g"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const CentralSpinParams params = *maybe;
    detail::require(params.g() != 0.0, "g must be non-zero (time is measured as chi*t)");
    if (params.outside_dispersive_window())
        err << "warning: g/|Delta| = " << io::format_number(params.dispersive_ratio())
            << " exceeds 0.2; the effective twisting picture is not reliable\n";
    std::vector<double> times(points);
    for (int i = 0; i < points; ++i) times[i] = points == 1 ? 0.0 : t_max * i / (points - 1);
    const fs::path dir = detail::prepare_out_dir(config);

    const auto result = sweep(params, mu - 1, times, azimuth_grid);
    io::CsvTable table({"chi_t", "q_exact", "q_oat", "azimuth_star"});
    for (std::size_t i = 0; i < times.size(); ++i)
        table.row({result.times[i], result.q_exact[i], result.q_oat[i], result.azimuth_star[i]});

    const auto s = summarize(result, fast_oscillation_spread(params, mu - 1, times, azimuth_grid));
    Json summary{{"detuning", io::json_number(params.detuning())},
                 {"chi", io::json_number(params.chi())},
                 {"dispersive_ratio", io::json_number(params.dispersive_ratio())},
                 {"outside_dispersive_window", params.outside_dispersive_window()},
                 {"q_exact_max", io::json_number(s.q_exact_max)},
                 {"chi_t_at_q_exact_max", io::json_number(s.chi_t_at_q_exact_max)},
                 {"q_oat_max", io::json_number(s.q_oat_max)},
                 {"chi_t_at_q_oat_max", io::json_number(s.chi_t_at_q_oat_max)},
                 {"first_bell_crossing_chi_t", io::json_number(s.first_bell_crossing)},
                 {"max_abs_deviation", io::json_number(s.max_abs_deviation)},
                 {"mean_abs_deviation", io::json_number(s.mean_abs_deviation)},
                 {"short_window_max_abs_deviation", io::json_number(s.short_window_max_abs_deviation)},
                 {"fast_oscillation_max", io::json_number(s.fast_oscillation_max)},
                 {"fast_oscillation_mean", io::json_number(s.fast_oscillation_mean)}};
    Json conventions = detail::common_conventions();
    conventions["detuning"] = "Delta = Omega - omega, chi = g^2 / Delta";
    conventions["effective_sign"] =
        "second-order term -chi [X, X^dag]: probe-up sector -chi J_z^2, probe-down sector +chi J_z^2";
    conventions["time_axis"] = "chi*t; exact path evolved for t = chi_t / chi in the lab frame";
    conventions["initial_state"] = "|+x> on all mu qubits";
    conventions["bell_axis"] = "E maximized per path and per time over a uniform equatorial azimuth grid";
    conventions["q_definition"] = "Q = log2(E 2^mu)";
    conventions["azimuth_star"] = "optimal azimuth of the exact path";
    conventions["time_grid"] = "points samples on [0, t_max], endpoints included";
    conventions["fast_oscillation"] =
        "max - min of q_exact over one period 2 pi / |Delta| after each grid time, 16 samples; max and mean over the grid";
    detail::emit(dir, "generate.csv", table.str(), "generate", config, conventions, summary, log);
    return ok;
}

// ---------------------------------------------------------------- readout

inline std::string grid_csv(const ReadoutGrid& grid) {
    io::CsvTable table({"theta", "n", "p"});
    for (int j = 0; j < grid.n_theta(); ++j)
        for (int k = 0; k <= grid.n_qubits; ++k) table.row({grid.theta[j], 0.5 * grid.n_qubits - k, grid.p(k, j)});
    return table.str();
}

inline int run_readout(const Json& config, std::ostream& log, std::ostream&) {
    const auto state = resolve_state(config);
    const int n = state.rho.n_qubits();
    const int nt = resolve_theta_points(config, n);
    const double j = resolve_coupling(config);
    const fs::path dir = detail::prepare_out_dir(config);

    const auto run = simulate_probe_run(state.rho, nt, j);
    const auto direct = direct_grid(state.rho, nt);
    const double deviation = (run.grid.p - direct.p).cwiseAbs().maxCoeff();

    io::CsvTable samples({"theta", "tau", "re_a", "im_a", "P"});
    for (int t = 0; t < nt; ++t)
        for (const auto& s : run.samples[t]) samples.row({run.grid.theta[t], s.tau, s.a.real(), s.a.imag(), s.P});

    const int row = central_row(n);
    const auto spectrum = theta_spectrum(run.grid.p.row(row).transpose());
    io::CsvTable spec_table({"frequency", "magnitude"});
    for (const auto& line : spectrum) spec_table.row({double(line.frequency), line.magnitude});
    std::vector<SpectrumLine> peaks;
    for (const auto& line : spectrum)
        if (line.frequency != 0) peaks.push_back(line);
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const SpectrumLine& a, const SpectrumLine& b) { return a.magnitude > b.magnitude; });
    Json top = Json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(2, peaks.size()); ++i)
        top.push_back(Json{{"frequency", peaks[i].frequency}, {"magnitude", io::json_number(peaks[i].magnitude)}});

    Json summary{{"state", state.label},
                 {"n_qubits", n},
                 {"n_theta", nt},
                 {"provenance", to_string(run.grid.provenance)},
                 {"max_reconstruction_residual", io::json_number(run.max_residual)},
                 {"max_deviation_from_direct", io::json_number(deviation)},
                 {"spectrum_row_n", io::json_number(0.5 * n - row)},
                 {"dominant_nonzero_frequencies", top}};
    Json conventions = detail::common_conventions();
    conventions["local_operations"] = "exp(-i pi/2 J_x) exp(-i theta J_z), applied before read-out";
    conventions["theta_grid"] = "n_theta uniform points on [0, 2 pi)";
    conventions["tau"] = "tau = 2 J (N+1) t / pi; samples at tau = 0..N";
    conventions["coherence"] = "a(tau) = sum_n p_n exp(-2 pi i tau n / (N+1)), so a(0) = 1";
    conventions["population"] = "P is the probe up population, 1/2 for a |+x> probe";
    conventions["spectrum"] = "|(1/n_theta) sum_j p_n(theta_j) exp(-i f theta_j)| for the row n closest to 0";
    conventions["oat_alignment"] = config.at("align");
    detail::emit(dir, "readout_grid.csv", grid_csv(run.grid), "readout", config, conventions, summary, log);
    detail::emit(dir, "probe_samples.csv", samples.str(), "readout", config, conventions, summary, log);
    detail::emit(dir, "spectrum.csv", spec_table.str(), "readout", config, conventions, summary, log);
    return ok;
}

// ---------------------------------------------------------------- certify

inline Derivative parse_derivative(const std::string& s) {
    if (s == "spectral") return Derivative::spectral;
    if (s == "central") return Derivative::central;
    throw ConfigError("derivative must be spectral or central (got '" + s + "')");
}

inline Json report_json(const CertificationReport& r, const std::string& input) {
    Json out = Json::object();
    out["input"] = input;
    out["n_qubits"] = r.n_qubits;
    out["provenance"] = to_string(r.provenance);
    out["derivative"] = to_string(r.derivative);
    out["theta_index"] = r.theta_index;
    out["theta_star"] = io::json_number(r.theta_star);
    out["xi2"] = io::json_number(r.xi2);
    out["fisher"] = io::json_number(r.fisher);
    out["fisher_excluded_bins"] = r.fisher_excluded_bins;
    out["tau"] = io::json_number(r.tau);
    out["qfi_bound"] = io::json_number(r.qfi_bound);
    out["qfi_oracle"] = io::json_number(r.qfi_oracle);
    out["bell_E"] = io::json_number(r.bell.e);
    out["bell_Q"] = io::json_number(r.bell.q);
    out["bell_reason"] = r.bell.reason.empty() ? Json(nullptr) : Json(r.bell.reason);
    out["bell_rows_used"] = r.bell.rows_used;
    out["bell_resolution"] = io::json_number(r.bell.resolution);
    out["depth_bound"] = r.depth_bound;
    const double squeezing_bound = std::isinf(r.xi2) ? 0.0 : r.n_qubits / r.xi2;
    out["squeezing_below_fisher"] = squeezing_bound <= r.fisher + 1e-8;
    out["hierarchy_ok"] = r.qfi_oracle ? Json(r.hierarchy_ok) : Json(nullptr);
    out["cramer_rao"] = io::json_number(r.cramer_rao);
    return out;
}

inline int run_certify(const Json& config, std::ostream& log, std::ostream&) {
    const auto derivative = parse_derivative(config.at("derivative").get<std::string>());
    const auto tau = detail::get_opt_real(config, "tau");
    detail::require(!tau || std::isfinite(*tau), "tau must be finite");
    const std::string source = config.at("grid_source").get<std::string>();
    detail::require(source == "probe" || source == "direct", "grid_source must be probe or direct");

    std::optional<ReadoutGrid> grid;
    std::optional<double> qfi_oracle;
    std::string input;
    if (const auto grid_file = detail::get_opt_text(config, "grid_file")) {
        for (const char* key : {"state", "state_file", "chi_t", "n_qubits", "n_theta"})
            detail::require(config.at(key).is_null(), std::string("grid_file cannot be combined with ") + key);
        detail::require(fs::exists(*grid_file), "grid file " + *grid_file + " does not exist");
        Provenance provenance = Provenance::direct;
        const fs::path meta_path = *grid_file + ".meta.json";
        if (fs::exists(meta_path)) {
            const Json meta = load_config_file(meta_path);
            if (meta.contains("summary") && meta["summary"].value("provenance", "") == "reconstructed-from-probe")
                provenance = Provenance::reconstructed_from_probe;
        }
        try {
            grid = io::parse_grid_csv(io::read_text(*grid_file), provenance);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("grid file: " + std::string(e.what()));
        }
        input = "grid_file:" + fs::path(*grid_file).filename().string();
    } else {
        const auto state = resolve_state(config);
        const int nt = resolve_theta_points(config, state.rho.n_qubits());
        const double j = resolve_coupling(config);
        qfi_oracle = state.qfi_oracle;
        input = "state:" + state.label;
        grid = source == "probe" ? simulate_probe_run(state.rho, nt, j).grid : direct_grid(state.rho, nt);
    }
    const fs::path dir = detail::prepare_out_dir(config);
    const auto report = certify(*grid, qfi_oracle, CertifyOptions{derivative, tau});

    Json conventions = detail::common_conventions();
    conventions["working_point"] = "theta* = argmin xi2; ties (relative 1e-9, or all infinite) go to the larger Fisher";
    conventions["squeezing"] = "xi2 = N Var(J_z) / (d<J_z>/dtheta)^2, infinite when |slope| < 1e-10";
    conventions["derivative"] = to_string(derivative);
    conventions["fisher_floor"] = "bins with p < 1e-12 are excluded";
    conventions["qfi_bound"] = "Re(a' e^{-i phi})^2 / (1 - |a|^2) + Im(a' e^{-i phi})^2 at tau";
    conventions["bell"] = "E = |rho_{N/2,-N/2}|^2 from the theta Fourier line at frequency N, averaged over rows";
    conventions["depth"] = "largest k with F > s k^2 + r^2, N = s k + r";
    conventions["cramer_rao"] = "1 / qfi_bound, null when qfi_bound <= 1e-12";
    conventions["bell_resolution"] = "E at or below (1e-14)^2 sum(1/|c_n|) / sum(|c_n|) is reported as null";
    detail::emit(dir, "certify.json", report_json(report, input).dump(2) + "\n", "certify", config, conventions,
                 Json{{"n_theta", grid->n_theta()}}, log);
    return ok;
}

// ---------------------------------------------------------------- oracle-check

inline int run_oracle_check(const Json& config, std::ostream& log, std::ostream& err) {
    checks::OracleSuiteConfig suite;
    suite.mu = detail::get_int(config, "mu");
    suite.n_qubits = detail::get_int(config, "n_qubits");
    suite.trials = detail::get_int(config, "trials");
    suite.seed = config.at("seed").get<std::uint64_t>();
    suite.omega_probe = detail::get_real(config, "omega_probe");
    suite.omega_sys = detail::get_real(config, "omega_sys");
    suite.g = detail::get_real(config, "g");
    detail::require(suite.trials <= 1000, "trials is too large");
    try {
        checks::validate(suite);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const fs::path dir = detail::prepare_out_dir(config);
    const auto results = checks::run_oracle_suite(suite);

    Json list = Json::array();
    double worst = 0.0;
    for (const auto& r : results) {
        worst = std::max(worst, r.max_deviation);
        list.push_back(Json{{"name", r.name},
                            {"max_deviation", io::json_number(r.max_deviation)},
                            {"tolerance", io::json_number(r.tolerance)},
                            {"cases", r.cases},
                            {"pass", r.pass}});
        if (!r.pass)
            err << "check " << r.name << " failed: deviation " << io::format_number(r.max_deviation) << " > "
                << io::format_number(r.tolerance) << "\n";
    }
    const bool pass = checks::all_pass(results);
    Json report{{"pass", pass}, {"max_deviation", io::json_number(worst)}, {"checks", list}};
    Json conventions = detail::common_conventions();
    conventions["oracle"] = "brute force on 2^mu (generation) and 2^N (read-out) qubit states";
    conventions["probe_qubit"] = "qubit 0, bit 0 = up";
    conventions["random_streams"] = "mt19937_64 seeded with seed, checks drawn in a fixed order";
    detail::emit(dir, "oracle_check.json", report.dump(2) + "\n", "oracle-check", config, conventions,
                 Json{{"pass", pass}}, log);
    return pass ? ok : check_failed;
}

// ---------------------------------------------------------------- dispatch

/// Resolves the config and runs the command, mapping failures to exit codes.
inline int run(const std::string& command, const Json& file_doc, const std::map<std::string, std::string>& overrides,
               std::ostream& log, std::ostream& err) {
    try {
        const Json config = resolve_config(command, file_doc, overrides);
        if (command == "generate") return run_generate(config, log, err);
        if (command == "readout") return run_readout(config, log, err);
        if (command == "certify") return run_certify(config, log, err);
        return run_oracle_check(config, log, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const Json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical_failure;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical_failure;
    }
}

}  // namespace qprobe::cli
