#pragma once

// Run configuration: the key-value schema that drives the CLI. A config is
// a flat file with sections; every key is optional, so the empty file is a
// valid hyperfine-refill run at nominal cell conditions. Keys that are not
// in the schema are rejected in strict mode and reported as warnings
// otherwise. Per-beam knobs override the protocol presets only when they
// appear explicitly, which lets one config drive all three measurements of
// a sweep without forcing the polarized run to share the strong pump.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rbrelax/kvconfig.hpp"
#include "rbrelax/level_scheme.hpp"
#include "rbrelax/protocol.hpp"
#include "rbrelax/vapor.hpp"

namespace rbrelax {

struct SweepLists {
    std::vector<double> densities_cm3;
    std::vector<double> temperatures_k; // alternative sweep axis; converted per point
    std::vector<double> bz_gauss;
    std::vector<double> delays_s;
};

/// Cell geometry is informational: it feeds the diffusion-rate estimate and
/// the run report, never the dynamics (gamma0_s is always explicit).
struct CellGeometry {
    std::optional<double> radius_cm;
    std::optional<double> length_cm;
    std::optional<double> beam_diameter_mm;
    std::optional<double> diffusion_d0_cm2_s;
};

struct RunConfig {
    AtomData atom;
    std::string constants_file; // empty when the built-in constants are used
    Protocol protocol = Protocol::HyperfineRefill;

    // cell, collisions, calibration: shared by every protocol
    double temperature_k = 333.0;
    double density_cm3 = 3.8e11;
    double sigma_se_cm2 = 2.05e-14;
    double gamma0_s = 50.0;
    double buffer_pressure_torr = 30.0;
    double broadening_mhz_per_torr = 4.9;
    double rabi_rad_per_sqrt_mw = 1.2e7;

    // per-protocol knobs: set only when the config named them explicitly
    std::optional<double> pump_power_mw;
    std::optional<double> pump_duration_s;
    std::optional<double> probe_power_mw;
    std::optional<double> probe_period_s;
    std::optional<double> probe_pulse_s;
    std::optional<double> probe_settle_s;
    std::optional<double> trace_duration_s;
    std::optional<double> bz_gauss;
    std::optional<double> residual_bz_gauss;
    std::optional<double> field_delay_s;

    // numerics
    std::optional<double> refresh_interval_s;
    std::optional<double> fixed_point_tol;
    std::optional<double> steady_residual_tol;
    std::optional<int> fixed_point_cap;
    std::optional<int> velocity_groups;

    CellGeometry cell;
    SweepLists sweep;
    std::string output_dir = "out";
    long seed = 0; // reserved for synthetic-noise utilities; the engine is deterministic

    /// Protocol preset plus whatever the config overrode.
    ExperimentSpec spec_for(Protocol p) const {
        ExperimentSpec s = ExperimentSpec::for_protocol(p);
        s.temperature_k = temperature_k;
        s.density_cm3 = density_cm3;
        s.sigma_se_cm2 = sigma_se_cm2;
        s.gamma0_s = gamma0_s;
        s.buffer_pressure_torr = buffer_pressure_torr;
        s.broadening_mhz_per_torr = broadening_mhz_per_torr;
        s.rabi_rad_per_sqrt_mw = rabi_rad_per_sqrt_mw;
        if (pump_power_mw) s.pump_power_mw = *pump_power_mw;
        if (pump_duration_s) s.pump_duration_s = *pump_duration_s;
        if (probe_power_mw) s.probe_power_mw = *probe_power_mw;
        if (probe_period_s) s.probe_period_s = *probe_period_s;
        if (probe_pulse_s) s.probe_pulse_s = *probe_pulse_s;
        if (probe_settle_s) s.probe_settle_s = *probe_settle_s;
        if (trace_duration_s) s.trace_duration_s = *trace_duration_s;
        if (bz_gauss) s.bz_gauss = *bz_gauss;
        if (residual_bz_gauss) s.residual_bz_gauss = *residual_bz_gauss;
        if (field_delay_s) s.field_delay_s = *field_delay_s;
        if (refresh_interval_s) s.refresh_interval_s = *refresh_interval_s;
        if (fixed_point_tol) s.fixed_point_tol = *fixed_point_tol;
        if (steady_residual_tol) s.steady_residual_tol = *steady_residual_tol;
        if (fixed_point_cap) s.fixed_point_cap = *fixed_point_cap;
        if (velocity_groups) s.velocity_groups = *velocity_groups;
        return s;
    }

    ExperimentSpec spec() const { return spec_for(protocol); }

    /// Density axis of a sweep: the density list, the temperature list
    /// converted through the vapor-pressure curve, or the single configured
    /// density when no sweep was requested.
    std::vector<double> sweep_densities() const {
        if (!sweep.densities_cm3.empty()) return sweep.densities_cm3;
        if (!sweep.temperatures_k.empty()) {
            std::vector<double> out;
            out.reserve(sweep.temperatures_k.size());
            for (double t : sweep.temperatures_k) out.push_back(density_from_temperature(t));
            return out;
        }
        return {density_cm3};
    }

    std::vector<double> sweep_fields() const {
        return sweep.bz_gauss.empty() ? std::vector<double>{spec().bz_gauss} : sweep.bz_gauss;
    }
};

/// Default directory for shipped configs: the environment variable wins so
/// installed copies can point elsewhere; the build tree location is baked
/// in as the fallback.
inline std::string default_config_dir() {
    if (const char* env = std::getenv("RBRELAX_CONFIG_DIR"); env && *env) return env;
#ifdef RBRELAX_CONFIG_DIR
    return RBRELAX_CONFIG_DIR;
#else
    return ".";
#endif
}

namespace detail {

inline double positive_or_throw(const KeyValueConfig& cfg, const std::string& key, double v) {
    if (!(v > 0.0)) {
        const auto* e = cfg.entry(key);
        throw ConfigError("'" + key + "' must be positive", e ? e->line : 0, e ? e->col : 0);
    }
    return v;
}

inline std::optional<double> opt_double(const KeyValueConfig& cfg, const std::string& key) {
    if (!cfg.has(key)) return std::nullopt;
    return cfg.get_double(key);
}

inline std::vector<double> positive_list(const KeyValueConfig& cfg, const std::string& key) {
    std::vector<double> v = cfg.get_double_list(key);
    const auto* e = cfg.entry(key);
    if (v.empty()) throw ConfigError("sweep list '" + key + "' is empty", e->line, e->col);
    for (double x : v)
        if (!(x > 0.0))
            throw ConfigError("sweep list '" + key + "' has a non-positive entry", e->line, e->col);
    return v;
}

} // namespace detail

/// Parse a run config. `base_dir` anchors relative constants_file paths.
/// In strict mode any unconsumed key is an error; otherwise each lands in
/// `warnings`. Constraint violations surface as ConfigError with the source
/// position, or as the named invalid_argument thrown by ExperimentSpec.
inline RunConfig parse_run_config(const std::string& text, const std::string& base_dir = ".",
                                  bool strict = true,
                                  std::vector<std::string>* warnings = nullptr) {
    KeyValueConfig cfg = KeyValueConfig::parse(text);
    RunConfig rc;

    if (cfg.has("constants_file")) {
        std::filesystem::path p = cfg.get_string("constants_file");
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        rc.constants_file = p.string();
        std::ifstream is(rc.constants_file);
        if (!is) throw std::runtime_error(rc.constants_file + ": cannot open constants file");
        std::stringstream ss;
        ss << is.rdbuf();
        rc.atom = load_atom_data(KeyValueConfig::parse(ss.str()));
    }

    if (cfg.has("cell.temperature_k") && cfg.has("cell.density_cm3")) {
        const auto* e = cfg.entry("cell.density_cm3");
        throw ConfigError("give either cell.temperature_k or cell.density_cm3, not both",
                          e->line, e->col);
    }
    if (cfg.has("cell.temperature_k")) {
        rc.temperature_k = cfg.get_double("cell.temperature_k");
        rc.density_cm3 = density_from_temperature(rc.temperature_k); // throws outside 250-450 K
    } else if (cfg.has("cell.density_cm3")) {
        rc.density_cm3 =
            detail::positive_or_throw(cfg, "cell.density_cm3", cfg.get_double("cell.density_cm3"));
    }
    rc.buffer_pressure_torr = cfg.get_double("cell.buffer_pressure_torr", rc.buffer_pressure_torr);
    rc.broadening_mhz_per_torr =
        cfg.get_double("cell.broadening_mhz_per_torr", rc.broadening_mhz_per_torr);
    rc.cell.radius_cm = detail::opt_double(cfg, "cell.radius_cm");
    rc.cell.length_cm = detail::opt_double(cfg, "cell.length_cm");
    rc.cell.beam_diameter_mm = detail::opt_double(cfg, "cell.beam_diameter_mm");
    rc.cell.diffusion_d0_cm2_s = detail::opt_double(cfg, "cell.diffusion_d0_cm2_s");

    rc.gamma0_s = cfg.get_double("relaxation.gamma0_s", rc.gamma0_s);
    rc.sigma_se_cm2 = cfg.get_double("relaxation.sigma_se_cm2", rc.sigma_se_cm2);

    if (cfg.has("protocol.tag")) rc.protocol = protocol_from_tag(cfg.get_string("protocol.tag"));
    rc.trace_duration_s = detail::opt_double(cfg, "protocol.trace_duration_s");

    rc.rabi_rad_per_sqrt_mw =
        cfg.get_double("pump.rabi_rad_per_sqrt_mw", rc.rabi_rad_per_sqrt_mw);
    rc.pump_power_mw = detail::opt_double(cfg, "pump.power_mw");
    rc.pump_duration_s = detail::opt_double(cfg, "pump.duration_s");
    rc.probe_power_mw = detail::opt_double(cfg, "probe.power_mw");
    rc.probe_period_s = detail::opt_double(cfg, "probe.period_s");
    rc.probe_pulse_s = detail::opt_double(cfg, "probe.pulse_s");
    rc.probe_settle_s = detail::opt_double(cfg, "probe.settle_s");
    rc.bz_gauss = detail::opt_double(cfg, "field.bz_gauss");
    rc.residual_bz_gauss = detail::opt_double(cfg, "field.residual_bz_gauss");
    rc.field_delay_s = detail::opt_double(cfg, "field.delay_s");

    if (cfg.has("sweep.densities_cm3"))
        rc.sweep.densities_cm3 = detail::positive_list(cfg, "sweep.densities_cm3");
    if (cfg.has("sweep.temperatures_k"))
        rc.sweep.temperatures_k = detail::positive_list(cfg, "sweep.temperatures_k");
    if (!rc.sweep.densities_cm3.empty() && !rc.sweep.temperatures_k.empty()) {
        const auto* e = cfg.entry("sweep.temperatures_k");
        throw ConfigError("give either sweep.densities_cm3 or sweep.temperatures_k, not both",
                          e->line, e->col);
    }
    if (cfg.has("sweep.bz_gauss")) rc.sweep.bz_gauss = detail::positive_list(cfg, "sweep.bz_gauss");
    if (cfg.has("sweep.delays_s")) {
        rc.sweep.delays_s = cfg.get_double_list("sweep.delays_s");
        const auto* e = cfg.entry("sweep.delays_s");
        if (rc.sweep.delays_s.empty())
            throw ConfigError("sweep list 'sweep.delays_s' is empty", e->line, e->col);
        for (double d : rc.sweep.delays_s)
            if (d < 0.0)
                throw ConfigError("sweep list 'sweep.delays_s' has a negative entry", e->line,
                                  e->col);
    }

    rc.refresh_interval_s = detail::opt_double(cfg, "numerics.refresh_interval_s");
    rc.fixed_point_tol = detail::opt_double(cfg, "numerics.fixed_point_tol");
    rc.steady_residual_tol = detail::opt_double(cfg, "numerics.steady_residual_tol");
    if (cfg.has("numerics.fixed_point_cap")) rc.fixed_point_cap = cfg.get_int("numerics.fixed_point_cap");
    if (cfg.has("numerics.velocity_groups")) rc.velocity_groups = cfg.get_int("numerics.velocity_groups");

    rc.output_dir = cfg.get_string("output.dir", rc.output_dir);
    rc.seed = cfg.get_int("output.seed", 0);

    const std::vector<std::string> leftovers = cfg.unconsumed();
    if (!leftovers.empty()) {
        if (strict) throw std::runtime_error("unknown config key: " + leftovers.front());
        if (warnings)
            for (const std::string& k : leftovers) warnings->push_back("unknown config key: " + k);
    }

    rc.spec().validate(); // surfaces cross-field constraint violations by name
    return rc;
}

inline RunConfig load_run_config(const std::string& path, bool strict = true,
                                 std::vector<std::string>* warnings = nullptr) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error(path + ": cannot open config");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str(), std::filesystem::path(path).parent_path().string(), strict,
                            warnings);
}

} // namespace rbrelax
