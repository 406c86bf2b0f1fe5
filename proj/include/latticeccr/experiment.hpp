#pragma once

// Experiment configuration, runners and dataset emission for the CLI.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "latticeccr/dynamics.hpp"
#include "latticeccr/spectral.hpp"

namespace latticeccr {

inline constexpr const char* kSoftwareVersion = "0.1.0";

enum class Experiment { Spectrum, Sweep, Dynamics, CcrCheck, Fig1, Fig2, Fig3, Fig4, Fig5 };

inline const std::array<std::pair<Experiment, const char*>, 9> kExperimentNames{{
    {Experiment::Spectrum, "spectrum"},
    {Experiment::Sweep, "sweep"},
    {Experiment::Dynamics, "dynamics"},
    {Experiment::CcrCheck, "ccr-check"},
    {Experiment::Fig1, "fig1"},
    {Experiment::Fig2, "fig2"},
    {Experiment::Fig3, "fig3"},
    {Experiment::Fig4, "fig4"},
    {Experiment::Fig5, "fig5"},
}};

inline std::string to_string(Experiment e) {
    for (const auto& [value, name] : kExperimentNames) {
        if (value == e) return name;
    }
    return "unknown";
}

inline std::optional<Experiment> experiment_from_string(const std::string& name) {
    for (const auto& [value, label] : kExperimentNames) {
        if (name == label) return value;
    }
    return std::nullopt;
}

enum class PacketKind { Gaussian, Delta };

struct PacketConfig {
    PacketKind kind = PacketKind::Gaussian;
    long n0 = 0;
    double b = 0.2;
    double k0 = 0.0;

    bool operator==(const PacketConfig&) const = default;
};

struct Tolerances {
    double leakage_warn = 1e-10;
    double leakage_fail = 1e-6;
    double oracle = 1e-6;         // |x_mean - x_exact| <= oracle * (1 + |x_mean|)
    double unitarity = 1e-10;
    double ccr_identity = 1e-10;

    bool operator==(const Tolerances&) const = default;
};

/// Fully resolved configuration: every field holds a concrete value once
/// parsed. Only the fields used by `experiment` are serialized.
struct ExperimentConfig {
    Experiment experiment = Experiment::Spectrum;
    int half_width = 100;
    double spacing = 1.0;
    HoppingSpec hopping{};
    PotentialSpec potential{};
    PacketConfig packet{};
    double t_max = 0.0;
    double dt = 0.0;
    std::string output_path;
    std::string output_format = "csv";
    Tolerances tolerances{};

    double c = 0.01;
    std::vector<double> c_values{1.0, 0.1, 0.01};
    double force = 0.4;
    std::vector<double> b_values{0.2, 0.02};
    std::vector<long> n0_values{20, 30, 40};
    std::vector<double> ac14_values{};
    std::vector<double> a_values{1.0};
    int states = 20;
    int margin = 25;
    long ws_site = -41;

    bool operator==(const ExperimentConfig&) const = default;
};

/// 30 evenly spaced values of a c^{1/4} on [0.1, 3].
inline std::vector<double> default_ac14_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 30; ++i) grid.push_back(0.1 + (3.0 - 0.1) * i / 29.0);
    return grid;
}

namespace detail {

using json = nlohmann::json;

inline const std::map<std::string, std::set<Experiment>>& key_usage() {
    using E = Experiment;
    static const std::set<E> all{E::Spectrum, E::Sweep, E::Dynamics, E::CcrCheck, E::Fig1,
                                 E::Fig2, E::Fig3, E::Fig4, E::Fig5};
    static const std::map<std::string, std::set<E>> usage{
        {"experiment", all},
        {"lattice", all},
        {"output", all},
        {"tolerances", all},
        {"hopping", {E::Spectrum, E::Sweep, E::Dynamics, E::Fig1, E::Fig2, E::Fig3, E::Fig4, E::Fig5}},
        {"potential", {E::Spectrum, E::Dynamics}},
        {"packet", {E::Dynamics, E::CcrCheck, E::Fig4, E::Fig5}},
        {"time", {E::Dynamics, E::Fig4, E::Fig5}},
        {"c", {E::Sweep, E::Fig1, E::Fig5}},
        {"c_values", {E::Fig2}},
        {"F", {E::Fig3, E::Fig4}},
        {"b_values", {E::Fig4}},
        {"n0_values", {E::Fig5}},
        {"ac14_values", {E::Fig1}},
        {"a_values", {E::Sweep}},
        {"states", {E::Sweep, E::Fig1}},
        {"W", {E::CcrCheck}},
        {"ws_site", {E::Fig3}},
    };
    return usage;
}

inline bool uses(Experiment e, const std::string& key) { return key_usage().at(key).count(e) > 0; }

inline bool is_dynamics(Experiment e) {
    return e == Experiment::Dynamics || e == Experiment::Fig4 || e == Experiment::Fig5;
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(path, path + ": expected an object");
    for (const auto& item : obj.items()) {
        bool found = false;
        for (const char* name : allowed) found = found || item.key() == name;
        if (!found) {
            const std::string field = path.empty() ? item.key() : path + "." + item.key();
            throw ConfigError(field, "unknown key '" + field + "'");
        }
    }
}

template <typename T>
T read(const json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    const std::string field = path.empty() ? key : path + "." + key;
    try {
        if constexpr (std::is_integral_v<T>) {
            const json& v = obj.at(key);
            if (!v.is_number_integer()) throw ConfigError(field, field + ": expected an integer");
            return v.get<T>();
        } else {
            return obj.at(key).get<T>();
        }
    } catch (const json::exception&) {
        throw ConfigError(field, field + ": wrong type");
    }
}

inline void require(bool ok, const std::string& field, const std::string& constraint) {
    if (!ok) throw ConfigError(field, field + ": " + constraint);
}

inline HoppingSpec parse_hopping(const json& j) {
    reject_unknown(j, "hopping", {"kind", "t0", "tn"});
    const auto kind = read<std::string>(j, "kind", "hopping", "quadratic");
    if (kind == "quadratic" || kind == "cosine") {
        require(!j.contains("t0") && !j.contains("tn"), "hopping.t0",
                "t0/tn apply only to custom hopping");
        return kind == "quadratic" ? HoppingSpec::quadratic() : HoppingSpec::cosine();
    }
    require(kind == "custom", "hopping.kind", "must be quadratic, cosine or custom");
    require(j.contains("tn"), "hopping.tn", "required for custom hopping");
    return HoppingSpec::custom(read<double>(j, "t0", "hopping", 0.0),
                               read<std::vector<double>>(j, "tn", "hopping", {}));
}

inline PotentialSpec parse_potential(const json& j) {
    reject_unknown(j, "potential", {"kind", "V0", "F", "c", "values"});
    require(j.contains("kind"), "potential.kind", "required");
    const auto kind = read<std::string>(j, "kind", "potential", "");
    auto only = [&](const char* key) {
        for (const char* k : {"V0", "F", "c", "values"}) {
            if (std::string(k) != key && j.contains(k)) {
                throw ConfigError(std::string("potential.") + k,
                                  std::string("potential.") + k + ": not a parameter of " + kind + " potentials");
            }
        }
    };
    if (kind == "constant") {
        only("V0");
        return PotentialSpec::constant(read<double>(j, "V0", "potential", 0.0));
    }
    if (kind == "linear") {
        only("F");
        require(j.contains("F"), "potential.F", "required for linear potentials");
        return PotentialSpec::linear(read<double>(j, "F", "potential", 0.0));
    }
    if (kind == "harmonic") {
        only("c");
        require(j.contains("c"), "potential.c", "required for harmonic potentials");
        const double c = read<double>(j, "c", "potential", 0.0);
        require(c > 0.0, "potential.c", "must be positive");
        return PotentialSpec::harmonic(c);
    }
    require(kind == "custom", "potential.kind", "must be constant, linear, harmonic or custom");
    only("values");
    require(j.contains("values"), "potential.values", "required for custom potentials");
    return PotentialSpec::custom(read<std::vector<double>>(j, "values", "potential", {}));
}

inline json hopping_to_json(const HoppingSpec& h) {
    switch (h.kind) {
        case HoppingKind::Quadratic: return {{"kind", "quadratic"}};
        case HoppingKind::NearestNeighborCosine: return {{"kind", "cosine"}};
        case HoppingKind::Custom: return {{"kind", "custom"}, {"t0", h.t0}, {"tn", h.tn}};
    }
    return {};
}

inline json potential_to_json(const PotentialSpec& p) {
    switch (p.kind) {
        case PotentialKind::Constant: return {{"kind", "constant"}, {"V0", p.strength}};
        case PotentialKind::Linear: return {{"kind", "linear"}, {"F", p.strength}};
        case PotentialKind::Harmonic: return {{"kind", "harmonic"}, {"c", p.strength}};
        case PotentialKind::Custom: return {{"kind", "custom"}, {"values", p.values}};
    }
    return {};
}

}  // namespace detail

/// Validates a JSON document and applies the per-experiment defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
    using detail::read;
    using detail::require;
    detail::reject_unknown(doc, "", {"experiment", "lattice", "hopping", "potential", "packet", "time", "output",
                                     "tolerances", "c", "c_values", "F", "b_values", "n0_values", "ac14_values",
                                     "a_values", "states", "W", "ws_site"});
    require(doc.contains("experiment"), "experiment", "required");
    const auto name = read<std::string>(doc, "experiment", "", "");
    const auto exp = experiment_from_string(name);
    if (!exp) throw ConfigError("experiment", "experiment: unknown experiment '" + name + "'");
    for (const auto& item : doc.items()) {
        if (!detail::uses(*exp, item.key())) {
            throw ConfigError(item.key(), "key '" + item.key() + "' is not used by experiment " + name);
        }
    }

    ExperimentConfig cfg;
    cfg.experiment = *exp;
    const bool dynamic = detail::is_dynamics(*exp);

    const nlohmann::json lattice = doc.value("lattice", nlohmann::json::object());
    detail::reject_unknown(lattice, "lattice", {"M", "a"});
    cfg.half_width = read<int>(lattice, "M", "lattice", dynamic ? 128 : 100);
    cfg.spacing = read<double>(lattice, "a", "lattice", 1.0);
    require(cfg.half_width >= 1, "lattice.M", "must be >= 1");
    require(cfg.spacing > 0.0 && std::isfinite(cfg.spacing), "lattice.a", "spacing a must be positive");

    if (doc.contains("hopping")) cfg.hopping = detail::parse_hopping(doc.at("hopping"));
    if (cfg.hopping.kind == HoppingKind::Custom) {
        require(static_cast<long>(cfg.hopping.tn.size()) <= 2L * cfg.half_width, "hopping.tn",
                "range exceeds 2M");
    }

    if (detail::uses(*exp, "potential")) {
        require(doc.contains("potential"), "potential", "required for experiment " + name);
        cfg.potential = detail::parse_potential(doc.at("potential"));
        if (cfg.potential.kind == PotentialKind::Custom) {
            require(static_cast<long>(cfg.potential.values.size()) == 2L * cfg.half_width + 1, "potential.values",
                    "needs 2M+1 entries");
        }
    }

    const nlohmann::json tol = doc.value("tolerances", nlohmann::json::object());
    detail::reject_unknown(tol, "tolerances", {"leakage_warn", "leakage_fail", "oracle", "unitarity", "ccr_identity"});
    Tolerances& t = cfg.tolerances;
    t.leakage_warn = read<double>(tol, "leakage_warn", "tolerances", t.leakage_warn);
    t.leakage_fail = read<double>(tol, "leakage_fail", "tolerances", t.leakage_fail);
    t.oracle = read<double>(tol, "oracle", "tolerances", t.oracle);
    t.unitarity = read<double>(tol, "unitarity", "tolerances", t.unitarity);
    t.ccr_identity = read<double>(tol, "ccr_identity", "tolerances", t.ccr_identity);
    for (const auto& [key, value] : {std::pair{"leakage_warn", t.leakage_warn}, {"leakage_fail", t.leakage_fail},
                                     {"oracle", t.oracle}, {"unitarity", t.unitarity},
                                     {"ccr_identity", t.ccr_identity}}) {
        require(value > 0.0, std::string("tolerances.") + key, "must be positive");
    }
    require(t.leakage_warn <= t.leakage_fail, "tolerances.leakage_warn", "must not exceed leakage_fail");

    cfg.c = read<double>(doc, "c", "", *exp == Experiment::Fig1 ? 1.0 : 0.01);
    require(cfg.c > 0.0, "c", "must be positive");
    cfg.c_values = read<std::vector<double>>(doc, "c_values", "", cfg.c_values);
    require(!cfg.c_values.empty(), "c_values", "must not be empty");
    for (double c : cfg.c_values) require(c > 0.0, "c_values", "entries must be positive");
    cfg.force = read<double>(doc, "F", "", cfg.force);
    require(cfg.force != 0.0 && std::isfinite(cfg.force), "F", "must be nonzero");
    cfg.b_values = read<std::vector<double>>(doc, "b_values", "", cfg.b_values);
    require(!cfg.b_values.empty(), "b_values", "must not be empty");
    for (double b : cfg.b_values) require(b > 0.0, "b_values", "entries must be positive");
    cfg.n0_values = read<std::vector<long>>(doc, "n0_values", "", cfg.n0_values);
    require(!cfg.n0_values.empty(), "n0_values", "must not be empty");
    if (detail::uses(*exp, "n0_values")) {
        for (long n0 : cfg.n0_values) {
            require(std::labs(n0) <= cfg.half_width, "n0_values", "entries must lie inside the window");
        }
    }
    cfg.ac14_values = read<std::vector<double>>(doc, "ac14_values", "", default_ac14_grid());
    require(!cfg.ac14_values.empty(), "ac14_values", "must not be empty");
    for (double v : cfg.ac14_values) require(v > 0.0, "ac14_values", "entries must be positive");
    cfg.a_values = read<std::vector<double>>(doc, "a_values", "", cfg.a_values);
    require(!cfg.a_values.empty(), "a_values", "must not be empty");
    for (double v : cfg.a_values) require(v > 0.0, "a_values", "entries must be positive");
    cfg.states = read<int>(doc, "states", "", cfg.states);
    require(cfg.states >= 1, "states", "must be >= 1");
    cfg.margin = read<int>(doc, "W", "", cfg.half_width / 4);
    require(cfg.margin >= 0 && cfg.margin < cfg.half_width, "W", "must satisfy 0 <= W < M");
    cfg.ws_site = read<long>(doc, "ws_site", "", cfg.ws_site);
    if (detail::uses(*exp, "ws_site")) {
        require(std::labs(cfg.ws_site) <= cfg.half_width, "ws_site", "must lie inside the window");
    }

    const nlohmann::json packet = doc.value("packet", nlohmann::json::object());
    detail::reject_unknown(packet, "packet", {"kind", "n0", "b", "k0"});
    const auto pkind = read<std::string>(packet, "kind", "packet", "gaussian");
    require(pkind == "gaussian" || pkind == "delta", "packet.kind", "must be gaussian or delta");
    cfg.packet.kind = pkind == "delta" ? PacketKind::Delta : PacketKind::Gaussian;
    cfg.packet.n0 = read<long>(packet, "n0", "packet", 0);
    cfg.packet.b = read<double>(packet, "b", "packet", 0.2);
    cfg.packet.k0 = read<double>(packet, "k0", "packet", 0.0);
    if (detail::uses(*exp, "packet")) {
        require(std::labs(cfg.packet.n0) <= cfg.half_width, "packet.n0", "must lie inside the window");
    }
    require(cfg.packet.b > 0.0, "packet.b", "must be positive");
    if (cfg.packet.kind == PacketKind::Delta) {
        require(!packet.contains("b") && !packet.contains("k0"), "packet.b", "b/k0 apply only to gaussian packets");
    }

    // time grid defaults depend on the dynamics
    double t_max = 10.0;
    double dt = 0.05;
    const double a = cfg.spacing;
    if (*exp == Experiment::Fig4 || (*exp == Experiment::Dynamics && cfg.potential.kind == PotentialKind::Linear &&
                                     cfg.potential.strength != 0.0)) {
        const double f = *exp == Experiment::Fig4 ? cfg.force : cfg.potential.strength;
        t_max = 2.0 * 2.0 * std::numbers::pi / std::abs(a * f);
        dt = 0.05 / std::abs(a * f);
    } else if (*exp == Experiment::Fig5) {
        t_max = 25.0 / std::sqrt(cfg.c);
        dt = 0.1 / std::sqrt(cfg.c);
    } else if (*exp == Experiment::Dynamics && cfg.potential.kind == PotentialKind::Harmonic) {
        t_max = 2.0 * std::numbers::pi / std::sqrt(cfg.potential.strength);
        dt = 0.1 / std::sqrt(cfg.potential.strength);
    }
    const nlohmann::json time = doc.value("time", nlohmann::json::object());
    detail::reject_unknown(time, "time", {"t_max", "dt"});
    cfg.t_max = read<double>(time, "t_max", "time", t_max);
    cfg.dt = read<double>(time, "dt", "time", dt);
    require(cfg.t_max >= 0.0 && std::isfinite(cfg.t_max), "time.t_max", "must be >= 0");
    require(cfg.dt > 0.0, "time.dt", "must be positive");

    const nlohmann::json output = doc.value("output", nlohmann::json::object());
    detail::reject_unknown(output, "output", {"path", "format"});
    cfg.output_format = read<std::string>(output, "format", "output", "csv");
    require(cfg.output_format == "csv" || cfg.output_format == "json", "output.format", "must be csv or json");
    cfg.output_path = read<std::string>(output, "path", "output", name + "." + cfg.output_format);
    require(!cfg.output_path.empty(), "output.path", "must not be empty");
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", "syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return config_from_json(doc);
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    using detail::uses;
    const Experiment e = cfg.experiment;
    nlohmann::json doc;
    doc["experiment"] = to_string(e);
    doc["lattice"] = {{"M", cfg.half_width}, {"a", cfg.spacing}};
    doc["output"] = {{"path", cfg.output_path}, {"format", cfg.output_format}};
    const Tolerances& t = cfg.tolerances;
    doc["tolerances"] = {{"leakage_warn", t.leakage_warn}, {"leakage_fail", t.leakage_fail}, {"oracle", t.oracle},
                         {"unitarity", t.unitarity}, {"ccr_identity", t.ccr_identity}};
    if (uses(e, "hopping")) doc["hopping"] = detail::hopping_to_json(cfg.hopping);
    if (uses(e, "potential")) doc["potential"] = detail::potential_to_json(cfg.potential);
    if (uses(e, "packet")) {
        if (cfg.packet.kind == PacketKind::Delta) {
            doc["packet"] = {{"kind", "delta"}, {"n0", cfg.packet.n0}};
        } else {
            doc["packet"] = {{"kind", "gaussian"}, {"n0", cfg.packet.n0}, {"b", cfg.packet.b}, {"k0", cfg.packet.k0}};
        }
    }
    if (uses(e, "time")) doc["time"] = {{"t_max", cfg.t_max}, {"dt", cfg.dt}};
    if (uses(e, "c")) doc["c"] = cfg.c;
    if (uses(e, "c_values")) doc["c_values"] = cfg.c_values;
    if (uses(e, "F")) doc["F"] = cfg.force;
    if (uses(e, "b_values")) doc["b_values"] = cfg.b_values;
    if (uses(e, "n0_values")) doc["n0_values"] = cfg.n0_values;
    if (uses(e, "ac14_values")) doc["ac14_values"] = cfg.ac14_values;
    if (uses(e, "a_values")) doc["a_values"] = cfg.a_values;
    if (uses(e, "states")) doc["states"] = cfg.states;
    if (uses(e, "W")) doc["W"] = cfg.margin;
    if (uses(e, "ws_site")) doc["ws_site"] = cfg.ws_site;
    return doc;
}

inline std::string serialize_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

/// Applies `key=value` to a dotted path in the document. The value is read
/// as JSON when it parses, otherwise as a string.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("--set", "--set expects key=value, got '" + assignment + "'");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    nlohmann::json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(path, "--set: malformed key '" + path + "'");
        if (!node->is_object()) throw ConfigError(path, "--set: '" + path + "' does not name an object field");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = nlohmann::json::object();
        start = dot + 1;
    }
}

struct Dataset {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct RunResult {
    Dataset dataset;
    nlohmann::json derived = nlohmann::json::object();
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline StateVector initial_state(const LatticeSpec& spec, const PacketConfig& p) {
    if (p.kind == PacketKind::Delta) return StateVector::site(spec, p.n0);
    return make_gaussian(spec, {p.n0, p.b, p.k0});
}

inline CcrModel model_for(const HoppingSpec& hop, const PotentialSpec& pot) {
    if (pot.kind == PotentialKind::Linear && pot.strength != 0.0) {
        return hop.kind == HoppingKind::NearestNeighborCosine ? CcrModel::PeriodicKineticCCR : CcrModel::LinearCCR;
    }
    if (pot.kind == PotentialKind::Harmonic && hop.kind == HoppingKind::Quadratic) return CcrModel::HarmonicCCR;
    return CcrModel::None;
}

inline void check_series(const TimeSeries& ts, const Tolerances& tol, const std::string& tag, RunResult& out) {
    double norm_dev = 0.0;
    for (double n : ts.norm) norm_dev = std::max(norm_dev, std::abs(n - 1.0));
    out.derived["max_norm_deviation" + tag] = norm_dev;
    out.derived["max_leakage" + tag] = ts.max_leakage;
    for (const auto& w : ts.warnings) out.warnings.push_back(tag.empty() ? w : tag.substr(1) + ": " + w);
    if (norm_dev > tol.unitarity) {
        throw ToleranceError("norm deviation " + format_number(norm_dev) + " exceeds unitarity tolerance");
    }
    if (ts.x_exact_oracle) {
        double worst = 0.0;
        for (std::size_t i = 0; i < ts.times.size(); ++i) {
            const double x = ts.x_mean[i];
            worst = std::max(worst, std::abs(x - (*ts.x_exact_oracle)[i]) / (1.0 + std::abs(x)));
        }
        out.derived["max_oracle_deviation" + tag] = worst;
        if (worst > tol.oracle) {
            throw ToleranceError("propagated <x> deviates from the exact oracle by " + format_number(worst));
        }
    }
}

inline double parity_code(Parity p) { return p == Parity::Even ? 1.0 : (p == Parity::Odd ? -1.0 : 0.0); }

inline RunResult run_spectrum(const ExperimentConfig& cfg) {
    const LatticeSpec spec(cfg.half_width, cfg.spacing);
    const SpectrumResult sr = eigensolve(build_hamiltonian(spec, cfg.hopping, cfg.potential));
    RunResult out;
    out.dataset.columns = {"n", "energy", "parity", "s_abs", "center"};
    for (const auto& d : diagnose_states(sr, spec)) {
        out.dataset.rows.push_back({static_cast<double>(d.index), sr.eigenvalues(d.index), parity_code(d.parity),
                                    d.overlap, d.center});
    }
    out.derived["residual_norm"] = sr.residual_norm;
    out.derived["orthonormality_error"] = sr.orthonormality_error;
    if (cfg.potential.kind == PotentialKind::Harmonic) {
        out.derived["threshold_estimate"] = threshold_estimate(cfg.spacing, cfg.potential.strength);
    }
    return out;
}

inline RunResult sweep_rows(double c, const std::vector<double>& a_values, const ExperimentConfig& cfg) {
    const SweepResult sweep = harmonic_sweep(c, a_values, cfg.states, cfg.half_width, cfg.hopping);
    RunResult out;
    out.dataset.columns = {"a_c14", "a", "n", "e_norm", "threshold"};
    const double c14 = std::pow(c, 0.25);
    for (const SweepRow& row : sweep.rows) {
        out.dataset.rows.push_back({row.a_c14, row.a, static_cast<double>(row.n), row.e_norm,
                                    3.0 / ((row.a * c14) * (row.a * c14))});
    }
    nlohmann::json reference = nlohmann::json::array();
    for (const auto& [x, thr] : sweep.reference) reference.push_back({{"a_c14", x}, {"threshold_estimate", thr}});
    out.derived["threshold_curve"] = reference;
    return out;
}

inline RunResult run_fig1(const ExperimentConfig& cfg) {
    std::vector<double> a_values;
    for (double x : cfg.ac14_values) a_values.push_back(x / std::pow(cfg.c, 0.25));
    RunResult out = sweep_rows(cfg.c, a_values, cfg);
    out.derived["ac14_grid"] = cfg.ac14_values;
    out.derived["states_per_point"] = cfg.states;
    return out;
}

inline RunResult run_fig2(const ExperimentConfig& cfg) {
    const LatticeSpec spec(cfg.half_width, cfg.spacing);
    RunResult out;
    out.dataset.columns = {"c", "n", "s_abs"};
    for (double c : cfg.c_values) {
        const SpectrumResult sr = eigensolve(build_hamiltonian(spec, cfg.hopping, PotentialSpec::harmonic(c)));
        for (const auto& d : diagnose_states(sr, spec)) {
            if (d.parity == Parity::Even) out.dataset.rows.push_back({c, static_cast<double>(d.index), d.overlap});
        }
        out.derived["threshold_estimate_c" + label(c)] = threshold_estimate(cfg.spacing, c);
    }
    return out;
}

inline RunResult run_fig3(const ExperimentConfig& cfg) {
    const LatticeSpec spec(cfg.half_width, cfg.spacing);
    const SpectrumResult sr = eigensolve(build_hamiltonian(spec, cfg.hopping, PotentialSpec::linear(cfg.force)));
    Eigen::Index chosen = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < sr.size(); ++j) {
        const double dist = std::abs(position_expectation(sr.eigenvectors.col(j), spec) - spec.position(cfg.ws_site));
        if (dist < best) {
            best = dist;
            chosen = j;
        }
    }
    RunResult out;
    out.dataset.columns = {"m", "x", "psi", "sqrt2_psi"};
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        const double psi = sr.eigenvectors(i, chosen).real();
        out.dataset.rows.push_back(
            {static_cast<double>(spec.site(i)), spec.position(spec.site(i)), psi, std::sqrt(2.0) * psi});
    }
    const double center = position_expectation(sr.eigenvectors.col(chosen), spec);
    out.derived["state_index"] = chosen;
    out.derived["energy"] = sr.eigenvalues(chosen);
    out.derived["center_site"] = center / cfg.spacing;
    const LadderReport ladder = wannier_stark_analysis(sr, spec, cfg.force);
    out.derived["ladder"] = {{"interior_states", ladder.states.size()},
                             {"mean_spacing", ladder.mean_spacing},
                             {"expected_spacing", std::abs(cfg.spacing * cfg.force)},
                             {"max_spacing_deviation", ladder.max_spacing_deviation},
                             {"max_translation_residual", ladder.max_translation_residual},
                             {"tail_distance_sites", ladder.tail_distance},
                             {"tail_amplitude", ladder.tail_amplitude}};
    return out;
}

inline RunResult run_dynamics(const ExperimentConfig& cfg) {
    const LatticeSpec spec(cfg.half_width, cfg.spacing);
    const HamiltonianInputs in{spec, cfg.hopping, cfg.potential};
    const SpectrumResult sr = eigensolve(build_hamiltonian(spec, cfg.hopping, cfg.potential));
    const CcrModel model = model_for(cfg.hopping, cfg.potential);
    const TimeSeries ts = run_timeseries(in, sr, initial_state(spec, cfg.packet), uniform_grid(cfg.t_max, cfg.dt),
                                         model, {cfg.tolerances.leakage_warn, cfg.tolerances.leakage_fail});
    RunResult out;
    out.dataset.columns = {"t", "x_mean", "k_mean", "s_abs", "norm", "energy", "x_ccr", "x_exact"};
    for (std::size_t i = 0; i < ts.times.size(); ++i) {
        out.dataset.rows.push_back({ts.times[i], ts.x_mean[i], ts.k_mean[i], ts.s_abs[i], ts.norm[i], ts.energy[i],
                                    ts.x_ccr[i],
                                    ts.x_exact_oracle ? (*ts.x_exact_oracle)[i]
                                                      : std::numeric_limits<double>::quiet_NaN()});
    }
    const char* names[] = {"none", "linear", "harmonic", "periodic_kinetic"};
    out.derived["ccr_model"] = names[static_cast<int>(model)];
    if (cfg.potential.kind == PotentialKind::Linear && cfg.potential.strength != 0.0) {
        out.derived["bloch_period"] = 2.0 * std::numbers::pi / std::abs(cfg.spacing * cfg.potential.strength);
    }
    check_series(ts, cfg.tolerances, "", out);
    return out;
}

inline RunResult run_ccr_check(const ExperimentConfig& cfg) {
    const LatticeSpec spec(cfg.half_width, cfg.spacing);
    const StateVector psi = initial_state(spec, cfg.packet);
    const CcrDefect d = ccr_defect(psi, spec, cfg.margin);
    RunResult out;
    out.dataset.columns = {"m", "defect_re", "defect_im", "predicted_re", "predicted_im"};
    for (std::size_t i = 0; i < d.sites.size(); ++i) {
        const Complex predicted = -kI * (d.sites[i] % 2 == 0 ? 1.0 : -1.0) * d.overlap;
        out.dataset.rows.push_back({static_cast<double>(d.sites[i]), d.profile[i].real(), d.profile[i].imag(),
                                    predicted.real(), predicted.imag()});
    }
    out.derived["s_abs"] = std::abs(d.overlap);
    out.derived["max_defect"] = d.max_defect;
    out.derived["identity_tail"] = d.identity_tail;
    out.derived["W"] = cfg.margin;
    if (d.identity_tail > cfg.tolerances.ccr_identity) {
        throw ToleranceError("defect deviates from -i(-1)^m S_psi by " + format_number(d.identity_tail));
    }
    return out;
}

inline RunResult run_fig4(const ExperimentConfig& cfg) {
    const LatticeSpec spec(cfg.half_width, cfg.spacing);
    const HamiltonianInputs in{spec, cfg.hopping, PotentialSpec::linear(cfg.force)};
    const SpectrumResult sr = eigensolve(build_hamiltonian(spec, in.hop, in.pot));
    const std::vector<double> grid = uniform_grid(cfg.t_max, cfg.dt);
    const CcrModel model =
        cfg.hopping.kind == HoppingKind::NearestNeighborCosine ? CcrModel::PeriodicKineticCCR : CcrModel::LinearCCR;
    const double bloch = 2.0 * std::numbers::pi / std::abs(cfg.spacing * cfg.force);

    RunResult out;
    std::vector<TimeSeries> runs;
    nlohmann::json per_b = nlohmann::json::object();
    for (double b : cfg.b_values) {
        const StateVector psi0 = make_gaussian(spec, {cfg.packet.n0, b, cfg.packet.k0});
        runs.push_back(run_timeseries(in, sr, psi0, grid, model,
                                      {cfg.tolerances.leakage_warn, cfg.tolerances.leakage_fail}));
        check_series(runs.back(), cfg.tolerances, "_b" + label(b), out);
        const double x0 = mean_position(psi0, spec);
        const double x_tb = mean_position(propagate(psi0, sr, bloch), spec);
        const TimeSeries& ts = runs.back();
        std::size_t peak = 0;
        for (std::size_t i = 0; i < ts.times.size() && ts.times[i] <= bloch; ++i) {
            if (ts.s_abs[i] > ts.s_abs[peak]) peak = i;
        }
        per_b["b" + label(b)] = {{"x0", x0},
                                 {"x_at_bloch_period", x_tb},
                                 {"return_error", std::abs(x_tb - x0)},
                                 {"s_abs_peak_time", ts.times[peak]},
                                 {"s_abs_peak", ts.s_abs[peak]}};
    }
    out.derived["bloch_period"] = bloch;
    out.derived["packets"] = per_b;
    out.derived["x_ccr_x_exact_packet_b"] = cfg.b_values.front();

    out.dataset.columns = {"t"};
    for (double b : cfg.b_values) out.dataset.columns.push_back("x_mean_b" + label(b));
    out.dataset.columns.push_back("x_ccr");
    out.dataset.columns.push_back("x_exact");
    for (double b : cfg.b_values) out.dataset.columns.push_back("s_abs_b" + label(b));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> row{grid[i]};
        for (const auto& ts : runs) row.push_back(ts.x_mean[i]);
        row.push_back(runs.front().x_ccr[i]);
        row.push_back((*runs.front().x_exact_oracle)[i]);
        for (const auto& ts : runs) row.push_back(ts.s_abs[i]);
        out.dataset.rows.push_back(std::move(row));
    }
    return out;
}

inline RunResult run_fig5(const ExperimentConfig& cfg) {
    const LatticeSpec spec(cfg.half_width, cfg.spacing);
    const PotentialSpec pot = PotentialSpec::harmonic(cfg.c);
    const std::vector<double> grid = uniform_grid(cfg.t_max, cfg.dt);
    const LeakagePolicy policy{cfg.tolerances.leakage_warn, cfg.tolerances.leakage_fail};
    const double period = 2.0 * std::numbers::pi / std::sqrt(cfg.c);

    RunResult out;
    out.derived["threshold_estimate"] = threshold_estimate(cfg.spacing, cfg.c);
    out.derived["period"] = period;
    nlohmann::json per_n0 = nlohmann::json::object();
    std::vector<std::vector<double>> columns;
    auto record = [&](const HamiltonianInputs& in, long n0, const std::string& tag) {
        const SpectrumResult sr = eigensolve(build_hamiltonian(in.spec, in.hop, in.pot));
        const StateVector psi0 = make_gaussian(spec, {-n0, cfg.packet.b, cfg.packet.k0});
        const CcrModel model = in.hop.kind == HoppingKind::Quadratic ? CcrModel::HarmonicCCR : CcrModel::None;
        TimeSeries ts = run_timeseries(in, sr, psi0, grid, model, policy);
        check_series(ts, cfg.tolerances, "_" + tag, out);
        const double x0 = ts.x_mean.front();
        double deviation = 0.0, excursion = 0.0;
        for (std::size_t i = 0; i < ts.times.size(); ++i) {
            excursion = std::max(excursion, std::abs(ts.x_mean[i] - x0));
            if (ts.times[i] <= period) {
                const double cosine = ccr_position_harmonic(psi0, spec, cfg.c, ts.times[i]);
                deviation = std::max(deviation, std::abs(ts.x_mean[i] - cosine) / std::abs(x0));
            }
        }
        per_n0[tag] = {{"n0", n0}, {"max_relative_deviation_one_period", deviation}, {"max_excursion", excursion}};
        return ts;
    };

    out.dataset.columns = {"t"};
    std::vector<TimeSeries> runs;
    for (long n0 : cfg.n0_values) {
        runs.push_back(record({spec, cfg.hopping, pot}, n0, "n" + std::to_string(n0)));
        out.dataset.columns.push_back("x_mean_n" + std::to_string(n0));
    }
    for (std::size_t k = 0; k < cfg.n0_values.size(); ++k) {
        out.dataset.columns.push_back("x_ccr_n" + std::to_string(cfg.n0_values[k]));
    }
    const long n_cos = cfg.n0_values.front();
    runs.push_back(record({spec, HoppingSpec::cosine(), pot}, n_cos, "cosine_n" + std::to_string(n_cos)));
    out.dataset.columns.push_back("x_mean_cosine_n" + std::to_string(n_cos));
    out.derived["packets"] = per_n0;

    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> row{grid[i]};
        for (std::size_t k = 0; k < cfg.n0_values.size(); ++k) row.push_back(runs[k].x_mean[i]);
        for (std::size_t k = 0; k < cfg.n0_values.size(); ++k) {
            const StateVector psi0 = make_gaussian(spec, {-cfg.n0_values[k], cfg.packet.b, cfg.packet.k0});
            row.push_back(ccr_position_harmonic(psi0, spec, cfg.c, grid[i]));
        }
        row.push_back(runs.back().x_mean[i]);
        out.dataset.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case Experiment::Spectrum: return detail::run_spectrum(cfg);
        case Experiment::Sweep: {
            RunResult out = detail::sweep_rows(cfg.c, cfg.a_values, cfg);
            out.derived["threshold_estimate"] = threshold_estimate(cfg.a_values.front(), cfg.c);
            return out;
        }
        case Experiment::Dynamics: return detail::run_dynamics(cfg);
        case Experiment::CcrCheck: return detail::run_ccr_check(cfg);
        case Experiment::Fig1: return detail::run_fig1(cfg);
        case Experiment::Fig2: return detail::run_fig2(cfg);
        case Experiment::Fig3: return detail::run_fig3(cfg);
        case Experiment::Fig4: return detail::run_fig4(cfg);
        case Experiment::Fig5: return detail::run_fig5(cfg);
    }
    throw PreconditionError("unknown experiment");
}

inline std::string render_csv(const Dataset& data) {
    std::string text;
    for (std::size_t i = 0; i < data.columns.size(); ++i) text += (i ? "," : "") + data.columns[i];
    text += "\n";
    for (const auto& row : data.rows) {
        if (row.size() != data.columns.size()) throw DimensionError("dataset row width differs from its header");
        for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + detail::format_number(row[i]);
        text += "\n";
    }
    return text;
}

inline std::string render_json(const Dataset& data) {
    nlohmann::json doc;
    doc["columns"] = data.columns;
    doc["rows"] = nlohmann::json::array();
    for (const auto& row : data.rows) {
        if (row.size() != data.columns.size()) throw DimensionError("dataset row width differs from its header");
        nlohmann::json r = nlohmann::json::array();
        for (double v : row) {
            if (std::isfinite(v)) {
                r.push_back(std::stod(detail::format_number(v)));
            } else {
                r.push_back(nullptr);
            }
        }
        doc["rows"].push_back(std::move(r));
    }
    return doc.dump(2) + "\n";
}

/// Write-temp-then-rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
        if (!file) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        file << text;
        if (!file) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline void emit_dataset(const Dataset& data, const std::filesystem::path& path, const std::string& format) {
    if (format == "csv") {
        write_atomic(path, render_csv(data));
    } else if (format == "json") {
        write_atomic(path, render_json(data));
    } else {
        throw ConfigError("output.format", "output.format: must be csv or json");
    }
}

inline std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
    return dataset.string() + ".manifest.json";
}

struct ManifestTiming {
    std::string started_utc;
    double wall_seconds = 0.0;
};

inline std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Manifest for a run. Everything except `timing` is a function of the
/// config and the results.
inline nlohmann::json build_manifest(const std::optional<ExperimentConfig>& cfg, const RunResult* result,
                                     const std::string& status, const std::string& reason_code,
                                     const std::string& reason, const std::string& dataset_file,
                                     const ManifestTiming& timing) {
    nlohmann::json m;
    m["software"] = {{"name", "latticeccr"}, {"version", kSoftwareVersion}};
    m["config"] = cfg ? config_to_json(*cfg) : nlohmann::json(nullptr);
    m["status"] = status;
    if (status != "ok") m["failure"] = {{"code", reason_code}, {"message", reason}};
    m["warnings"] = result ? result->warnings : std::vector<std::string>{};
    m["derived"] = result ? result->derived : nlohmann::json::object();
    if (result) {
        m["dataset"] = {{"file", dataset_file},
                        {"columns", result->dataset.columns},
                        {"rows", result->dataset.rows.size()}};
    }
    m["timing"] = {{"started_utc", timing.started_utc}, {"wall_seconds", timing.wall_seconds}};
    return m;
}

}  // namespace latticeccr
