#include "nlsfgr/config.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include <toml.hpp>

#include "nlsfgr/errors.hpp"

namespace nlsfgr {

using nlohmann::json;

json default_config() {
    return {
        {"potential", {{"shape", "gaussian_well"}, {"depth", 4.0}, {"width", 2.0}}},
        {"grid", {{"r_max", 200.0}, {"n", 1999}}},
        {"ground", {{"lambda", 1.6}, {"target", "mass"}, {"mass", 5.0}, {"E", -2.0}, {"sweep", json::array()}}},
        {"fgr",
         {{"eps_schedule", json::array()},
          {"T_fraction", 0.5},
          {"taper_fraction", 0.2},
          {"a1_shifts", json::array()}}},
        {"cap", {{"enabled", false}, {"start_radius", 150.0}, {"strength", 2.0}, {"power", 4.0}}},
        {"evolve",
         {{"T", 100.0},
          {"dt", 0.01},
          {"stride", 1.0},
          {"points_per_decade", 100.0},
          {"gauge", true},
          {"checkpoint", true},
          {"initial", ""}}},
        {"scenario",
         {{"kind", "resonance"},
          {"eps", 0.5},
          {"z_phase", 0.0},
          {"eta_scale", 0.0},
          {"eta_bound", 1.0},
          {"eta_width", 3.0},
          {"chi_width", 2.0},
          {"chi_momentum", 0.0},
          {"a0", 0.0},
          {"seed", 1}}},
        {"frame", {{"beta", 3.0}, {"max_distance", 0.5}, {"renorm_tolerance", 1e-12}}},
        {"fits",
         {{"start_factor", 10.0},
          {"start_time", 10.0},
          {"end_fraction", 0.9},
          {"final_fraction", 0.05},
          {"bins", 40},
          {"min_decades", 1.5}}},
        {"monitor", {{"sigma", 0.1}}},
        {"nf",
         {{"eps", 0.1},
          {"Gamma", 0.0},
          {"T", 1e4},
          {"dt", 0.1},
          {"d21_im", 0.0},
          {"d1_im", 0.0},
          {"C1", 0.5},
          {"sigma", 0.1},
          {"m", 2.0},
          {"example_Gamma", 1.0},
          {"example_eps", 1.0},
          {"example_T", 1e4},
          {"example_samples", json::array()}}},
        {"decompose", {{"input", ""}}},
    };
}

namespace {

json from_toml(const toml::node& node, const std::string& where) {
    if (const auto* t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = from_toml(v, where + "." + std::string(k.str()));
        return out;
    }
    if (const auto* a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(from_toml(v, where));
        return out;
    }
    if (const auto* v = node.as_integer()) return v->get();
    if (const auto* v = node.as_floating_point()) return v->get();
    if (const auto* v = node.as_boolean()) return v->get();
    if (const auto* v = node.as_string()) return v->get();
    throw ConfigError("unsupported TOML value type at " + where);
}

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

bool compatible(const json& schema, const json& value) {
    if (schema.is_number_float()) return value.is_number();
    if (schema.is_number_integer()) return value.is_number_integer();
    if (schema.is_array()) {
        if (!value.is_array()) return false;
        for (const auto& v : value)
            if (!v.is_number()) return false;
        return true;
    }
    return schema.type() == value.type();
}

// Deep merge of `over` into `base`, rejecting keys absent from `schema`.
void merge(json& base, const json& over, const json& schema, const std::string& prefix) {
    if (!over.is_object()) throw ConfigError("configuration section '" + prefix + "' must be a table");
    for (auto it = over.begin(); it != over.end(); ++it) {
        const std::string key = join(prefix, it.key());
        if (!schema.contains(it.key())) throw ConfigError("unknown configuration key '" + key + "'");
        const json& s = schema.at(it.key());
        if (s.is_object()) {
            merge(base[it.key()], it.value(), s, key);
        } else {
            if (!compatible(s, it.value()))
                throw ConfigError("configuration key '" + key + "' expects a " + std::string(s.type_name()) +
                                  ", got " + it.value().dump());
            base[it.key()] = s.is_number_float() ? json(it.value().get<double>()) : it.value();
        }
    }
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

void check_ranges(const json& c) {
    require(c["grid"]["r_max"].get<double>() > 0.0, "grid.r_max must be positive");
    require(c["grid"]["n"].get<long>() >= 16, "grid.n must be at least 16");
    const std::string target = c["ground"]["target"];
    require(target == "mass" || target == "E", "ground.target must be 'mass' or 'E'");
    require(c["ground"]["mass"].get<double>() > 0.0, "ground.mass must be positive");
    require(c["evolve"]["T"].get<double>() >= 0.0, "evolve.T must be nonnegative");
    require(c["evolve"]["dt"].get<double>() > 0.0, "evolve.dt must be positive");
    require(c["evolve"]["stride"].get<double>() > 0.0, "evolve.stride must be positive");
    require(c["evolve"]["points_per_decade"].get<double>() > 0.0, "evolve.points_per_decade must be positive");
    require(c["scenario"]["eps"].get<double>() >= 0.0, "scenario.eps must be nonnegative");
    require(c["scenario"]["eta_scale"].get<double>() >= 0.0, "scenario.eta_scale must be nonnegative");
    require(c["scenario"]["seed"].get<long long>() >= 0, "scenario.seed must be nonnegative");
    require(c["frame"]["beta"].get<double>() > 1.5, "frame.beta must exceed 3/2 so the weight is square integrable");
    require(c["frame"]["max_distance"].get<double>() > 0.0, "frame.max_distance must be positive");
    const double ef = c["fits"]["end_fraction"], ff = c["fits"]["final_fraction"];
    require(ef > 0.0 && ef <= 1.0, "fits.end_fraction must lie in (0, 1]");
    require(ff > 0.0 && ff <= 0.5, "fits.final_fraction must lie in (0, 0.5]");
    require(c["fits"]["bins"].get<int>() >= 4, "fits.bins must be at least 4");
    require(c["monitor"]["sigma"].get<double>() > 0.0, "monitor.sigma must be positive");
    require(c["nf"]["dt"].get<double>() > 0.0, "nf.dt must be positive");
    require(c["nf"]["m"].get<double>() >= 1.0, "nf.m must be at least 1");
    parse_potential_shape(c["potential"]["shape"]);
    parse_scenario_kind(c["scenario"]["kind"]);
}

}  // namespace

json load_config_file(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("configuration file not found: " + path);
    const std::filesystem::path p(path);
    if (p.extension() == ".json") {
        std::ifstream in(path);
        try {
            return json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("cannot parse JSON configuration " + path + ": " + e.what());
        }
    }
    try {
        const toml::table table = toml::parse_file(path);
        return from_toml(table, "");
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "cannot parse TOML configuration " << path << ": " << e.description() << " (line "
            << e.source().begin.line << ")";
        throw ConfigError(msg.str());
    }
}

void apply_override(json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    // Build the nested object and merge it through the schema check.
    json patch = value;
    std::string rest = key;
    std::vector<std::string> parts;
    for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
        parts.push_back(rest.substr(0, pos));
    parts.push_back(rest);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    merge(cfg, patch, default_config(), "");
}

json resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
    const json schema = default_config();
    json cfg = schema;
    if (!path.empty()) merge(cfg, load_config_file(path), schema, "");
    for (const auto& o : overrides) apply_override(cfg, o);
    check_ranges(cfg);
    return cfg;
}

ScenarioKind parse_scenario_kind(const std::string& name) {
    if (name == "resonance") return ScenarioKind::resonance;
    if (name == "radiation") return ScenarioKind::radiation;
    if (name == "branch_tracking") return ScenarioKind::branch_tracking;
    throw ConfigError("unknown scenario kind '" + name + "' (resonance, radiation, branch_tracking)");
}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::resonance: return "resonance";
        case ScenarioKind::radiation: return "radiation";
        case ScenarioKind::branch_tracking: return "branch_tracking";
    }
    return "unknown";
}

RunConfig parse_run_config(const json& c) {
    RunConfig r;
    r.resolved = c;
    r.potential.shape = parse_potential_shape(c["potential"]["shape"]);
    r.potential.depth = c["potential"]["depth"];
    r.potential.width = c["potential"]["width"];
    r.r_max = c["grid"]["r_max"];
    r.n = c["grid"]["n"];

    const json& g = c["ground"];
    r.lambda = g["lambda"];
    r.target = g["target"];
    r.mass = g["mass"];
    r.E = g["E"];
    r.sweep = g["sweep"].get<std::vector<double>>();

    const json& f = c["fgr"];
    r.resolvent.eps_schedule = f["eps_schedule"].get<std::vector<double>>();
    r.timedomain.T_fraction = f["T_fraction"];
    r.timedomain.taper_fraction = f["taper_fraction"];
    r.a1_shifts = f["a1_shifts"].get<std::vector<double>>();

    const json& cap = c["cap"];
    r.cap.enabled = cap["enabled"];
    r.cap.start_radius = cap["start_radius"];
    r.cap.strength = cap["strength"];
    r.cap.power = cap["power"];

    const json& e = c["evolve"];
    r.evolve.T = e["T"];
    r.evolve.dt = e["dt"];
    r.evolve.stride = e["stride"];
    r.evolve.points_per_decade = e["points_per_decade"];
    r.evolve.gauge = e["gauge"];
    r.evolve.checkpoint = e["checkpoint"];
    r.evolve.initial = e["initial"];

    const json& s = c["scenario"];
    r.scenario.kind = parse_scenario_kind(s["kind"]);
    r.scenario.eps = s["eps"];
    r.scenario.z_phase = s["z_phase"];
    r.scenario.eta_scale = s["eta_scale"];
    r.scenario.eta_bound = s["eta_bound"];
    r.scenario.eta_width = s["eta_width"];
    r.scenario.chi_width = s["chi_width"];
    r.scenario.chi_momentum = s["chi_momentum"];
    r.scenario.a0 = s["a0"];
    r.scenario.seed = s["seed"].get<std::uint64_t>();

    r.beta = c["frame"]["beta"];
    r.max_distance = c["frame"]["max_distance"];
    r.renorm_tolerance = c["frame"]["renorm_tolerance"];

    const json& fi = c["fits"];
    r.fits.start_factor = fi["start_factor"];
    r.fits.start_time = fi["start_time"];
    r.fits.end_fraction = fi["end_fraction"];
    r.fits.final_fraction = fi["final_fraction"];
    r.fits.bins = fi["bins"];
    r.fits.min_decades = fi["min_decades"];
    r.monitor_sigma = c["monitor"]["sigma"];

    const json& n = c["nf"];
    r.nf.eps = n["eps"];
    r.nf.Gamma = n["Gamma"];
    r.nf.T = n["T"];
    r.nf.dt = n["dt"];
    r.nf.d21_im = n["d21_im"];
    r.nf.d1_im = n["d1_im"];
    r.nf.C1 = n["C1"];
    r.nf.sigma = n["sigma"];
    r.nf.m = n["m"];
    r.nf.example_Gamma = n["example_Gamma"];
    r.nf.example_eps = n["example_eps"];
    r.nf.example_T = n["example_T"];
    r.nf.example_samples = n["example_samples"].get<std::vector<double>>();

    r.decompose_input = c["decompose"]["input"];
    return r;
}

}  // namespace nlsfgr
