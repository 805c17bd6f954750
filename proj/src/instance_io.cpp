#include "flexplan/instance_io.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace flexplan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw InstanceError("cannot open '" + file.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InstanceError(file.string() + ": " + e.what());
    }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw InstanceError(ctx + ": missing required key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InstanceError(ctx + "." + key + ": " + e.what());
    }
}

template <typename T>
T optional_or(const json& j, const std::string& key, T fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InstanceError(ctx + "." + key + ": " + e.what());
    }
}

// Reserve requirements accept either a scalar (constant across hours) or a
// full per-hour array.
std::vector<double> hourly_series(const json& j, const std::string& key, int hours,
                                  const std::string& ctx) {
    if (!j.contains(key)) throw InstanceError(ctx + ": missing required key '" + key + "'");
    const json& v = j.at(key);
    if (v.is_number()) return std::vector<double>(hours, v.get<double>());
    if (v.is_array()) {
        std::vector<double> out = v.get<std::vector<double>>();
        if (static_cast<int>(out.size()) != hours)
            throw InstanceError(ctx + "." + key + ": expected " + std::to_string(hours) +
                                " hourly values, got " + std::to_string(out.size()));
        return out;
    }
    throw InstanceError(ctx + "." + key + ": expected number or array");
}

}  // namespace

std::vector<double> read_profile_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InstanceError("cannot open profile '" + path + "'");
    std::vector<double> values;
    std::string line;
    int lineno = 0;
    int expected_step = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "step,value")
                throw InstanceError(path + ":1: expected header 'step,value', got '" + line + "'");
            continue;
        }
        size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw InstanceError(path + ":" + std::to_string(lineno) + ": expected 'step,value'");
        try {
            size_t used = 0;
            int step = std::stoi(line.substr(0, comma), &used);
            if (used != comma) throw std::invalid_argument("trailing characters");
            std::string vs = line.substr(comma + 1);
            double value = std::stod(vs, &used);
            if (used != vs.size()) throw std::invalid_argument("trailing characters");
            if (step != expected_step)
                throw InstanceError(path + ":" + std::to_string(lineno) + ": expected step " +
                                    std::to_string(expected_step) + ", got " +
                                    std::to_string(step));
            values.push_back(value);
            ++expected_step;
        } catch (const InstanceError&) {
            throw;
        } catch (const std::exception&) {
            throw InstanceError(path + ":" + std::to_string(lineno) + ": malformed row '" + line +
                                "'");
        }
    }
    if (values.empty()) throw InstanceError(path + ": no data rows");
    return values;
}

SystemSpec load_instance(const std::string& path_in) {
    fs::path path(path_in);
    if (fs::is_directory(path)) path /= "instance.json";
    const fs::path base = path.parent_path();
    json doc = load_json(path);

    SystemSpec spec;
    spec.name = optional_or<std::string>(doc, "name", path.stem().string(), "instance");
    spec.grid.hours = require<int>(doc, "horizon_hours", "instance");
    spec.grid.sub_step_minutes = optional_or<int>(doc, "sub_step_minutes", 5, "instance");

    std::map<std::string, int> bus_index;
    for (const json& jb : require<json>(doc, "buses", "instance")) {
        Bus b;
        b.id = require<std::string>(jb, "id", "buses");
        b.has_demand = optional_or<bool>(jb, "demand", false, "buses");
        if (bus_index.count(b.id)) throw InstanceError("buses: duplicate id '" + b.id + "'");
        bus_index[b.id] = spec.num_buses();
        spec.network.buses.push_back(b);
    }
    auto bus_of = [&](const std::string& id, const std::string& ctx) {
        auto it = bus_index.find(id);
        if (it == bus_index.end()) throw InstanceError(ctx + ": unknown bus '" + id + "'");
        return it->second;
    };
    spec.network.slack_bus =
        bus_of(optional_or<std::string>(doc, "slack_bus",
                                        spec.network.buses.empty() ? "" : spec.network.buses[0].id,
                                        "instance"),
               "slack_bus");

    std::map<std::string, int> line_index;
    if (doc.contains("lines"))
        for (const json& jl : doc.at("lines")) {
            Line l;
            l.id = require<std::string>(jl, "id", "lines");
            l.from = bus_of(require<std::string>(jl, "from", "lines"), "lines." + l.id);
            l.to = bus_of(require<std::string>(jl, "to", "lines"), "lines." + l.id);
            l.limit_mw = require<double>(jl, "limit_mw", "lines." + l.id);
            l.reactance = require<double>(jl, "reactance", "lines." + l.id);
            if (line_index.count(l.id)) throw InstanceError("lines: duplicate id '" + l.id + "'");
            line_index[l.id] = spec.num_lines();
            spec.network.lines.push_back(l);
        }
    if (doc.contains("shift_factors")) {
        const json& jsf = doc.at("shift_factors");
        std::vector<std::vector<double>> sf(spec.num_lines(),
                                            std::vector<double>(spec.num_buses(), 0.0));
        for (auto it = jsf.begin(); it != jsf.end(); ++it) {
            auto lit = line_index.find(it.key());
            if (lit == line_index.end())
                throw InstanceError("shift_factors: unknown line '" + it.key() + "'");
            for (auto bit = it.value().begin(); bit != it.value().end(); ++bit)
                sf[lit->second][bus_of(bit.key(), "shift_factors")] = bit.value().get<double>();
        }
        spec.network.shift_factors = std::move(sf);
    }
    spec.network.shift_factor_bound =
        optional_or<double>(doc, "shift_factor_bound", 10.0, "instance");

    // Scenario ids are needed before renewables to key their profiles.
    std::vector<std::string> scenario_ids;
    std::map<std::string, int> scenario_index;
    const json& jscen = require<json>(doc, "scenarios", "instance");
    for (const json& js : jscen) {
        std::string id = require<std::string>(js, "id", "scenarios");
        if (scenario_index.count(id))
            throw InstanceError("scenarios: duplicate id '" + id + "'");
        scenario_index[id] = static_cast<int>(scenario_ids.size());
        scenario_ids.push_back(id);
    }

    if (doc.contains("thermal"))
        for (const json& jt : doc.at("thermal")) {
            ThermalTech t;
            t.id = require<std::string>(jt, "id", "thermal");
            const std::string ctx = "thermal." + t.id;
            t.bus = bus_of(require<std::string>(jt, "bus", ctx), ctx);
            t.pmax = require<double>(jt, "pmax", ctx);
            t.pmin = require<double>(jt, "pmin", ctx);
            t.ramp_up = require<double>(jt, "ramp_up", ctx);
            t.ramp_down = require<double>(jt, "ramp_down", ctx);
            t.su_capability = optional_or<double>(jt, "su_capability", t.pmin, ctx);
            t.sd_capability = optional_or<double>(jt, "sd_capability", t.pmin, ctx);
            t.sd_duration = optional_or<int>(jt, "sd_duration", 1, ctx);
            t.min_up = optional_or<int>(jt, "min_up", 1, ctx);
            t.min_down = optional_or<int>(jt, "min_down", 1, ctx);
            t.startup_segments.clear();
            for (const json& seg : require<json>(jt, "startup_segments", ctx))
                t.startup_segments.push_back(
                    StartupSegment{require<int>(seg, "offline_hours", ctx + ".startup_segments"),
                                   require<double>(seg, "cost", ctx + ".startup_segments")});
            if (jt.contains("su_duration"))
                t.su_duration = jt.at("su_duration").get<std::vector<int>>();
            else
                t.su_duration.assign(t.startup_segments.size(), 1);
            t.var_cost = require<double>(jt, "var_cost", ctx);
            t.no_load_cost = optional_or<double>(jt, "no_load_cost", 0.0, ctx);
            t.sd_cost = optional_or<double>(jt, "sd_cost", 0.0, ctx);
            t.emission_rate = optional_or<double>(jt, "emission_rate", 0.0, ctx);
            t.co2_price = optional_or<double>(jt, "co2_price", 0.0, ctx);
            t.reserve_cost_up = optional_or<double>(jt, "reserve_cost_up", 0.0, ctx);
            t.reserve_cost_down = optional_or<double>(jt, "reserve_cost_down", 0.0, ctx);
            t.invest_cost = require<double>(jt, "invest_cost", ctx);
            t.initial_units = optional_or<int>(jt, "initial_units", 0, ctx);
            t.max_new_units = optional_or<int>(jt, "max_new_units", 0, ctx);
            std::string cls = require<std::string>(jt, "start_class", ctx);
            if (cls == "quick")
                t.start_class = StartClass::Quick;
            else if (cls == "slow")
                t.start_class = StartClass::Slow;
            else
                throw InstanceError(ctx + ".start_class: expected 'quick' or 'slow'");
            spec.thermal.push_back(std::move(t));
        }

    if (doc.contains("storage"))
        for (const json& js : doc.at("storage")) {
            StorageTech s;
            s.id = require<std::string>(js, "id", "storage");
            const std::string ctx = "storage." + s.id;
            s.bus = bus_of(require<std::string>(js, "bus", ctx), ctx);
            s.energy_to_power = require<double>(js, "energy_to_power", ctx);
            s.efficiency = require<double>(js, "efficiency", ctx);
            s.ramp_up = require<double>(js, "ramp_up", ctx);
            s.ramp_down = require<double>(js, "ramp_down", ctx);
            s.var_cost = optional_or<double>(js, "var_cost", 0.0, ctx);
            s.reserve_cost_up = optional_or<double>(js, "reserve_cost_up", 0.0, ctx);
            s.reserve_cost_down = optional_or<double>(js, "reserve_cost_down", 0.0, ctx);
            s.invest_cost = require<double>(js, "invest_cost", ctx);
            s.initial_mw = optional_or<double>(js, "initial_mw", 0.0, ctx);
            s.max_new_mw = optional_or<double>(js, "max_new_mw", 0.0, ctx);
            s.initial_soc_fraction = optional_or<double>(js, "initial_soc_fraction", 0.5, ctx);
            spec.storage.push_back(std::move(s));
        }

    if (doc.contains("renewable"))
        for (const json& jv : doc.at("renewable")) {
            RenewableTech v;
            v.id = require<std::string>(jv, "id", "renewable");
            const std::string ctx = "renewable." + v.id;
            v.bus = bus_of(require<std::string>(jv, "bus", ctx), ctx);
            v.var_cost = optional_or<double>(jv, "var_cost", 0.0, ctx);
            v.invest_cost = require<double>(jv, "invest_cost", ctx);
            v.initial_mw = optional_or<double>(jv, "initial_mw", 0.0, ctx);
            v.max_new_mw = optional_or<double>(jv, "max_new_mw", 0.0, ctx);
            const json& profiles = require<json>(jv, "profiles", ctx);
            v.availability.resize(scenario_ids.size());
            for (size_t w = 0; w < scenario_ids.size(); ++w) {
                if (!profiles.contains(scenario_ids[w]))
                    throw InstanceError(ctx + ".profiles: missing scenario '" + scenario_ids[w] +
                                        "'");
                v.availability[w] = read_profile_csv(
                    (base / profiles.at(scenario_ids[w]).get<std::string>()).string());
            }
            spec.renewable.push_back(std::move(v));
        }

    for (const json& js : jscen) {
        Scenario sc;
        sc.id = require<std::string>(js, "id", "scenarios");
        const std::string ctx = "scenarios." + sc.id;
        sc.probability = require<double>(js, "probability", ctx);
        sc.demand.assign(spec.num_buses(), {});
        const json& dp = require<json>(js, "demand_profiles", ctx);
        for (auto it = dp.begin(); it != dp.end(); ++it) {
            int b = bus_of(it.key(), ctx + ".demand_profiles");
            sc.demand[b] = read_profile_csv((base / it.value().get<std::string>()).string());
        }
        sc.reserve_up = hourly_series(js, "reserve_up", spec.grid.hours, ctx);
        sc.reserve_down = hourly_series(js, "reserve_down", spec.grid.hours, ctx);
        spec.scenarios.push_back(std::move(sc));
    }

    return spec;
}

}  // namespace flexplan
