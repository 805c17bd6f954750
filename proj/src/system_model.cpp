#include "flexplan/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace flexplan {

namespace {

constexpr double kProbTol = 1e-9;

std::string path(const std::string& group, int i, const std::string& field) {
    return group + "[" + std::to_string(i) + "]." + field;
}

}  // namespace

int SystemSpec::bus_of_tech(int j) const {
    if (j < num_thermal()) return thermal[j].bus;
    j -= num_thermal();
    if (j < num_storage()) return storage[j].bus;
    j -= num_storage();
    return renewable[j].bus;
}

std::string ValidationReport::joined() const {
    std::ostringstream os;
    for (size_t i = 0; i < errors.size(); ++i) {
        if (i) os << "; ";
        os << errors[i];
    }
    return os.str();
}

Trajectory derive_trajectories(const ThermalTech& tech) {
    Trajectory tr;
    if (tech.sd_duration <= 0)
        throw std::invalid_argument("derive_trajectories: nonpositive shutdown duration for '" +
                                    tech.id + "'");
    for (int d : tech.su_duration)
        if (d <= 0)
            throw std::invalid_argument("derive_trajectories: nonpositive startup duration for '" +
                                        tech.id + "'");
    const double pmin = tech.pmin;
    tr.su_power.resize(tech.su_duration.size());
    tr.su_energy.resize(tech.su_duration.size());
    for (size_t k = 0; k < tech.su_duration.size(); ++k) {
        int d = tech.su_duration[k];
        tr.su_power[k].resize(d);
        tr.su_energy[k].resize(d);
        double prev = 0.0;
        for (int i = 1; i <= d; ++i) {
            double p = pmin * static_cast<double>(i) / d;
            tr.su_power[k][i - 1] = p;
            tr.su_energy[k][i - 1] = 0.5 * (prev + p);
            prev = p;
        }
    }
    const int sd = tech.sd_duration;
    tr.sd_power.resize(sd + 1);
    tr.sd_energy.resize(sd);
    for (int i = 1; i <= sd + 1; ++i)
        tr.sd_power[i - 1] = pmin * (1.0 - static_cast<double>(i - 1) / sd);
    for (int i = 0; i < sd; ++i) tr.sd_energy[i] = 0.5 * (tr.sd_power[i] + tr.sd_power[i + 1]);
    return tr;
}

HourlyAggregate aggregate_profiles(const std::vector<double>& five_min, const TimeGrid& grid) {
    const int spH = grid.steps_per_hour();
    const int T = grid.hours;
    if (static_cast<int>(five_min.size()) != T * spH)
        throw std::invalid_argument("aggregate_profiles: series length " +
                                    std::to_string(five_min.size()) + " != " +
                                    std::to_string(T * spH));
    HourlyAggregate agg;
    agg.boundary_power.assign(T + 1, 0.0);
    agg.energy.assign(T + 1, 0.0);
    agg.boundary_power[0] = five_min.empty() ? 0.0 : five_min[0];
    for (int t = 1; t <= T; ++t) {
        double sum = 0.0;
        for (int k = 0; k < spH; ++k) sum += five_min[(t - 1) * spH + k];
        agg.energy[t] = sum / spH;
        agg.boundary_power[t] = five_min[t * spH - 1];
    }
    return agg;
}

std::vector<std::vector<double>> compute_shift_factors(const NetworkSpec& network) {
    const int nb = static_cast<int>(network.buses.size());
    const int nl = static_cast<int>(network.lines.size());
    for (const Line& l : network.lines)
        if (l.reactance <= 0.0)
            throw std::invalid_argument("compute_shift_factors: nonpositive reactance on line '" +
                                        l.id + "'");
    if (network.slack_bus < 0 || network.slack_bus >= nb)
        throw std::invalid_argument("compute_shift_factors: slack bus out of range");

    // Connectivity check.
    std::vector<std::vector<int>> adj(nb);
    for (const Line& l : network.lines) {
        adj[l.from].push_back(l.to);
        adj[l.to].push_back(l.from);
    }
    std::vector<char> seen(nb, 0);
    std::vector<int> stack = {network.slack_bus};
    seen[network.slack_bus] = 1;
    while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        for (int nb2 : adj[b])
            if (!seen[nb2]) {
                seen[nb2] = 1;
                stack.push_back(nb2);
            }
    }
    for (int b = 0; b < nb; ++b)
        if (!seen[b])
            throw std::invalid_argument("compute_shift_factors: bus '" + network.buses[b].id +
                                        "' is disconnected from the slack bus");

    // Reduced susceptance matrix (slack row/column removed).
    const int slack = network.slack_bus;
    auto red = [&](int b) { return b < slack ? b : b - 1; };
    const int n = nb - 1;
    std::vector<std::vector<double>> B(n, std::vector<double>(n, 0.0));
    for (const Line& l : network.lines) {
        double y = 1.0 / l.reactance;
        if (l.from != slack && l.to != slack) {
            B[red(l.from)][red(l.from)] += y;
            B[red(l.to)][red(l.to)] += y;
            B[red(l.from)][red(l.to)] -= y;
            B[red(l.to)][red(l.from)] -= y;
        } else {
            int other = l.from == slack ? l.to : l.from;
            B[red(other)][red(other)] += y;
        }
    }
    // Dense inverse via Gauss-Jordan; planning networks stay small.
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(B[i][k]) > std::abs(B[piv][k])) piv = i;
        if (std::abs(B[piv][k]) < 1e-12)
            throw std::invalid_argument("compute_shift_factors: singular reduced susceptance matrix");
        std::swap(B[piv], B[k]);
        std::swap(inv[piv], inv[k]);
        double d = B[k][k];
        for (int j = 0; j < n; ++j) {
            B[k][j] /= d;
            inv[k][j] /= d;
        }
        for (int i = 0; i < n; ++i) {
            if (i == k || B[i][k] == 0.0) continue;
            double f = B[i][k];
            for (int j = 0; j < n; ++j) {
                B[i][j] -= f * B[k][j];
                inv[i][j] -= f * inv[k][j];
            }
        }
    }
    std::vector<std::vector<double>> gamma(nl, std::vector<double>(nb, 0.0));
    for (int li = 0; li < nl; ++li) {
        const Line& l = network.lines[li];
        double y = 1.0 / l.reactance;
        for (int b = 0; b < nb; ++b) {
            if (b == slack) continue;
            double theta_from = l.from == slack ? 0.0 : inv[red(l.from)][red(b)];
            double theta_to = l.to == slack ? 0.0 : inv[red(l.to)][red(b)];
            gamma[li][b] = y * (theta_from - theta_to);
        }
    }
    return gamma;
}

ValidationReport validate_system(SystemSpec& spec) {
    ValidationReport rep;
    auto err = [&rep](const std::string& msg) { rep.errors.push_back(msg); };

    if (spec.grid.hours <= 0) err("grid.hours must be positive");
    if (spec.grid.sub_step_minutes <= 0 || 60 % spec.grid.sub_step_minutes != 0)
        err("grid.sub_step_minutes: 60 mod tau != 0");
    const int steps = spec.grid.hours > 0 && spec.grid.sub_step_minutes > 0 &&
                              60 % spec.grid.sub_step_minutes == 0
                          ? spec.grid.num_steps()
                          : -1;

    const int nb = spec.num_buses();
    if (nb == 0) err("network.buses: no buses");
    for (int i = 0; i < spec.num_lines(); ++i) {
        const Line& l = spec.network.lines[i];
        if (l.from < 0 || l.from >= nb) err(path("network.lines", i, "from") + ": unknown bus");
        if (l.to < 0 || l.to >= nb) err(path("network.lines", i, "to") + ": unknown bus");
        if (l.limit_mw <= 0) err(path("network.lines", i, "limit_mw") + ": must be positive");
        if (l.reactance <= 0) err(path("network.lines", i, "reactance") + ": must be positive");
    }
    if (spec.network.slack_bus < 0 || spec.network.slack_bus >= nb)
        err("network.slack_bus: out of range");

    for (int g = 0; g < spec.num_thermal(); ++g) {
        const ThermalTech& th = spec.thermal[g];
        const std::string grp = "thermal";
        if (th.bus < 0 || th.bus >= nb) err(path(grp, g, "bus") + ": unknown bus");
        if (th.pmin < 0 || th.pmax < th.pmin)
            err(path(grp, g, "pmax") + ": requires 0 <= pmin <= pmax");
        if (th.su_capability < th.pmin || th.su_capability > th.pmax)
            err(path(grp, g, "su_capability") + ": requires pmin <= SU <= pmax");
        if (th.sd_capability < th.pmin || th.sd_capability > th.pmax)
            err(path(grp, g, "sd_capability") + ": requires pmin <= SD <= pmax");
        if (th.ramp_up < 0 || th.ramp_down < 0)
            err(path(grp, g, "ramp_up") + ": ramps must be nonnegative");
        if (th.min_up < 1) err(path(grp, g, "min_up") + ": must be >= 1");
        if (th.min_down < 1) err(path(grp, g, "min_down") + ": must be >= 1");
        if (th.initial_units < 0) err(path(grp, g, "initial_units") + ": must be >= 0");
        if (th.max_new_units < 0) err(path(grp, g, "max_new_units") + ": must be >= 0");
        if (th.startup_segments.empty())
            err(path(grp, g, "startup_segments") + ": at least one segment required");
        if (th.su_duration.size() != th.startup_segments.size())
            err(path(grp, g, "su_duration") + ": one duration per startup segment required");
        for (size_t k = 0; k + 1 < th.startup_segments.size(); ++k) {
            if (th.startup_segments[k].offline_hours >= th.startup_segments[k + 1].offline_hours)
                err(path(grp, g, "startup_segments") +
                    ": offline-time thresholds must be strictly increasing (hot to cold)");
            if (th.startup_segments[k].cost > th.startup_segments[k + 1].cost)
                err(path(grp, g, "startup_segments") + ": costs must be nondecreasing");
        }
        for (const StartupSegment& seg : th.startup_segments)
            if (seg.offline_hours < 1)
                err(path(grp, g, "startup_segments") + ": thresholds must be >= 1 hour");
        if (th.start_class == StartClass::Quick) {
            for (int d : th.su_duration)
                if (d > 1)
                    err(path(grp, g, "su_duration") +
                        ": quick-start requires startup within one hour (SU_D <= 1)");
            if (th.sd_duration > 1)
                err(path(grp, g, "sd_duration") +
                    ": quick-start requires shutdown within one hour (SD_D <= 1)");
        } else {
            const double tol = 1e-9 * (1 + th.pmin);
            if (std::abs(th.su_capability - th.pmin) > tol ||
                std::abs(th.sd_capability - th.pmin) > tol)
                err(path(grp, g, "su_capability") + ": slow-start requires SU_g = SD_g = P_g");
            for (int d : th.su_duration)
                if (d < 1) err(path(grp, g, "su_duration") + ": must be >= 1 hour");
            if (th.sd_duration < 1) err(path(grp, g, "sd_duration") + ": must be >= 1 hour");
        }
    }

    for (int s = 0; s < spec.num_storage(); ++s) {
        const StorageTech& st = spec.storage[s];
        const std::string grp = "storage";
        if (st.bus < 0 || st.bus >= nb) err(path(grp, s, "bus") + ": unknown bus");
        if (!(st.efficiency > 0.0 && st.efficiency <= 1.0))
            err(path(grp, s, "efficiency") + ": efficiency out of (0,1]");
        if (st.energy_to_power <= 0) err(path(grp, s, "energy_to_power") + ": must be positive");
        if (st.initial_soc_fraction < 0 || st.initial_soc_fraction > 1)
            err(path(grp, s, "initial_soc_fraction") + ": must be in [0,1]");
        if (st.initial_mw < 0 || st.max_new_mw < 0)
            err(path(grp, s, "initial_mw") + ": capacities must be nonnegative");
    }

    for (int v = 0; v < spec.num_renewable(); ++v) {
        const RenewableTech& rv = spec.renewable[v];
        const std::string grp = "renewable";
        if (rv.bus < 0 || rv.bus >= nb) err(path(grp, v, "bus") + ": unknown bus");
        if (rv.initial_mw < 0 || rv.max_new_mw < 0)
            err(path(grp, v, "initial_mw") + ": capacities must be nonnegative");
        if (static_cast<int>(rv.availability.size()) != spec.num_scenarios())
            err(path(grp, v, "availability") + ": one profile per scenario required");
        for (size_t w = 0; w < rv.availability.size(); ++w) {
            if (steps > 0 && static_cast<int>(rv.availability[w].size()) != steps)
                err(path(grp, v, "availability") + ": profile length != horizon x " +
                    std::to_string(spec.grid.steps_per_hour()));
            for (double p : rv.availability[w])
                if (p < 0.0 || p > 1.0) {
                    err(path(grp, v, "availability") + ": values must lie in [0,1]");
                    break;
                }
        }
    }

    if (spec.scenarios.empty()) err("scenarios: no scenarios");
    double prob_sum = 0.0;
    for (int w = 0; w < spec.num_scenarios(); ++w) {
        const Scenario& sc = spec.scenarios[w];
        const std::string grp = "scenarios";
        prob_sum += sc.probability;
        if (sc.probability < 0) err(path(grp, w, "probability") + ": must be nonnegative");
        if (static_cast<int>(sc.demand.size()) != nb)
            err(path(grp, w, "demand") + ": one series per bus required (empty for no demand)");
        for (int b = 0; b < std::min(nb, static_cast<int>(sc.demand.size())); ++b) {
            const auto& series = sc.demand[b];
            if (series.empty()) {
                if (spec.network.buses[b].has_demand)
                    err(path(grp, w, "demand") + ": bus '" + spec.network.buses[b].id +
                        "' is a demand bus but has no series");
                continue;
            }
            if (steps > 0 && static_cast<int>(series.size()) != steps)
                err(path(grp, w, "demand") + ": series length != horizon x steps/hour at bus '" +
                    spec.network.buses[b].id + "'");
            for (double d : series)
                if (d < 0) {
                    err(path(grp, w, "demand") + ": demand must be nonnegative at bus '" +
                        spec.network.buses[b].id + "'");
                    break;
                }
        }
        if (static_cast<int>(sc.reserve_up.size()) != spec.grid.hours)
            err(path(grp, w, "reserve_up") + ": one value per hour required");
        if (static_cast<int>(sc.reserve_down.size()) != spec.grid.hours)
            err(path(grp, w, "reserve_down") + ": one value per hour required");
    }
    if (!spec.scenarios.empty() && std::abs(prob_sum - 1.0) > kProbTol)
        err("scenarios: probabilities sum to " + std::to_string(prob_sum) + ", expected 1");

    if (!rep.ok()) {
        spec.validated = false;
        return rep;
    }

    // Derived sets and data.
    spec.quick_units.clear();
    spec.slow_units.clear();
    spec.single_hour_units.clear();
    spec.trajectories.assign(spec.num_thermal(), Trajectory{});
    for (int g = 0; g < spec.num_thermal(); ++g) {
        const ThermalTech& th = spec.thermal[g];
        if (th.start_class == StartClass::Quick)
            spec.quick_units.push_back(g);
        else {
            spec.slow_units.push_back(g);
            spec.trajectories[g] = derive_trajectories(th);
        }
        if (th.min_up == 1) spec.single_hour_units.push_back(g);
    }

    if (spec.network.shift_factors.has_value()) {
        const auto& sf = *spec.network.shift_factors;
        bool shape_ok = static_cast<int>(sf.size()) == spec.num_lines();
        for (const auto& row : sf)
            shape_ok = shape_ok && static_cast<int>(row.size()) == nb;
        if (!shape_ok) {
            err("network.shift_factors: shape must be lines x buses");
        } else {
            for (int l = 0; l < spec.num_lines(); ++l) {
                if (std::abs(sf[l][spec.network.slack_bus]) > 1e-9)
                    err("network.shift_factors: slack-bus column must be zero");
                for (int b = 0; b < nb; ++b)
                    if (std::abs(sf[l][b]) > spec.network.shift_factor_bound)
                        err("network.shift_factors: |value| exceeds bound " +
                            std::to_string(spec.network.shift_factor_bound));
            }
            spec.shift_factors = sf;
        }
    } else if (spec.num_lines() > 0) {
        try {
            spec.shift_factors = compute_shift_factors(spec.network);
        } catch (const std::exception& e) {
            err(std::string("network: ") + e.what());
        }
    } else {
        spec.shift_factors.clear();
    }

    spec.demand_hourly.assign(spec.num_scenarios(), {});
    spec.renewable_hourly.assign(spec.num_scenarios(), {});
    for (int w = 0; w < spec.num_scenarios(); ++w) {
        spec.demand_hourly[w].resize(nb);
        for (int b = 0; b < nb; ++b) {
            if (spec.scenarios[w].demand[b].empty()) {
                spec.demand_hourly[w][b].boundary_power.assign(spec.grid.hours + 1, 0.0);
                spec.demand_hourly[w][b].energy.assign(spec.grid.hours + 1, 0.0);
            } else {
                spec.demand_hourly[w][b] = aggregate_profiles(spec.scenarios[w].demand[b], spec.grid);
            }
        }
        spec.renewable_hourly[w].resize(spec.num_renewable());
        for (int v = 0; v < spec.num_renewable(); ++v)
            spec.renewable_hourly[w][v] =
                aggregate_profiles(spec.renewable[v].availability[w], spec.grid);
    }

    spec.validated = rep.ok();
    return rep;
}

}  // namespace flexplan
