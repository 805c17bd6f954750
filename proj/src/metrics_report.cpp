#include "flexplan/metrics_report.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace flexplan {

namespace {

std::string money(double dollars) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", dollars / 1e6);
    return buf;
}

std::string raw(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

const ReportRow* RunReport::find(ModelKind kind, int stage) const {
    for (const ReportRow& r : rows)
        if (r.kind == kind && r.stage == stage) return &r;
    return nullptr;
}

ReportRow compute_metrics_stage1(const SystemSpec& spec, const Stage1Solution& sol) {
    ReportRow row;
    row.kind = sol.kind;
    row.stage = 1;
    row.invest_ess = sol.breakdown.invest_ess;
    row.invest_thermal = sol.breakdown.invest_thermal;
    row.invest_vres = sol.breakdown.invest_vres;
    row.operating_cost = sol.breakdown.operating;
    row.total_cost = sol.breakdown.total();
    row.cpu_seconds = sol.stats.wall_seconds;

    double available = 0.0, delivered = 0.0;
    for (int w = 0; w < spec.num_scenarios(); ++w) {
        const double pi = spec.scenarios[w].probability;
        for (int t = 1; t <= spec.grid.hours; ++t) {
            for (int g = 0; g < spec.num_thermal(); ++g)
                row.co2_tons += pi * spec.thermal[g].emission_rate *
                                sol.ehat[w][spec.tech_index_thermal(g)][t];
            for (int v = 0; v < spec.num_renewable(); ++v) {
                const int j = spec.tech_index_renewable(v);
                double cap = spec.renewable[v].initial_mw + sol.investments[j];
                available += pi * spec.renewable_hourly[w][v].energy[t] * cap;
                delivered += pi * sol.ehat[w][j][t];
            }
        }
    }
    row.curtailment_pct =
        available > 1e-9 ? 100.0 * (available - delivered) / available : 0.0;
    return row;
}

ReportRow compute_metrics_stage2(const SystemSpec& spec, const Stage1Solution& sol,
                                 const StageTwoResult& stage2) {
    ReportRow row;
    row.kind = sol.kind;
    row.stage = 2;
    row.invest_ess = sol.breakdown.invest_ess;
    row.invest_thermal = sol.breakdown.invest_thermal;
    row.invest_vres = sol.breakdown.invest_vres;
    row.operating_cost = stage2.operating_cost;
    row.total_cost = row.invest_ess + row.invest_thermal + row.invest_vres + row.operating_cost;
    row.cpu_seconds = stage2.wall_seconds;
    row.nse_mwh = stage2.nse_mwh;

    const double dt = spec.grid.sub_step_minutes / 60.0;
    double available = 0.0, delivered = 0.0;
    for (int w = 0; w < spec.num_scenarios(); ++w) {
        const double pi = spec.scenarios[w].probability;
        const DispatchResult& d = stage2.scenarios[w];
        for (int k = 0; k < spec.grid.num_steps(); ++k) {
            for (int g = 0; g < spec.num_thermal(); ++g)
                row.co2_tons +=
                    pi * spec.thermal[g].emission_rate * d.thermal_mw[g][k] * dt;
            for (int v = 0; v < spec.num_renewable(); ++v) {
                double cap = spec.renewable[v].initial_mw +
                             sol.investments[spec.tech_index_renewable(v)];
                available += pi * spec.renewable[v].availability[w][k] * cap * dt;
                delivered += pi * d.renewable_mw[v][k] * dt;
            }
        }
    }
    row.curtailment_pct =
        available > 1e-9 ? 100.0 * (available - delivered) / available : 0.0;
    return row;
}

std::string report_csv(const RunReport& report) {
    std::ostringstream os;
    os << "model,stage,total_cost_musd,ess_invest_musd,thermal_invest_musd,vres_invest_musd,"
          "operating_cost_musd,co2_tons,curtailment_pct,nse_mwh,"
          "total_cost_usd,operating_cost_usd,cpu_seconds\n";
    for (const ReportRow& r : report.rows) {
        os << to_string(r.kind) << ',' << r.stage << ',' << money(r.total_cost) << ','
           << money(r.invest_ess) << ',' << money(r.invest_thermal) << ','
           << money(r.invest_vres) << ',' << money(r.operating_cost) << ',' << raw(r.co2_tons)
           << ',' << raw(r.curtailment_pct) << ',' << raw(r.nse_mwh) << ','
           << raw(r.total_cost) << ',' << raw(r.operating_cost) << ',' << raw(r.cpu_seconds)
           << '\n';
    }
    return os.str();
}

std::string comparison_csv(const RunReport& report) {
    std::ostringstream os;
    os << "metric,stage";
    std::vector<ModelKind> kinds = {ModelKind::EB, ModelKind::EBs, ModelKind::PB,
                                    ModelKind::SRPB};
    for (ModelKind k : kinds) os << ',' << to_string(k);
    for (ModelKind k : kinds)
        if (k != ModelKind::EB) os << ',' << to_string(k) << "_vs_eb_pct";
    os << '\n';

    auto emit = [&](const std::string& metric, int stage, auto getter) {
        os << metric << ',' << stage;
        const ReportRow* eb = report.find(ModelKind::EB, stage);
        for (ModelKind k : kinds) {
            const ReportRow* r = report.find(k, stage);
            os << ',';
            if (r) os << raw(getter(*r));
        }
        for (ModelKind k : kinds) {
            if (k == ModelKind::EB) continue;
            const ReportRow* r = report.find(k, stage);
            os << ',';
            if (r && eb && std::abs(getter(*eb)) > 1e-12)
                os << raw(100.0 * (getter(*r) - getter(*eb)) / getter(*eb));
        }
        os << '\n';
    };
    for (int stage : {1, 2}) {
        emit("total_cost_usd", stage, [](const ReportRow& r) { return r.total_cost; });
        emit("invest_usd", stage,
             [](const ReportRow& r) { return r.invest_ess + r.invest_thermal + r.invest_vres; });
        emit("operating_cost_usd", stage,
             [](const ReportRow& r) { return r.operating_cost; });
        emit("co2_tons", stage, [](const ReportRow& r) { return r.co2_tons; });
        emit("curtailment_pct", stage, [](const ReportRow& r) { return r.curtailment_pct; });
    }
    return os.str();
}

std::string deviation_histogram_csv(const SystemSpec& spec, const StageTwoResult& stage2) {
    static const std::array<double, 9> edges = {-10.0, -5.0, -3.0, -1.0, 0.0,
                                                1.0,   3.0,  5.0,  10.0};
    std::vector<double> mass(edges.size() + 1, 0.0);
    double upward = 0.0, downward = 0.0;
    for (int w = 0; w < spec.num_scenarios(); ++w) {
        const double pi = spec.scenarios[w].probability;
        for (int t = 1; t <= spec.grid.hours; ++t) {
            double pct = stage2.scenarios[w].deviation_pct[t];
            size_t bucket = 0;
            while (bucket < edges.size() && pct >= edges[bucket]) ++bucket;
            mass[bucket] += pi;
            if (pct > 0) upward += pi * pct;
            if (pct < 0) downward -= pi * pct;
        }
    }
    std::ostringstream os;
    os << "bucket,mass\n";
    os << "<-10," << raw(mass[0]) << '\n';
    for (size_t i = 0; i + 1 < edges.size(); ++i)
        os << '[' << edges[i] << ';' << edges[i + 1] << ")," << raw(mass[i + 1]) << '\n';
    os << ">=10," << raw(mass[edges.size()]) << '\n';
    os << "upward_pct_mass," << raw(upward) << '\n';
    os << "downward_pct_mass," << raw(downward) << '\n';
    return os.str();
}

std::string soc_series_csv(const SystemSpec& spec, const DispatchResult& dispatch) {
    std::ostringstream os;
    os << "step";
    for (int s = 0; s < spec.num_storage(); ++s) os << ',' << spec.storage[s].id;
    os << '\n';
    for (int k = 0; k < spec.grid.num_steps(); ++k) {
        os << (k + 1);
        for (int s = 0; s < spec.num_storage(); ++s) os << ',' << raw(dispatch.soc_mwh[s][k]);
        os << '\n';
    }
    return os.str();
}

}  // namespace flexplan
