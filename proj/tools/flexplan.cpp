// Command-line surface: instance validation and full planning runs
// (stage 1, decision fixing, 5-minute redispatch, reports).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "flexplan/instance_io.hpp"
#include "flexplan/lp_io.hpp"
#include "flexplan/metrics_report.hpp"
#include "flexplan/planning_pipeline.hpp"
#include "flexplan/realtime_dispatch.hpp"
#include "flexplan/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flexplan;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitSolver = 4;

void emit_error(const std::string& kind, const std::string& message) {
    json err = {{"error", kind}, {"message", message}};
    std::cerr << err.dump() << "\n";
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct RunFlags {
    std::string instance;
    std::string models = "pb";
    double tau = 5.0;
    double gap = 0.001;
    double time_limit = 86400.0;
    bool soc_floor = false;
    bool double_ramps = false;
    bool integer_storage = false;
    bool no_network_stage2 = false;
    bool dump_lp = false;
    uint64_t seed = 0;
    std::string out = "out";
    bool unfix_gamma = false;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << content;
}

std::string stage1_schedule_csv(const SystemSpec& spec, const Stage1Solution& sol) {
    std::ostringstream os;
    os << "scenario,hour,asset,u,y,z,ehat,phat,rup,rdn,charge_mwh,soc_mwh\n";
    for (int w = 0; w < spec.num_scenarios(); ++w)
        for (int t = 1; t <= spec.grid.hours; ++t) {
            for (int g = 0; g < spec.num_thermal(); ++g) {
                const int j = spec.tech_index_thermal(g);
                os << spec.scenarios[w].id << ',' << t << ',' << spec.thermal[g].id << ','
                   << fmt(sol.u[w][g][t]) << ',' << fmt(sol.y[w][g][t]) << ','
                   << fmt(sol.z[w][g][t]) << ',' << fmt(sol.ehat[w][j][t]) << ','
                   << (sol.phat.empty() ? "" : fmt(sol.phat[w][j][t])) << ','
                   << fmt(sol.rup[w][j][t]) << ',' << fmt(sol.rdn[w][j][t]) << ",,\n";
            }
            for (int s = 0; s < spec.num_storage(); ++s) {
                const int j = spec.tech_index_storage(s);
                os << spec.scenarios[w].id << ',' << t << ',' << spec.storage[s].id << ",,,,"
                   << fmt(sol.ehat[w][j][t]) << ','
                   << (sol.phat.empty() ? "" : fmt(sol.phat[w][j][t])) << ','
                   << fmt(sol.rup[w][j][t]) << ',' << fmt(sol.rdn[w][j][t]) << ','
                   << fmt(sol.chat[w][s][t]) << ',' << fmt(sol.phi[w][s][t]) << '\n';
            }
            for (int v = 0; v < spec.num_renewable(); ++v) {
                const int j = spec.tech_index_renewable(v);
                os << spec.scenarios[w].id << ',' << t << ',' << spec.renewable[v].id << ",,,,"
                   << fmt(sol.ehat[w][j][t]) << ','
                   << (sol.phat.empty() ? "" : fmt(sol.phat[w][j][t])) << ",,,,\n";
            }
        }
    return os.str();
}

json stage1_solution_json(const SystemSpec& spec, const Stage1Solution& sol) {
    json j;
    j["model"] = to_string(sol.kind);
    j["status"] = to_string(sol.stats.status);
    j["objective"] = sol.stats.objective;
    j["gap"] = sol.stats.gap;
    j["nodes"] = sol.stats.nodes;
    j["lp_iterations"] = sol.stats.lp_iterations;
    if (sol.has_stage1a) j["stage1a_objective"] = sol.stage1a_objective;
    json inv = json::object();
    for (int g = 0; g < spec.num_thermal(); ++g)
        inv[spec.thermal[g].id] = sol.investments[spec.tech_index_thermal(g)];
    for (int s = 0; s < spec.num_storage(); ++s)
        inv[spec.storage[s].id] = sol.investments[spec.tech_index_storage(s)];
    for (int v = 0; v < spec.num_renewable(); ++v)
        inv[spec.renewable[v].id] = sol.investments[spec.tech_index_renewable(v)];
    j["investments"] = inv;
    j["cost_breakdown"] = {{"invest_thermal", sol.breakdown.invest_thermal},
                           {"invest_ess", sol.breakdown.invest_ess},
                           {"invest_vres", sol.breakdown.invest_vres},
                           {"operating", sol.breakdown.operating},
                           {"total", sol.breakdown.total()}};
    return j;
}

std::string dispatch_csv(const SystemSpec& spec, const DispatchResult& d) {
    std::ostringstream os;
    os << "step,asset,value_mw\n";
    for (int k = 0; k < spec.grid.num_steps(); ++k) {
        for (int g = 0; g < spec.num_thermal(); ++g)
            os << (k + 1) << ',' << spec.thermal[g].id << ',' << fmt(d.thermal_mw[g][k])
               << '\n';
        for (int s = 0; s < spec.num_storage(); ++s) {
            os << (k + 1) << ',' << spec.storage[s].id << "_discharge,"
               << fmt(d.discharge_mw[s][k]) << '\n';
            os << (k + 1) << ',' << spec.storage[s].id << "_charge,"
               << fmt(d.charge_mw[s][k]) << '\n';
        }
        for (int v = 0; v < spec.num_renewable(); ++v)
            os << (k + 1) << ',' << spec.renewable[v].id << ',' << fmt(d.renewable_mw[v][k])
               << '\n';
        if (d.nse_mw[k] != 0.0) os << (k + 1) << ",nse," << fmt(d.nse_mw[k]) << '\n';
        if (d.spill_mw[k] != 0.0) os << (k + 1) << ",spill," << fmt(d.spill_mw[k]) << '\n';
    }
    return os.str();
}

std::string deviations_csv(const SystemSpec& spec, const DispatchResult& d) {
    std::ostringstream os;
    os << "hour,deviation_mwh,deviation_pct\n";
    for (int t = 1; t <= spec.grid.hours; ++t)
        os << t << ',' << fmt(d.deviation_mwh[t]) << ',' << fmt(d.deviation_pct[t]) << '\n';
    os << "step,deviation_mw,\n";
    for (int k = 0; k < spec.grid.num_steps(); ++k)
        os << (k + 1) << ',' << fmt(d.deviation_step_mw[k]) << ",\n";
    return os.str();
}

int do_run(const RunFlags& flags) {
    // Configuration checks mirror the instance validation exit code.
    if (!(flags.gap > 0.0 && flags.gap <= 0.1)) {
        emit_error("validation", "gap must lie in (0, 0.1]");
        return kExitValidation;
    }
    if (flags.tau <= 0 || 60.0 / flags.tau != std::floor(60.0 / flags.tau) ||
        std::floor(flags.tau) != flags.tau) {
        emit_error("validation", "60 mod tau != 0");
        return kExitValidation;
    }
    std::vector<ModelKind> kinds;
    {
        std::stringstream ss(flags.models);
        std::string item;
        std::set<std::string> seen;
        while (std::getline(ss, item, ',')) {
            if (item.empty() || !seen.insert(item).second) continue;
            try {
                kinds.push_back(model_kind_from_string(item));
            } catch (const std::exception& e) {
                emit_error("validation", e.what());
                return kExitValidation;
            }
        }
        if (kinds.empty()) {
            emit_error("validation", "at least one model kind required");
            return kExitValidation;
        }
    }

    SystemSpec spec;
    try {
        spec = load_instance(flags.instance);
    } catch (const std::exception& e) {
        emit_error("parse", e.what());
        return kExitParse;
    }
    spec.grid.sub_step_minutes = static_cast<int>(flags.tau);
    if (flags.double_ramps)
        for (ThermalTech& th : spec.thermal) {
            th.ramp_up *= 2.0;
            th.ramp_down *= 2.0;
        }
    ValidationReport rep = validate_system(spec);
    if (!rep.ok()) {
        emit_error("validation", rep.joined());
        return kExitValidation;
    }

    fs::create_directories(flags.out);
    json manifest = {{"instance", flags.instance},
                     {"models", flags.models},
                     {"tau_minutes", flags.tau},
                     {"gap", flags.gap},
                     {"time_limit_s", flags.time_limit},
                     {"soc_floor", flags.soc_floor},
                     {"double_ramps", flags.double_ramps},
                     {"integer_storage", flags.integer_storage},
                     {"no_network_stage2", flags.no_network_stage2},
                     {"unfix_gamma", flags.unfix_gamma},
                     {"seed", flags.seed},
                     {"solver", solver_by_name().name()},
                     {"out", flags.out}};
    write_file(fs::path(flags.out) / "manifest.json", manifest.dump(2) + "\n");

    PipelineOptions popt;
    popt.build.tau_minutes = flags.tau;
    popt.build.integer_storage_investment = flags.integer_storage;
    popt.gap = flags.gap;
    popt.time_limit_s = flags.time_limit;
    popt.seed = flags.seed;
    DispatchOptions dopt;
    dopt.soc_floor = flags.soc_floor;
    dopt.enforce_network = !flags.no_network_stage2;
    dopt.fix_storage_mode = !flags.unfix_gamma;

    RunReport report;
    json timings = json::object();
    for (ModelKind kind : kinds) {
        fs::path dir = fs::path(flags.out) / to_string(kind);
        fs::create_directories(dir);
        try {
            if (flags.dump_lp) {
                BuiltModel built = build_stage1_model(spec, kind, popt.build);
                write_file(dir / "stage1.lp", write_lp(built.model));
            }
            Stage1Solution sol = run_stage1(spec, kind, popt);
            write_file(dir / "stage1_solution.json",
                       stage1_solution_json(spec, sol).dump(2) + "\n");
            write_file(dir / "stage1_schedule.csv", stage1_schedule_csv(spec, sol));
            StageTwoResult s2 = run_dispatch(spec, sol, dopt);
            for (int w = 0; w < spec.num_scenarios(); ++w) {
                const std::string sid = spec.scenarios[w].id;
                write_file(dir / ("dispatch_" + sid + ".csv"),
                           dispatch_csv(spec, s2.scenarios[w]));
                write_file(dir / ("deviations_" + sid + ".csv"),
                           deviations_csv(spec, s2.scenarios[w]));
                write_file(dir / ("soc_" + sid + ".csv"),
                           soc_series_csv(spec, s2.scenarios[w]));
            }
            write_file(dir / "deviation_histogram.csv",
                       deviation_histogram_csv(spec, s2));
            report.rows.push_back(compute_metrics_stage1(spec, sol));
            report.rows.push_back(compute_metrics_stage2(spec, sol, s2));
            timings[to_string(kind)] = {{"stage1_s", sol.stats.wall_seconds},
                                        {"stage2_s", s2.wall_seconds},
                                        {"nodes", sol.stats.nodes},
                                        {"lp_iterations", sol.stats.lp_iterations}};
        } catch (const PipelineError& e) {
            emit_error("solver", std::string(to_string(kind)) + ": " + e.what());
            return kExitSolver;
        } catch (const std::invalid_argument& e) {
            emit_error("validation", std::string(to_string(kind)) + ": " + e.what());
            return kExitValidation;
        }
    }
    write_file(fs::path(flags.out) / "report.csv", report_csv(report));
    write_file(fs::path(flags.out) / "compare.csv", comparison_csv(report));
    write_file(fs::path(flags.out) / "timings.json", timings.dump(2) + "\n");
    std::cout << report_csv(report);
    return 0;
}

int do_validate(const std::string& instance) {
    SystemSpec spec;
    try {
        spec = load_instance(instance);
    } catch (const std::exception& e) {
        emit_error("parse", e.what());
        return kExitParse;
    }
    ValidationReport rep = validate_system(spec);
    if (!rep.ok()) {
        for (const std::string& e : rep.errors) std::cerr << "error: " << e << "\n";
        emit_error("validation", rep.joined());
        return kExitValidation;
    }
    std::cout << "OK, " << spec.num_buses() << (spec.num_buses() == 1 ? " bus, " : " buses, ")
              << spec.num_lines() << (spec.num_lines() == 1 ? " line, " : " lines, ")
              << spec.num_tech() << (spec.num_tech() == 1 ? " tech, " : " techs, ")
              << spec.num_scenarios()
              << (spec.num_scenarios() == 1 ? " scenario, " : " scenarios, ")
              << spec.grid.hours << " h\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flexplan: generation expansion planning with hourly unit commitment and "
                 "5-minute redispatch validation"};
    app.require_subcommand(1);

    RunFlags flags;
    CLI::App* run = app.add_subcommand("run", "solve the planning pipeline");
    run->add_option("instance", flags.instance, "instance JSON file or directory")->required();
    run->add_option("--models", flags.models, "comma list of eb,ebs,pb,sr-pb");
    run->add_option("--tau", flags.tau, "flexibility sub-step in minutes");
    run->add_option("--gap", flags.gap, "relative MIP gap");
    run->add_option("--time-limit", flags.time_limit, "seconds per solve");
    run->add_flag("--soc-floor", flags.soc_floor,
                  "stage-2 end-of-hour SoC floored at the stage-1 level");
    run->add_flag("--double-ramps", flags.double_ramps, "double thermal ramp capabilities");
    run->add_flag("--integer-storage", flags.integer_storage,
                  "integer MW blocks for storage/vRES investment");
    run->add_flag("--no-network-stage2", flags.no_network_stage2,
                  "drop flow limits from the 5-minute dispatch");
    run->add_flag("--dump-lp", flags.dump_lp, "export stage-1 models in LP format");
    run->add_flag("--unfix-gamma", flags.unfix_gamma,
                  "leave charge/discharge mode free in stage 2");
    run->add_option("--seed", flags.seed, "solver seed echoed into the manifest");
    run->add_option("--out", flags.out, "output directory");

    std::string validate_path;
    CLI::App* val = app.add_subcommand("validate", "check an instance and print its shape");
    val->add_option("instance", validate_path, "instance JSON file or directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    try {
        if (run->parsed()) return do_run(flags);
        if (val->parsed()) return do_validate(validate_path);
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return kExitSolver;
    }
    return kExitParse;
}
