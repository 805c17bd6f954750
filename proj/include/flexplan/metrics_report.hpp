#pragma once

// Comparison-table production: cost decomposition, CO2 tons, curtailment,
// CPU time, deviation histograms, and SoC series, per model kind and stage.

#include <optional>
#include <string>
#include <vector>

#include "flexplan/planning_pipeline.hpp"
#include "flexplan/realtime_dispatch.hpp"

namespace flexplan {

struct ReportRow {
    ModelKind kind = ModelKind::PB;
    int stage = 1;  // 1 or 2
    double total_cost = 0.0;
    double invest_ess = 0.0;
    double invest_thermal = 0.0;
    double invest_vres = 0.0;
    double operating_cost = 0.0;
    double co2_tons = 0.0;
    double curtailment_pct = 0.0;
    double cpu_seconds = 0.0;
    double nse_mwh = 0.0;
};

struct RunReport {
    std::vector<ReportRow> rows;
    const ReportRow* find(ModelKind kind, int stage) const;
};

/// Stage-1 metrics from the extracted solution (costs recomputed from the
/// solution vector, never from the solver objective).
ReportRow compute_metrics_stage1(const SystemSpec& spec, const Stage1Solution& sol);

/// Stage-2 metrics from the dispatch series at 5-minute resolution.
ReportRow compute_metrics_stage2(const SystemSpec& spec, const Stage1Solution& sol,
                                 const StageTwoResult& stage2);

/// report.csv: one row per model x stage. Monetary columns appear twice:
/// rendered in M$ with two decimals and raw in $. The cpu_seconds column is
/// last and excluded from determinism comparisons.
std::string report_csv(const RunReport& report);

/// Side-by-side table plus percentage deltas of every model against EB;
/// missing rows leave explicit gaps.
std::string comparison_csv(const RunReport& report);

/// Fig-2-style histogram of per-hour percentage deviations (bucket edges in
/// percent, mass = probability-weighted hour counts).
std::string deviation_histogram_csv(const SystemSpec& spec, const StageTwoResult& stage2);

/// Gnuplot-friendly SoC series: step, one column per storage asset.
std::string soc_series_csv(const SystemSpec& spec, const DispatchResult& dispatch);

}  // namespace flexplan
