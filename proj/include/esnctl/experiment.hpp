#pragma once

#include <optional>
#include <string>
#include <vector>

#include "esnctl/dataset.hpp"
#include "esnctl/model.hpp"
#include "esnctl/mpc.hpp"
#include "esnctl/plant.hpp"
#include "esnctl/reduce.hpp"

namespace esnctl {

/// Everything a full experiment needs, round-trippable through JSON so each
/// run can embed the exact configuration it resolved.
struct ExperimentConfig {
    struct Reservoir {
        int n = 300;
        double density = 0.05;
        std::uint64_t seed = 42;
        std::string scaling_mode = "norm";  // "norm" | "radius"
        double target = 0.9;
    } reservoir;

    struct Training {
        std::string washout = "auto";  // "auto" | "fixed"
        int washout_fixed = 200;
        std::string lambda_rule = "grid";  // "grid" | "fixed"
        double lambda_fixed = 0.0;
        int grid_points = 16;
        double grid_min_factor = 1e-5;  // smallest lambda as fraction of lambda_max
        double grid_max_factor = 0.5;   // largest lambda as fraction of lambda_max
        double selection_margin = 5.0;  // allowed validation fitting loss, points
    } training;

    struct Excitation {
        double level_min = 12.7;
        double level_max = 16.7;
        int levels = 5;
        double fast_period = 10.0;
        double slow_period = 1000.0;
        double mix = 0.5;
        double duration = 40000.0;
        std::uint64_t train_seed = 1001;
        std::uint64_t val_seed = 2002;
    } excitation;

    struct Mpc {
        int horizon = 20;
        double t_s = 10.0;
        double q = 2.0;
        double r = 1.0;
        double u_min = 12.7;
        double u_max = 16.7;
        double solver_tol = 1e-9;
        int solver_max_iter = 400;
        std::string state_update = "measured";  // "measured" | "predicted"
    } mpc;

    struct Step {
        double time = 0.0;
        double value = 0.0;
    };

    struct Scenario {
        double duration = 10000.0;
        double initial_u = 15.556;
        std::vector<Step> reference = {
            {0.0, 7.0}, {500.0, 8.0}, {2000.0, 7.5}, {3500.0, 6.5}, {5000.0, 7.0}};
        std::vector<Step> disturbance = {{6000.0, 0.45}, {7000.0, 0.85}, {8000.0, 0.35}};
    } scenario;

    struct Plant {
        double q1 = 16.6;
        double q2 = 0.55;
        double substep = 1.0;
    } plant;

    static ExperimentConfig load(const std::string& path);
    void save(const std::string& path) const;
    std::string to_json_string() const;
    static ExperimentConfig from_json_string(const std::string& text);

    /// Re-derives the reservoir and excitation seeds from one master seed.
    void apply_seed(std::uint64_t seed);

    MpcConfig mpc_config() const;
    MprsConfig mprs_config(std::uint64_t seed) const;
    PhParams ph_params() const;
    ScalingMode scaling_mode() const;
};

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

struct ExciteResult {
    Dataset train;
    Dataset val;
};

/// Open-loop plant run under the multilevel excitation, one realization per
/// seed. The plant starts from the equilibrium of the first level.
ExciteResult run_excite(const ExperimentConfig& cfg);

/// Free-run fitting on a dataset, skipping its washout prefix so the
/// arbitrary initial network state does not pollute the score.
double validation_fitting(const ReservoirWeights& w, const ReadoutWeights& rw,
                          const Dataset& scaled);

/// One Table-style row of the identification comparison.
struct FittingRow {
    std::string algorithm;
    int n = 0;
    double fitting = 0.0;
};

std::string format_fitting_table(const std::vector<FittingRow>& rows);

struct IdentifyResult {
    StabilityCertificate certificate;
    int k0 = 0;
    double lambda_selected = 0.0;
    double fit_ls = 0.0;      // variant 1
    double fit_lasso = 0.0;   // variant 2 (step 1)
    double fit_pruned = 0.0;  // variant 2 (step 1-2)
    double fit_full = 0.0;    // variant 2 full
    EsnModel model_ls;
    EsnModel model_lasso;
    EsnModel model_pruned;
    EsnModel model_reduced;
    ReductionReport report;
    std::vector<FittingRow> rows;
};

/// Runs the whole identification comparison: least squares, the l1-trained
/// readout at the grid-selected lambda, the pruned-but-not-retrained network
/// and the pruned+retrained one.
IdentifyResult run_identify(const ExperimentConfig& cfg, const Dataset& train,
                            const Dataset& val);

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

struct ScenarioResult {
    std::vector<LogRecord> records;
    double t_s = 0.0;
    int bound_violations = 0;
    double mean_solve_time = 0.0;
    double max_solve_time = 0.0;
};

/// Tracking/disturbance scenario against the pH plant.
ScenarioResult run_closed_loop(const EsnModel& model, const ExperimentConfig& cfg);

/// Same loop against any plant (used by the synthetic offset-free check).
ScenarioResult run_closed_loop_plant(const EsnModel& model, const MpcConfig& mpc_cfg,
                                     DiscretePlant& plant,
                                     const std::vector<ExperimentConfig::Step>& reference,
                                     double duration, double initial_u);

struct SegmentStats {
    double t_start = 0.0;
    double t_end = 0.0;
    double y_ref = 0.0;        // reference active at the segment end
    double ss_error = 0.0;     // mean |y_sys - y_ref| over the closing samples
    double max_error = 0.0;
    double settle_time = 0.0;  // first time the error stays inside the band
};

/// Splits the record stream at every reference/disturbance event and reports
/// per-segment steady-state behavior.
std::vector<SegmentStats> summarize_segments(const ScenarioResult& run,
                                             const ExperimentConfig& cfg,
                                             double band = 0.02, int tail_samples = 5);

std::string format_summary(const std::vector<SegmentStats>& segs,
                           const ScenarioResult& run);

void write_log_csv(const ScenarioResult& run, const std::string& path,
                   const std::vector<std::string>& header_comments = {});

struct BenchResult {
    double mean_full = 0.0;
    double mean_reduced = 0.0;
    double median_full = 0.0;
    double median_reduced = 0.0;
    double reduction_percent = 0.0;
    std::size_t steps = 0;
};

/// Runs the identical scenario against both models, serially for timing
/// fidelity, and compares per-step solver times.
BenchResult run_bench(const EsnModel& full, const EsnModel& reduced,
                      const ExperimentConfig& cfg);

std::string format_bench(const BenchResult& b);

}  // namespace esnctl
