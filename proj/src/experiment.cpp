#include "esnctl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "esnctl/text_io.hpp"

namespace esnctl {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

json steps_to_json(const std::vector<ExperimentConfig::Step>& steps) {
    json arr = json::array();
    for (const auto& s : steps) arr.push_back({{"time", s.time}, {"value", s.value}});
    return arr;
}

std::vector<ExperimentConfig::Step> steps_from_json(const json& arr) {
    std::vector<ExperimentConfig::Step> steps;
    for (const auto& e : arr) steps.push_back({e.at("time"), e.at("value")});
    return steps;
}

}  // namespace

std::string ExperimentConfig::to_json_string() const {
    json j;
    j["reservoir"] = {{"n", reservoir.n},
                      {"density", reservoir.density},
                      {"seed", reservoir.seed},
                      {"scaling_mode", reservoir.scaling_mode},
                      {"target", reservoir.target}};
    j["training"] = {{"washout", training.washout},
                     {"washout_fixed", training.washout_fixed},
                     {"lambda_rule", training.lambda_rule},
                     {"lambda_fixed", training.lambda_fixed},
                     {"grid_points", training.grid_points},
                     {"grid_min_factor", training.grid_min_factor},
                     {"grid_max_factor", training.grid_max_factor},
                     {"selection_margin", training.selection_margin}};
    j["excitation"] = {{"level_min", excitation.level_min},
                       {"level_max", excitation.level_max},
                       {"levels", excitation.levels},
                       {"fast_period", excitation.fast_period},
                       {"slow_period", excitation.slow_period},
                       {"mix", excitation.mix},
                       {"duration", excitation.duration},
                       {"train_seed", excitation.train_seed},
                       {"val_seed", excitation.val_seed}};
    j["mpc"] = {{"horizon", mpc.horizon},
                {"t_s", mpc.t_s},
                {"q", mpc.q},
                {"r", mpc.r},
                {"u_min", mpc.u_min},
                {"u_max", mpc.u_max},
                {"solver_tol", mpc.solver_tol},
                {"solver_max_iter", mpc.solver_max_iter},
                {"state_update", mpc.state_update}};
    j["scenario"] = {{"duration", scenario.duration},
                     {"initial_u", scenario.initial_u},
                     {"reference", steps_to_json(scenario.reference)},
                     {"disturbance", steps_to_json(scenario.disturbance)}};
    j["plant"] = {{"q1", plant.q1}, {"q2", plant.q2}, {"substep", plant.substep}};
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;
    if (j.contains("reservoir")) {
        const auto& r = j["reservoir"];
        c.reservoir.n = r.value("n", c.reservoir.n);
        c.reservoir.density = r.value("density", c.reservoir.density);
        c.reservoir.seed = r.value("seed", c.reservoir.seed);
        c.reservoir.scaling_mode = r.value("scaling_mode", c.reservoir.scaling_mode);
        c.reservoir.target = r.value("target", c.reservoir.target);
    }
    if (j.contains("training")) {
        const auto& t = j["training"];
        c.training.washout = t.value("washout", c.training.washout);
        c.training.washout_fixed = t.value("washout_fixed", c.training.washout_fixed);
        c.training.lambda_rule = t.value("lambda_rule", c.training.lambda_rule);
        c.training.lambda_fixed = t.value("lambda_fixed", c.training.lambda_fixed);
        c.training.grid_points = t.value("grid_points", c.training.grid_points);
        c.training.grid_min_factor = t.value("grid_min_factor", c.training.grid_min_factor);
        c.training.grid_max_factor = t.value("grid_max_factor", c.training.grid_max_factor);
        c.training.selection_margin = t.value("selection_margin", c.training.selection_margin);
    }
    if (j.contains("excitation")) {
        const auto& e = j["excitation"];
        c.excitation.level_min = e.value("level_min", c.excitation.level_min);
        c.excitation.level_max = e.value("level_max", c.excitation.level_max);
        c.excitation.levels = e.value("levels", c.excitation.levels);
        c.excitation.fast_period = e.value("fast_period", c.excitation.fast_period);
        c.excitation.slow_period = e.value("slow_period", c.excitation.slow_period);
        c.excitation.mix = e.value("mix", c.excitation.mix);
        c.excitation.duration = e.value("duration", c.excitation.duration);
        c.excitation.train_seed = e.value("train_seed", c.excitation.train_seed);
        c.excitation.val_seed = e.value("val_seed", c.excitation.val_seed);
    }
    if (j.contains("mpc")) {
        const auto& m = j["mpc"];
        c.mpc.horizon = m.value("horizon", c.mpc.horizon);
        c.mpc.t_s = m.value("t_s", c.mpc.t_s);
        c.mpc.q = m.value("q", c.mpc.q);
        c.mpc.r = m.value("r", c.mpc.r);
        c.mpc.u_min = m.value("u_min", c.mpc.u_min);
        c.mpc.u_max = m.value("u_max", c.mpc.u_max);
        c.mpc.solver_tol = m.value("solver_tol", c.mpc.solver_tol);
        c.mpc.solver_max_iter = m.value("solver_max_iter", c.mpc.solver_max_iter);
        c.mpc.state_update = m.value("state_update", c.mpc.state_update);
    }
    if (j.contains("scenario")) {
        const auto& s = j["scenario"];
        c.scenario.duration = s.value("duration", c.scenario.duration);
        c.scenario.initial_u = s.value("initial_u", c.scenario.initial_u);
        if (s.contains("reference")) c.scenario.reference = steps_from_json(s["reference"]);
        if (s.contains("disturbance"))
            c.scenario.disturbance = steps_from_json(s["disturbance"]);
    }
    if (j.contains("plant")) {
        const auto& p = j["plant"];
        c.plant.q1 = p.value("q1", c.plant.q1);
        c.plant.q2 = p.value("q2", c.plant.q2);
        c.plant.substep = p.value("substep", c.plant.substep);
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    return from_json_string(read_file(path));
}

void ExperimentConfig::save(const std::string& path) const {
    write_file(path, to_json_string() + "\n");
}

void ExperimentConfig::apply_seed(std::uint64_t seed) {
    reservoir.seed = seed;
    excitation.train_seed = seed * 1000 + 1;
    excitation.val_seed = seed * 1000 + 2;
}

MpcConfig ExperimentConfig::mpc_config() const {
    MpcConfig m;
    m.horizon = mpc.horizon;
    m.t_s = mpc.t_s;
    m.q = mpc.q;
    m.r = mpc.r;
    m.u_min = mpc.u_min;
    m.u_max = mpc.u_max;
    m.solver.tol = mpc.solver_tol;
    m.solver.max_iter = mpc.solver_max_iter;
    m.state_update =
        (mpc.state_update == "predicted") ? StateUpdate::Predicted : StateUpdate::Measured;
    return m;
}

MprsConfig ExperimentConfig::mprs_config(std::uint64_t seed) const {
    MprsConfig m;
    m.levels.resize(std::max(2, excitation.levels));
    const int n_levels = static_cast<int>(m.levels.size());
    for (int i = 0; i < n_levels; ++i)
        m.levels[i] = excitation.level_min +
                      (excitation.level_max - excitation.level_min) * i / (n_levels - 1);
    m.fast_period = excitation.fast_period;
    m.slow_period = excitation.slow_period;
    m.mix = excitation.mix;
    m.duration = excitation.duration;
    m.seed = seed;
    return m;
}

PhParams ExperimentConfig::ph_params() const {
    PhParams p;
    p.q1 = plant.q1;
    p.q2_nominal = plant.q2;
    p.substep = plant.substep;
    return p;
}

ScalingMode ExperimentConfig::scaling_mode() const {
    return reservoir.scaling_mode == "radius" ? ScalingMode::Radius : ScalingMode::Norm;
}

// ---------------------------------------------------------------------------
// Excitation
// ---------------------------------------------------------------------------

namespace {

Dataset excite_once(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto u = generate_mprs(cfg.mprs_config(seed), cfg.mpc.t_s);
    if (u.empty()) throw std::runtime_error("run_excite: empty excitation");

    PhPlant plant = PhPlant::at_equilibrium(u[0], cfg.plant.q2, cfg.ph_params());
    Dataset d;
    d.t_s = cfg.mpc.t_s;
    d.u = u;
    d.y_sys.reserve(u.size());
    for (double uk : u) {
        d.y_sys.push_back(plant.output());
        plant.apply(uk, cfg.mpc.t_s);
    }
    return d;
}

}  // namespace

ExciteResult run_excite(const ExperimentConfig& cfg) {
    ExciteResult r;
    r.train = excite_once(cfg, cfg.excitation.train_seed);
    r.val = excite_once(cfg, cfg.excitation.val_seed);
    return r;
}

// ---------------------------------------------------------------------------
// Identification
// ---------------------------------------------------------------------------

double validation_fitting(const ReservoirWeights& w, const ReadoutWeights& rw,
                          const Dataset& scaled) {
    const auto y_model =
        free_run(w, rw, scaled.u, Vector::Zero(w.n), scaled.y_sys[0]);
    const int skip = std::min(scaled.k0, scaled.size() - 2);
    std::vector<double> ys(scaled.y_sys.begin() + skip, scaled.y_sys.end());
    std::vector<double> ym(y_model.begin() + skip, y_model.end());
    return fitting(ys, ym);
}

std::string format_fitting_table(const std::vector<FittingRow>& rows) {
    std::ostringstream out;
    out << "algorithm          n     fitting\n";
    char line[96];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-16s %5d  %9.2f%%\n", r.algorithm.c_str(),
                      r.n, r.fitting);
        out << line;
    }
    return out.str();
}

namespace {

int washout_for(const ExperimentConfig& cfg, const StabilityCertificate& cert) {
    if (cfg.training.washout == "fixed") return cfg.training.washout_fixed;
    if (cert.delta_gas && cert.alpha > 0.0 && cert.alpha < 1.0) {
        // initial-condition influence below 1e-8 after k0 contraction steps
        return static_cast<int>(std::ceil(std::log(1e-8) / std::log(cert.alpha)));
    }
    return cfg.training.washout_fixed;
}

}  // namespace

IdentifyResult run_identify(const ExperimentConfig& cfg, const Dataset& train,
                            const Dataset& val) {
    train.validate();
    val.validate();

    IdentifyResult out;

    ReservoirWeights w =
        generate_reservoir(cfg.reservoir.n, cfg.reservoir.density, cfg.reservoir.seed,
                           cfg.scaling_mode(), cfg.reservoir.target);
    out.certificate = certify(w);
    out.k0 = washout_for(cfg, out.certificate);
    if (out.k0 >= train.size() || out.k0 >= val.size())
        throw std::runtime_error("run_identify: washout exceeds dataset length");

    const AffineScaler u_scale = AffineScaler::from_range(train.u);
    const AffineScaler y_scale = AffineScaler::from_range(train.y_sys);

    Dataset train_s = train.scaled(u_scale, y_scale);
    Dataset val_s = val.scaled(u_scale, y_scale);
    train_s.k0 = out.k0;
    val_s.k0 = out.k0;

    const RegressorMatrix reg = collect(w, train_s, Vector::Zero(w.n));

    const auto as_model = [&](const ReservoirWeights& rw_net, const ReadoutWeights& ro) {
        EsnModel m;
        m.reservoir = rw_net;
        m.readout = ro;
        m.u_scale = u_scale;
        m.y_scale = y_scale;
        return m;
    };

    // Variant 1: plain least squares.
    const LsResult ls = train_ls(reg);
    out.fit_ls = validation_fitting(w, ls.readout, val_s);
    out.model_ls = as_model(w, ls.readout);

    // Variant 2 step 1: l1-regularized readout, lambda from the grid rule
    // (largest lambda whose validation fitting stays within the margin).
    double lambda = cfg.training.lambda_fixed;
    ReadoutWeights lasso;
    if (cfg.training.lambda_rule == "fixed") {
        lasso = train_lasso(reg, lambda);
    } else {
        const double lambda_max = lasso_lambda_max(reg);
        const int points = std::max(2, cfg.training.grid_points);
        const double lo = std::log10(cfg.training.grid_min_factor);
        const double hi = std::log10(cfg.training.grid_max_factor);

        ReadoutWeights warm;  // warm start down the path, sparsest first
        bool have_warm = false;
        bool selected = false;
        double best_fit = -1e300;
        ReadoutWeights best;
        double best_lambda = 0.0;

        for (int i = 0; i < points; ++i) {
            const double f = hi + (lo - hi) * i / (points - 1);
            const double cand_lambda = lambda_max * std::pow(10.0, f);
            ReadoutWeights cand;
            try {
                cand = train_lasso(reg, cand_lambda, {},
                                   have_warm ? &warm : nullptr);
            } catch (const LassoNonConvergence& e) {
                cand = e.iterate();  // still usable as a warm start
            }
            warm = cand;
            have_warm = true;
            if (cand.support.empty()) continue;  // nothing left to read out

            const double fit = validation_fitting(w, cand, val_s);
            if (fit > best_fit) {
                best_fit = fit;
                best = cand;
                best_lambda = cand_lambda;
            }
            if (fit >= out.fit_ls - cfg.training.selection_margin) {
                lasso = cand;
                lambda = cand_lambda;
                selected = true;
                break;
            }
        }
        if (!selected) {
            if (best_fit == -1e300)
                throw std::runtime_error("run_identify: every lambda emptied the readout");
            lasso = best;  // fall back to the best candidate seen
            lambda = best_lambda;
        }
    }
    out.lambda_selected = lambda;
    out.fit_lasso = validation_fitting(w, lasso, val_s);
    out.model_lasso = as_model(w, lasso);

    // Variant 2 steps 1-2: restrict to the readout support, no retrain.
    auto [w_pruned, ro_pruned] = restrict_states(w, lasso, lasso.support);
    out.fit_pruned = validation_fitting(w_pruned, ro_pruned, val_s);
    out.model_pruned = as_model(w_pruned, ro_pruned);

    // Variant 2 full: the same reduction followed by a least-squares retrain.
    ReductionResult red = reduce_and_retrain(w, lasso, train_s, val_s);
    out.fit_full = red.report.fitting_after_retrain;
    out.model_reduced = as_model(red.reservoir, red.readout);
    out.report = red.report;

    out.rows = {{"1", w.n, out.fit_ls},
                {"2 (step 1)", w.n, out.fit_lasso},
                {"2 (step 1-2)", w_pruned.n, out.fit_pruned},
                {"2 full", red.report.n_after, out.fit_full}};
    return out;
}

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

namespace {

double step_value_at(const std::vector<ExperimentConfig::Step>& steps, double t,
                     double fallback) {
    double v = fallback;
    for (const auto& s : steps) {
        if (t >= s.time)
            v = s.value;
        else
            break;
    }
    return v;
}

void finalize_stats(ScenarioResult& r, const MpcConfig& cfg) {
    double sum = 0.0;
    for (const auto& rec : r.records) {
        sum += rec.solve_time;
        r.max_solve_time = std::max(r.max_solve_time, rec.solve_time);
        if (rec.u < cfg.u_min - 1e-12 || rec.u > cfg.u_max + 1e-12) ++r.bound_violations;
    }
    if (!r.records.empty()) r.mean_solve_time = sum / static_cast<double>(r.records.size());
}

}  // namespace

ScenarioResult run_closed_loop(const EsnModel& model, const ExperimentConfig& cfg) {
    const MpcConfig mpc_cfg = cfg.mpc_config();
    PhPlant plant =
        PhPlant::at_equilibrium(cfg.scenario.initial_u, cfg.plant.q2, cfg.ph_params());

    MpcController ctrl(model, mpc_cfg);
    ctrl.initialize(cfg.scenario.initial_u, plant.output());

    const int steps = static_cast<int>(std::floor(cfg.scenario.duration / mpc_cfg.t_s));
    const double ref0 =
        cfg.scenario.reference.empty() ? plant.output() : cfg.scenario.reference[0].value;

    ScenarioResult result;
    result.t_s = mpc_cfg.t_s;
    result.records.reserve(steps);
    for (int k = 0; k < steps; ++k) {
        const double t = k * mpc_cfg.t_s;
        plant.set_disturbance(step_value_at(cfg.scenario.disturbance, t, cfg.plant.q2));
        const double y = plant.output();
        const double ref = step_value_at(cfg.scenario.reference, t, ref0);
        LogRecord rec = ctrl.step(y, ref, t);
        plant.apply(rec.u, mpc_cfg.t_s);
        result.records.push_back(rec);
    }
    finalize_stats(result, mpc_cfg);
    return result;
}

ScenarioResult run_closed_loop_plant(const EsnModel& model, const MpcConfig& mpc_cfg,
                                     DiscretePlant& plant,
                                     const std::vector<ExperimentConfig::Step>& reference,
                                     double duration, double initial_u) {
    MpcController ctrl(model, mpc_cfg);
    ctrl.initialize(initial_u, plant.output());

    const int steps = static_cast<int>(std::floor(duration / mpc_cfg.t_s));
    const double ref0 = reference.empty() ? plant.output() : reference[0].value;

    ScenarioResult result;
    result.t_s = mpc_cfg.t_s;
    result.records.reserve(steps);
    for (int k = 0; k < steps; ++k) {
        const double t = k * mpc_cfg.t_s;
        const double y = plant.output();
        const double ref = step_value_at(reference, t, ref0);
        LogRecord rec = ctrl.step(y, ref, t);
        plant.apply(rec.u, mpc_cfg.t_s);
        result.records.push_back(rec);
    }
    finalize_stats(result, mpc_cfg);
    return result;
}

std::vector<SegmentStats> summarize_segments(const ScenarioResult& run,
                                             const ExperimentConfig& cfg, double band,
                                             int tail_samples) {
    std::vector<double> events;
    for (const auto& s : cfg.scenario.reference)
        if (s.time > 0.0) events.push_back(s.time);
    for (const auto& s : cfg.scenario.disturbance)
        if (s.time > 0.0) events.push_back(s.time);
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());
    events.push_back(cfg.scenario.duration);

    std::vector<SegmentStats> segs;
    double t0 = 0.0;
    for (double t1 : events) {
        SegmentStats s;
        s.t_start = t0;
        s.t_end = t1;
        s.settle_time = -1.0;
        std::vector<const LogRecord*> in_seg;
        for (const auto& rec : run.records)
            if (rec.time >= t0 && rec.time < t1) in_seg.push_back(&rec);
        if (!in_seg.empty()) {
            s.y_ref = in_seg.back()->y_ref;
            // settle time: first instant after which the error never leaves
            // the band within the segment
            for (std::size_t i = 0; i < in_seg.size(); ++i) {
                bool stays = true;
                for (std::size_t j = i; j < in_seg.size(); ++j) {
                    if (std::abs(in_seg[j]->y_sys - in_seg[j]->y_ref) > band) {
                        stays = false;
                        break;
                    }
                }
                if (stays) {
                    s.settle_time = in_seg[i]->time - t0;
                    break;
                }
            }
            const int tail =
                std::min<std::size_t>(tail_samples, in_seg.size());
            double acc = 0.0;
            for (int j = 0; j < tail; ++j) {
                const auto* rec = in_seg[in_seg.size() - 1 - j];
                acc += std::abs(rec->y_sys - rec->y_ref);
            }
            s.ss_error = acc / tail;
            for (const auto* rec : in_seg)
                s.max_error = std::max(s.max_error, std::abs(rec->y_sys - rec->y_ref));
        }
        segs.push_back(s);
        t0 = t1;
    }
    return segs;
}

std::string format_summary(const std::vector<SegmentStats>& segs,
                           const ScenarioResult& run) {
    std::ostringstream out;
    out << "segment        ref    settle(s)   ss_error   max_error\n";
    char line[128];
    for (const auto& s : segs) {
        std::snprintf(line, sizeof(line), "%6.0f-%-6.0f %5.2f   %8.0f   %8.4f    %8.4f\n",
                      s.t_start, s.t_end, s.y_ref, s.settle_time, s.ss_error,
                      s.max_error);
        out << line;
    }
    std::snprintf(line, sizeof(line),
                  "solver: mean %.4f s, max %.4f s per step; bound violations: %d\n",
                  run.mean_solve_time, run.max_solve_time, run.bound_violations);
    out << line;
    return out.str();
}

void write_log_csv(const ScenarioResult& run, const std::string& path,
                   const std::vector<std::string>& header_comments) {
    std::ostringstream out;
    for (const auto& c : header_comments) out << c << "\n";
    out << "time,y_ref,y_sys,y_model,d_hat,u,delta_u,cost,iterations,solve_time\n";
    for (const auto& r : run.records) {
        out << fmt17(r.time) << ',' << fmt17(r.y_ref) << ',' << fmt17(r.y_sys) << ','
            << fmt17(r.y_model) << ',' << fmt17(r.d_hat) << ',' << fmt17(r.u) << ','
            << fmt17(r.delta_u) << ',' << fmt17(r.cost) << ',' << r.iterations << ','
            << fmt17(r.solve_time) << "\n";
    }
    write_file(path, out.str());
}

BenchResult run_bench(const EsnModel& full, const EsnModel& reduced,
                      const ExperimentConfig& cfg) {
    const ScenarioResult run_full = run_closed_loop(full, cfg);
    const ScenarioResult run_red = run_closed_loop(reduced, cfg);
    if (run_full.records.size() != run_red.records.size())
        throw std::runtime_error("run_bench: scenario lengths differ");

    const auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size() / 2;
        return v.empty() ? 0.0 : (v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]));
    };

    std::vector<double> tf, tr;
    for (const auto& r : run_full.records) tf.push_back(r.solve_time);
    for (const auto& r : run_red.records) tr.push_back(r.solve_time);

    BenchResult b;
    b.steps = tf.size();
    b.mean_full = run_full.mean_solve_time;
    b.mean_reduced = run_red.mean_solve_time;
    b.median_full = median(tf);
    b.median_reduced = median(tr);
    b.reduction_percent =
        b.mean_full > 0.0 ? 100.0 * (1.0 - b.mean_reduced / b.mean_full) : 0.0;
    return b;
}

std::string format_bench(const BenchResult& b) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line),
                  "solve time over %zu steps: full mean %.5f s (median %.5f), reduced "
                  "mean %.5f s (median %.5f), reduction %.1f%%\n",
                  b.steps, b.mean_full, b.median_full, b.mean_reduced, b.median_reduced,
                  b.reduction_percent);
    out << line;
    return out.str();
}

}  // namespace esnctl
