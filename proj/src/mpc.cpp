#include "esnctl/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace esnctl {

void MpcConfig::validate() const {
    if (horizon < 1) throw std::invalid_argument("MpcConfig: horizon must be >= 1");
    if (t_s <= 0.0) throw std::invalid_argument("MpcConfig: t_s must be positive");
    if (q < 0.0) throw std::invalid_argument("MpcConfig: q must be >= 0");
    if (r <= 0.0) throw std::invalid_argument("MpcConfig: r must be positive");
    if (u_min >= u_max) throw std::invalid_argument("MpcConfig: need u_min < u_max");
}

// ---------------------------------------------------------------------------
// ESN horizon rollout and its adjoint
// ---------------------------------------------------------------------------

struct EsnPredictor::Trace {
    Matrix x;          // n_states x (N), state entering each step
    Vector y_scaled;   // model output per step, scaled units
    Vector u_scaled;   // applied input per step, scaled units
    Vector y_hat;      // returned prediction, plant units
};

EsnPredictor::EsnPredictor(const EsnModel& model, const Vector& x, double u_prev,
                           double d_hat, int horizon)
    : model_(model), x0_(x), u_prev_(u_prev), d_hat_(d_hat), n_(horizon) {
    if (horizon < 1) throw std::invalid_argument("EsnPredictor: horizon must be >= 1");
    if (x.size() != model.reservoir.n)
        throw std::invalid_argument("EsnPredictor: state dimension mismatch");
}

void EsnPredictor::forward(const Vector& delta_u, Trace& t) const {
    const auto& w = model_.reservoir;
    const auto& ro = model_.readout;
    const int n = n_;

    t.x.resize(w.n, n);
    t.y_scaled.resize(n);
    t.u_scaled.resize(n);
    t.y_hat.resize(n);

    // The output feedback term sees the disturbance-corrected prediction
    // (the best estimate of what will be measured). Feeding the raw model
    // output instead would make the rollout inconsistent with the
    // measurement-driven state updates between solves, and the closed loop
    // would settle with a bias left over.
    const double d_hat_scaled = d_hat_ / model_.y_scale.half_range;

    Vector x = x0_;
    double u = u_prev_;
    double u_prev_scaled = model_.u_scale.apply(u_prev_);
    for (int i = 0; i < n; ++i) {
        t.x.col(i) = x;
        const double y_s = ro.w_out1.dot(x) + ro.w_out2 * u_prev_scaled;
        t.y_scaled(i) = y_s;
        t.y_hat(i) = model_.y_scale.invert(y_s) + d_hat_;

        u += delta_u(i);
        const double u_s = model_.u_scale.apply(u);
        t.u_scaled(i) = u_s;

        if (i + 1 < n) {
            x = (w.w_x * x + w.w_u * u_s + w.w_y * (y_s + d_hat_scaled))
                    .array()
                    .tanh();
        }
        u_prev_scaled = u_s;
    }
}

void EsnPredictor::rollout(const Vector& delta_u, Vector& y_hat) const {
    if (delta_u.size() != n_) throw std::invalid_argument("rollout: bad move count");
    Trace t;
    forward(delta_u, t);
    y_hat = t.y_hat;
}

void EsnPredictor::vjp(const Vector& delta_u, const Vector& seed, Vector& grad) const {
    if (delta_u.size() != n_ || seed.size() != n_)
        throw std::invalid_argument("vjp: bad dimensions");

    const auto& w = model_.reservoir;
    const auto& ro = model_.readout;
    const int n = n_;
    const double hy = model_.y_scale.half_range;
    const double hu = model_.u_scale.half_range;

    Trace t;
    forward(delta_u, t);

    // Reverse pass. u_scaled_i enters the state equation at step i and the
    // feedthrough term of step i+1; y_scaled_i enters the returned output
    // and, through W_y, the state equation at step i.
    Vector lambda_next = Vector::Zero(w.n);  // dJ/dx_{i+1}
    double dy_next = 0.0;                    // dJ/dy_scaled_{i+1}
    Vector du_direct = Vector::Zero(n);      // dJ/du_i, plant units

    for (int i = n - 1; i >= 0; --i) {
        Vector kappa;
        if (i + 1 < n) {
            // x_{i+1} = tanh(a_i): pull the sensitivity through the
            // activation using the stored next state.
            const auto& x_next = t.x.col(i + 1);
            kappa = lambda_next.cwiseProduct(
                (1.0 - x_next.array().square()).matrix());
        }

        double dy = seed(i) * hy;  // d y_hat_i / d y_scaled_i = hy
        if (kappa.size()) dy += w.w_y.dot(kappa);

        double du_scaled = 0.0;
        if (kappa.size()) du_scaled += w.w_u.dot(kappa);
        if (i + 1 < n) du_scaled += ro.w_out2 * dy_next;

        Vector lambda = Vector::Zero(w.n);
        if (kappa.size()) lambda = w.w_x.transpose() * kappa;
        lambda += ro.w_out1 * dy;

        du_direct(i) = du_scaled / hu;
        lambda_next = std::move(lambda);
        dy_next = dy;
    }

    // Suffix-sum: u_j depends on every delta_u_i with i <= j.
    grad.resize(n);
    double acc = 0.0;
    for (int i = n - 1; i >= 0; --i) {
        acc += du_direct(i);
        grad(i) = acc;
    }
}

// ---------------------------------------------------------------------------
// Cost, gradient, feasibility
// ---------------------------------------------------------------------------

Vector clip_moves(const Vector& delta_u, double u_prev, double u_min, double u_max) {
    Vector out(delta_u.size());
    double u = u_prev;
    for (int i = 0; i < delta_u.size(); ++i) {
        const double u_next = std::clamp(u + delta_u(i), u_min, u_max);
        out(i) = u_next - u;
        u = u_next;
    }
    return out;
}

double mpc_cost(const Predictor& pred, const MpcConfig& cfg, const Vector& delta_u,
                const Vector& y_ref) {
    Vector y_hat;
    pred.rollout(delta_u, y_hat);
    double j = 0.0;
    for (int i = 0; i < delta_u.size(); ++i) {
        const double e = y_hat(i) - y_ref(i);
        j += cfg.q * e * e + cfg.r * delta_u(i) * delta_u(i);
    }
    return j;
}

Vector mpc_gradient(const Predictor& pred, const MpcConfig& cfg, const Vector& delta_u,
                    const Vector& y_ref) {
    Vector y_hat;
    pred.rollout(delta_u, y_hat);
    Vector seed(delta_u.size());
    for (int i = 0; i < delta_u.size(); ++i) seed(i) = 2.0 * cfg.q * (y_hat(i) - y_ref(i));
    Vector grad;
    pred.vjp(delta_u, seed, grad);
    grad += 2.0 * cfg.r * delta_u;
    return grad;
}

MpcSolution solve_mpc(const Predictor& pred, const MpcConfig& cfg, const Vector& y_ref,
                      double u_prev, const Vector& warm_start) {
    cfg.validate();
    const int n = pred.horizon();
    if (y_ref.size() != n) throw std::invalid_argument("solve_mpc: reference length mismatch");

    const auto t_start = std::chrono::steady_clock::now();
    const auto feasible = [&](const Vector& du) {
        return clip_moves(du, u_prev, cfg.u_min, cfg.u_max);
    };

    Vector du = feasible(warm_start.size() == n ? warm_start : Vector::Zero(n));
    double j = mpc_cost(pred, cfg, du, y_ref);
    Vector g = mpc_gradient(pred, cfg, du, y_ref);

    MpcSolution sol;
    sol.iterations = 0;
    sol.converged = false;

    double step_len = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
    Vector du_prev = du, g_prev = g;
    bool have_prev = false;

    for (int it = 0; it < cfg.solver.max_iter; ++it) {
        // stationarity: how far a unit probe step moves after feasibility
        const Vector probe = feasible(du - g);
        if ((probe - du).lpNorm<Eigen::Infinity>() <= cfg.solver.tol) {
            sol.converged = true;
            break;
        }

        if (have_prev) {
            // Barzilai-Borwein step from the last accepted pair, guarded to
            // a sane bracket.
            const Vector s = du - du_prev;
            const Vector dg = g - g_prev;
            const double sy = s.dot(dg);
            if (sy > 1e-300) step_len = std::clamp(s.dot(s) / sy, 1e-12, 1e8);
        }

        double t = step_len;
        bool accepted = false;
        for (int back = 0; back < 60; ++back) {
            const Vector cand = feasible(du - t * g);
            const Vector move = du - cand;
            if (move.lpNorm<Eigen::Infinity>() == 0.0) break;  // blocked on the box
            const double j_cand = mpc_cost(pred, cfg, cand, y_ref);
            if (j_cand <= j - 1e-4 * g.dot(move)) {
                du_prev = du;
                g_prev = g;
                have_prev = true;
                du = cand;
                j = j_cand;
                g = mpc_gradient(pred, cfg, du, y_ref);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // no feasible decrease found along the arc; treat as stationary
            sol.converged = (feasible(du - g) - du).lpNorm<Eigen::Infinity>() <=
                            std::max(cfg.solver.tol, 1e-12);
            break;
        }
        sol.iterations = it + 1;
    }

    pred.rollout(du, sol.predicted_y);
    sol.delta_u = du;
    sol.cost = j;
    sol.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return sol;
}

// ---------------------------------------------------------------------------
// Closed-loop controller
// ---------------------------------------------------------------------------

MpcController::MpcController(EsnModel model, MpcConfig cfg)
    : model_(std::move(model)), cfg_(cfg) {
    cfg_.validate();
    x_ = Vector::Zero(model_.reservoir.n);
    warm_ = Vector::Zero(cfg_.horizon);
}

void MpcController::initialize(double u_initial, double y_initial) {
    x_ = model_.settle(u_initial, y_initial);
    u_prev_ = u_initial;
    d_hat_ = 0.0;
    warm_.setZero();
}

LogRecord MpcController::step(double y_measured, double y_ref, double time) {
    // disturbance estimate is refreshed exactly once per cycle
    const double y_model = model_.output(x_, u_prev_);
    d_hat_ = y_measured - y_model;

    EsnPredictor pred(model_, x_, u_prev_, d_hat_, cfg_.horizon);
    const Vector refs = Vector::Constant(cfg_.horizon, y_ref);
    MpcSolution sol = solve_mpc(pred, cfg_, refs, u_prev_, warm_);

    const double du =
        std::clamp(u_prev_ + sol.delta_u(0), cfg_.u_min, cfg_.u_max) - u_prev_;
    const double u = u_prev_ + du;

    const double y_feedback =
        (cfg_.state_update == StateUpdate::Measured) ? y_measured : y_model;
    x_ = model_.advance(x_, u, y_feedback);
    u_prev_ = u;

    // shift-and-hold warm start for the next solve
    warm_.head(cfg_.horizon - 1) = sol.delta_u.tail(cfg_.horizon - 1);
    warm_(cfg_.horizon - 1) = 0.0;

    LogRecord rec;
    rec.time = time;
    rec.y_ref = y_ref;
    rec.y_sys = y_measured;
    rec.y_model = y_model;
    rec.d_hat = d_hat_;
    rec.u = u;
    rec.delta_u = du;
    rec.cost = sol.cost;
    rec.iterations = sol.iterations;
    rec.solve_time = sol.solve_time;
    return rec;
}

}  // namespace esnctl
