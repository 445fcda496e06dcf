#pragma once

#include <memory>
#include <vector>

#include "esnctl/model.hpp"
#include "esnctl/reservoir.hpp"

namespace esnctl {

/// Whether the controller's internal network state is advanced with the
/// measured plant output (matches the training-time dynamics) or with the
/// model's own prediction.
enum class StateUpdate { Measured, Predicted };

struct SolverOptions {
    double tol = 1e-9;   // stationarity measure at convergence
    int max_iter = 400;
};

struct MpcConfig {
    int horizon = 20;      // N
    double t_s = 10.0;     // seconds
    double q = 2.0;        // tracking error weight
    double r = 1.0;        // input move weight
    double u_min = 12.7;
    double u_max = 16.7;
    SolverOptions solver;
    StateUpdate state_update = StateUpdate::Measured;

    void validate() const;
};

struct MpcSolution {
    Vector delta_u;      // N input moves
    Vector predicted_y;  // N predicted outputs (disturbance included)
    double cost = 0.0;
    int iterations = 0;
    double solve_time = 0.0;  // seconds
    bool converged = true;
};

/// Prediction model over the horizon: maps input moves to predicted
/// outputs and provides the transposed-Jacobian product needed for the
/// analytic cost gradient.
class Predictor {
  public:
    virtual ~Predictor() = default;
    virtual int horizon() const = 0;

    /// y_hat[i] = predicted output at step k+i (plant units).
    virtual void rollout(const Vector& delta_u, Vector& y_hat) const = 0;

    /// grad = (d y_hat / d delta_u)^T * seed.
    virtual void vjp(const Vector& delta_u, const Vector& seed, Vector& grad) const = 0;
};

/// Rolls the network forward with the input integrator, the output feedback
/// fed by the disturbance-corrected prediction (the model's estimate of the
/// future measurements) and the constant output disturbance added to what is
/// returned. The gradient comes from reverse accumulation through the tanh
/// rollout.
class EsnPredictor : public Predictor {
  public:
    EsnPredictor(const EsnModel& model, const Vector& x, double u_prev, double d_hat,
                 int horizon);

    int horizon() const override { return n_; }
    void rollout(const Vector& delta_u, Vector& y_hat) const override;
    void vjp(const Vector& delta_u, const Vector& seed, Vector& grad) const override;

  private:
    struct Trace;  // forward pass bookkeeping
    void forward(const Vector& delta_u, Trace& t) const;

    const EsnModel& model_;
    Vector x0_;
    double u_prev_;
    double d_hat_;
    int n_;
};

/// Affine prediction y_hat = G delta_u + f. Test hook: with this model the
/// MPC cost is an exact quadratic with a closed-form minimizer.
class LinearPredictor : public Predictor {
  public:
    LinearPredictor(Matrix g, Vector f) : g_(std::move(g)), f_(std::move(f)) {}

    int horizon() const override { return static_cast<int>(f_.size()); }
    void rollout(const Vector& delta_u, Vector& y_hat) const override {
        y_hat = g_ * delta_u + f_;
    }
    void vjp(const Vector& delta_u, const Vector& seed, Vector& grad) const override {
        (void)delta_u;
        grad = g_.transpose() * seed;
    }

  private:
    Matrix g_;
    Vector f_;
};

/// Maps an arbitrary move sequence onto a feasible one: accumulate the
/// inputs, clip each onto [u_min, u_max] in order, then take differences
/// again. Identity on feasible sequences.
Vector clip_moves(const Vector& delta_u, double u_prev, double u_min, double u_max);

/// Objective value for given moves (used by the solver and by tests).
double mpc_cost(const Predictor& pred, const MpcConfig& cfg, const Vector& delta_u,
                const Vector& y_ref);

/// Analytic gradient of the objective.
Vector mpc_gradient(const Predictor& pred, const MpcConfig& cfg, const Vector& delta_u,
                    const Vector& y_ref);

/// Minimizes sum_i q (y_hat_i - y_ref_i)^2 + r delta_u_i^2 over the box on
/// accumulated inputs, by projected gradient descent with Barzilai-Borwein
/// steps and a monotone backtracking line search. Deterministic given the
/// warm start. Hitting the iteration cap returns the best feasible iterate
/// flagged as non-converged; it never throws.
MpcSolution solve_mpc(const Predictor& pred, const MpcConfig& cfg, const Vector& y_ref,
                      double u_prev, const Vector& warm_start);

/// One closed-loop record, matching the log file column for column.
struct LogRecord {
    double time = 0.0;
    double y_ref = 0.0;
    double y_sys = 0.0;
    double y_model = 0.0;
    double d_hat = 0.0;
    double u = 0.0;
    double delta_u = 0.0;
    double cost = 0.0;
    int iterations = 0;
    double solve_time = 0.0;
};

/// Receding-horizon controller around an identified model. Each step:
/// refresh the output-disturbance estimate from the newest measurement,
/// solve for the move sequence, apply the first move, advance the internal
/// network state, shift the solution into the next warm start.
class MpcController {
  public:
    MpcController(EsnModel model, MpcConfig cfg);

    /// Puts the internal state at the fixed point for (u, y) and resets the
    /// integrator memory to u.
    void initialize(double u_initial, double y_initial);

    LogRecord step(double y_measured, double y_ref, double time = 0.0);

    double disturbance_estimate() const { return d_hat_; }
    double last_input() const { return u_prev_; }
    const EsnModel& model() const { return model_; }

  private:
    EsnModel model_;
    MpcConfig cfg_;
    Vector x_;
    double u_prev_ = 0.0;
    double d_hat_ = 0.0;
    Vector warm_;
};

}  // namespace esnctl
