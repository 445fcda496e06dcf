#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

namespace esnctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Which quantity of W_x the generator scales to the requested target.
/// Norm scaling (||W_x|| < 1) is the mode backed by the contraction
/// certificate; radius scaling (rho(W_x) < 1) is the common reservoir
/// heuristic.
enum class ScalingMode { Norm, Radius };

/// Fixed random part of an echo state network:
///   x(k+1) = tanh(W_x x(k) + W_u u(k) + W_y y(k))
/// W_x is sparse with exactly round(density*n^2) structural nonzeros,
/// W_u and W_y are dense n-vectors. Fully determined by
/// (n, density, seed, mode, target).
struct ReservoirWeights {
    int n = 0;
    SparseMatrix w_x;        // n x n couplings
    Vector w_u;              // n x 1 input weights
    Vector w_y;              // n x 1 output feedback weights
    double density = 0.0;    // requested fraction of nonzeros in w_x
    std::uint64_t seed = 0;
    ScalingMode mode = ScalingMode::Norm;
    double target = 0.0;     // requested norm or radius of w_x
};

/// Incremental-stability certificate for a reservoir. delta_gas holds
/// when ||W_x|| < 1 - tol; the contraction rate alpha is computed through
/// Q = I - W_x^T W_x as sqrt(1 - lambda_min(Q)), a second algebraic route
/// that must agree with the operator norm.
struct StabilityCertificate {
    double operator_norm = 0.0;   // largest singular value of W_x
    double spectral_radius = 0.0; // max |eigenvalue| of W_x
    bool delta_gas = false;
    double alpha = 0.0;           // valid only when delta_gas

    /// Margin used when declaring delta_gas, so a borderline matrix is
    /// never certified through rounding luck.
    static constexpr double kNormTolerance = 1e-9;
};

/// Network state: neuron activations plus the one-step input memory that
/// feeds the direct output term.
struct EsnState {
    Vector x;
    double u_prev = 0.0;
};

/// Result of the two-trajectory echo-state probe.
struct ProbeResult {
    double initial_gap = 0.0; // ||x'(0) - x''(0)||
    double final_gap = 0.0;   // ||x'(k_probe) - x''(k_probe)||
};

/// Draws a sparse reservoir and scales W_x so that its operator norm
/// (or spectral radius) equals `target`. Nonzero positions are a uniform
/// sample of exactly round(density*n^2) cells; values and the W_u/W_y
/// entries are uniform on [-1, 1]. Deterministic in all arguments.
/// Throws std::invalid_argument on bad sizes or target >= 1, and
/// std::runtime_error when the draw cannot be scaled (zero norm/radius).
ReservoirWeights generate_reservoir(int n, double density, std::uint64_t seed,
                                    ScalingMode mode, double target);

/// One update of the state equation. Output feedback y is whatever the
/// caller supplies (measured output during training, the model's own
/// output in free run). Throws on dimension mismatch.
EsnState step(const ReservoirWeights& w, const EsnState& s, double u, double y);

/// Linear readout y = w_out1 * x + w_out2 * u_prev.
double readout(const EsnState& s, const Eigen::Ref<const Vector>& w_out1,
               double w_out2);

/// Computes norm, radius and (when applicable) the contraction rate.
/// Never throws; a non-contractive reservoir simply reports
/// delta_gas = false.
StabilityCertificate certify(const ReservoirWeights& w);

/// Runs two trajectories from independent random initial states (components
/// uniform in (-1,1), derived from probe_seed) under the same forcing
/// (u[k], y[k]) and returns the state gap after k_probe steps.
ProbeResult echo_state_probe(const ReservoirWeights& w,
                             const std::vector<double>& u,
                             const std::vector<double>& y, int k_probe,
                             std::uint64_t probe_seed);

}  // namespace esnctl
