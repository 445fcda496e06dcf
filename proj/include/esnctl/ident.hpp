#pragma once

#include <stdexcept>
#include <vector>

#include "esnctl/dataset.hpp"
#include "esnctl/reservoir.hpp"

namespace esnctl {

/// Regression data extracted from a teacher-forced run: row k is
/// (x(k), u(k-1)) against target y_sys(k), for k past the washout.
struct RegressorMatrix {
    Matrix phi;       // (T - k0) x (n + 1)
    Vector y_target;  // (T - k0)
};

/// Trained readout. support lists the indices of w_out1 whose magnitude
/// exceeds kZeroThreshold * max|w_out1| (coordinate descent produces exact
/// zeros; the threshold only guards round-off).
struct ReadoutWeights {
    Vector w_out1;      // 1 x n state readout, stored as a column
    double w_out2 = 0;  // direct input feedthrough
    double lambda = 0;  // l1 weight used in training (0 for pure LS)
    std::vector<int> support;

    static constexpr double kZeroThreshold = 1e-10;

    static std::vector<int> compute_support(const Vector& w1);
};

struct LsResult {
    ReadoutWeights readout;
    bool rank_deficient = false;  // minimum-norm solution was returned
};

struct LassoOptions {
    double tol = 1e-10;     // max coordinate change per sweep at convergence
    int max_sweeps = 20000;
};

/// Thrown when coordinate descent hits the sweep limit; carries the last
/// iterate and its objective so the caller can inspect or accept it.
class LassoNonConvergence : public std::runtime_error {
  public:
    LassoNonConvergence(ReadoutWeights iterate, double objective, int sweeps);
    const ReadoutWeights& iterate() const { return iterate_; }
    double objective() const { return objective_; }
    int sweeps() const { return sweeps_; }

  private:
    ReadoutWeights iterate_;
    double objective_;
    int sweeps_;
};

/// Teacher-forced state collection: integrates the state equation with the
/// W_y term driven by the measured outputs and keeps rows past the washout.
/// The state recursion starts from x0 at sample 0, so rows exist for
/// k in [max(k0,1), T).
RegressorMatrix collect(const ReservoirWeights& w, const Dataset& d, const Vector& x0);

/// Least squares readout through a rank-revealing orthogonal factorization
/// (never the normal equations). A rank-deficient regressor yields the
/// minimum-norm solution with the warning flag set.
LsResult train_ls(const RegressorMatrix& r);

/// Minimizes ||y - phi w||_2^2 + lambda ||w||_1 by cyclic coordinate
/// descent with soft thresholding, warm-startable. The l1 term covers
/// every coefficient including the feedthrough.
ReadoutWeights train_lasso(const RegressorMatrix& r, double lambda,
                           const LassoOptions& opts = {},
                           const ReadoutWeights* warm_start = nullptr);

/// Smallest lambda that already forces the all-zero solution.
double lasso_lambda_max(const RegressorMatrix& r);

/// LASSO objective at a given readout, for diagnostics and tests.
double lasso_objective(const RegressorMatrix& r, const ReadoutWeights& w, double lambda);

/// Fitting index in percent: 100 (1 - ||y_sys - y_model|| / ||y_sys - mean||).
/// 100 is a perfect match, 0 is no better than the mean, negative is worse.
/// Throws std::domain_error when y_sys is constant.
double fitting(const std::vector<double>& y_sys, const std::vector<double>& y_model);

/// Closed-loop (validation) simulation: the W_y term is fed by the model's
/// own previous output. y0 seeds the feedback at the first step, where no
/// readout value exists yet. Returns the model output sequence.
std::vector<double> free_run(const ReservoirWeights& w, const ReadoutWeights& rw,
                             const std::vector<double>& u, const Vector& x0,
                             double y0);

}  // namespace esnctl
