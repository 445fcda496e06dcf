#include "esnctl/ident.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace esnctl {

std::vector<int> ReadoutWeights::compute_support(const Vector& w1) {
    std::vector<int> s;
    const double scale = w1.size() ? w1.cwiseAbs().maxCoeff() : 0.0;
    const double thresh = kZeroThreshold * scale;
    for (int i = 0; i < w1.size(); ++i)
        if (std::abs(w1(i)) > thresh && w1(i) != 0.0) s.push_back(i);
    return s;
}

LassoNonConvergence::LassoNonConvergence(ReadoutWeights iterate, double objective,
                                         int sweeps)
    : std::runtime_error("train_lasso: no convergence within sweep limit"),
      iterate_(std::move(iterate)),
      objective_(objective),
      sweeps_(sweeps) {}

RegressorMatrix collect(const ReservoirWeights& w, const Dataset& d, const Vector& x0) {
    d.validate();
    if (x0.size() != w.n)
        throw std::invalid_argument("collect: x0 dimension does not match reservoir");

    const int t_len = d.size();
    const int k_start = std::max(d.k0, 1);  // row k needs u(k-1)
    const int rows = t_len - k_start;
    if (rows <= 0) throw std::invalid_argument("collect: dataset shorter than washout");

    RegressorMatrix r;
    r.phi.resize(rows, w.n + 1);
    r.y_target.resize(rows);

    EsnState s{x0, 0.0};
    for (int k = 1; k < t_len; ++k) {
        s = step(w, s, d.u[k - 1], d.y_sys[k - 1]);
        if (k >= k_start) {
            r.phi.row(k - k_start).head(w.n) = s.x.transpose();
            r.phi(k - k_start, w.n) = d.u[k - 1];
            r.y_target(k - k_start) = d.y_sys[k];
        }
    }
    return r;
}

LsResult train_ls(const RegressorMatrix& r) {
    const int p = static_cast<int>(r.phi.cols());
    if (r.phi.rows() <= p)
        throw std::invalid_argument("train_ls: need more rows than columns");

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(r.phi);
    const Vector w = cod.solve(r.y_target);

    LsResult out;
    out.rank_deficient = cod.rank() < p;
    out.readout.w_out1 = w.head(p - 1);
    out.readout.w_out2 = w(p - 1);
    out.readout.lambda = 0.0;
    out.readout.support = ReadoutWeights::compute_support(out.readout.w_out1);
    return out;
}

double lasso_lambda_max(const RegressorMatrix& r) {
    return 2.0 * (r.phi.transpose() * r.y_target).cwiseAbs().maxCoeff();
}

double lasso_objective(const RegressorMatrix& r, const ReadoutWeights& w, double lambda) {
    Vector full(w.w_out1.size() + 1);
    full.head(w.w_out1.size()) = w.w_out1;
    full(w.w_out1.size()) = w.w_out2;
    const double rss = (r.y_target - r.phi * full).squaredNorm();
    return rss + lambda * full.lpNorm<1>();
}

ReadoutWeights train_lasso(const RegressorMatrix& r, double lambda,
                           const LassoOptions& opts, const ReadoutWeights* warm_start) {
    if (lambda < 0.0) throw std::invalid_argument("train_lasso: lambda must be >= 0");
    const int p = static_cast<int>(r.phi.cols());

    // Gram formulation: coordinate updates touch only G = phi^T phi and
    // b = phi^T y, so a sweep costs O(p^2) regardless of sample count.
    const Matrix gram = r.phi.transpose() * r.phi;
    const Vector b = r.phi.transpose() * r.y_target;

    Vector w = Vector::Zero(p);
    if (warm_start && warm_start->w_out1.size() == p - 1) {
        w.head(p - 1) = warm_start->w_out1;
        w(p - 1) = warm_start->w_out2;
    }
    Vector gw = gram * w;

    int sweep = 0;
    for (; sweep < opts.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (int j = 0; j < p; ++j) {
            const double a = gram(j, j);
            double w_new = 0.0;
            if (a > 0.0) {
                // residual correlation with coordinate j frozen out
                const double c = b(j) - gw(j) + a * w(j);
                const double shrink = 0.5 * lambda;
                if (c > shrink)
                    w_new = (c - shrink) / a;
                else if (c < -shrink)
                    w_new = (c + shrink) / a;
            }
            const double delta = w_new - w(j);
            if (delta != 0.0) {
                gw += gram.col(j) * delta;
                w(j) = w_new;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change <= opts.tol) break;
    }

    ReadoutWeights out;
    out.w_out1 = w.head(p - 1);
    out.w_out2 = w(p - 1);
    out.lambda = lambda;
    out.support = ReadoutWeights::compute_support(out.w_out1);

    if (sweep >= opts.max_sweeps)
        throw LassoNonConvergence(out, lasso_objective(r, out, lambda), sweep);
    return out;
}

double fitting(const std::vector<double>& y_sys, const std::vector<double>& y_model) {
    if (y_sys.size() != y_model.size())
        throw std::invalid_argument("fitting: sequence lengths differ");
    if (y_sys.empty()) throw std::invalid_argument("fitting: empty sequences");

    const auto n = y_sys.size();
    double mean = 0.0;
    for (double v : y_sys) mean += v;
    mean /= static_cast<double>(n);

    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        num += (y_sys[k] - y_model[k]) * (y_sys[k] - y_model[k]);
        den += (y_sys[k] - mean) * (y_sys[k] - mean);
    }
    const double scale = std::abs(mean) + 1.0;
    if (std::sqrt(den) <= 1e-14 * scale)
        throw std::domain_error("fitting: y_sys is constant, index undefined");
    return 100.0 * (1.0 - std::sqrt(num) / std::sqrt(den));
}

std::vector<double> free_run(const ReservoirWeights& w, const ReadoutWeights& rw,
                             const std::vector<double>& u, const Vector& x0,
                             double y0) {
    if (x0.size() != w.n)
        throw std::invalid_argument("free_run: x0 dimension does not match reservoir");
    if (rw.w_out1.size() != w.n)
        throw std::invalid_argument("free_run: readout dimension does not match reservoir");

    std::vector<double> y_out;
    y_out.reserve(u.size());

    EsnState s{x0, 0.0};
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double y_k = (k == 0) ? y0 : readout(s, rw.w_out1, rw.w_out2);
        y_out.push_back(y_k);
        s = step(w, s, u[k], y_k);
    }
    return y_out;
}

}  // namespace esnctl
