#include <doctest.h>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

#include "esnctl/reduce.hpp"
#include "esnctl/rng.hpp"

using namespace esnctl;

namespace {

ReservoirWeights from_dense(const Matrix& m, Rng& rng) {
    ReservoirWeights w;
    w.n = static_cast<int>(m.rows());
    w.w_x = m.sparseView();
    w.w_x.makeCompressed();
    w.w_u.resize(w.n);
    w.w_y.resize(w.n);
    for (int i = 0; i < w.n; ++i) w.w_u(i) = rng.symmetric();
    for (int i = 0; i < w.n; ++i) w.w_y(i) = rng.symmetric();
    return w;
}

ReadoutWeights readout_with_support(int n, const std::vector<int>& supp, Rng& rng) {
    ReadoutWeights rw;
    rw.w_out1 = Vector::Zero(n);
    for (int i : supp) rw.w_out1(i) = 0.5 + 0.5 * rng.u01();
    rw.w_out2 = 0.3;
    rw.support = ReadoutWeights::compute_support(rw.w_out1);
    return rw;
}

// Brute-force closure oracle: iterate the membership rule until nothing
// changes, over the dense matrix.
std::vector<int> closure_oracle(const Matrix& wx, const std::vector<int>& supp) {
    const int n = static_cast<int>(wx.rows());
    std::vector<char> in(n, 0);
    for (int i : supp) in[i] = 1;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            if (!in[i]) continue;
            for (int j = 0; j < n; ++j) {
                if (wx(i, j) != 0.0 && !in[j]) {
                    in[j] = 1;
                    changed = true;
                }
            }
        }
    }
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (in[i]) out.push_back(i);
    return out;
}

// Random block system: states [0, n_keep) evolve on their own; states
// [n_keep, n) are driven by the kept block but never feed back into it.
ReservoirWeights block_reservoir(int n_keep, int n_prune, std::uint64_t seed) {
    Rng rng(seed);
    const int n = n_keep + n_prune;
    Matrix m = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i < n_keep && j >= n_keep) continue;  // no pruned -> kept edge
            if (rng.u01() < 0.4) m(i, j) = rng.symmetric();
        }
    Eigen::BDCSVD<Matrix> svd(m);
    m *= 0.9 / svd.singularValues()(0);
    return from_dense(m, rng);
}

}  // namespace

TEST_CASE("closure: all-nonzero readout keeps every state") {
    Rng rng(1);
    const auto w = generate_reservoir(10, 0.3, 5, ScalingMode::Norm, 0.9);
    std::vector<int> all(10);
    for (int i = 0; i < 10; ++i) all[i] = i;
    const auto rw = readout_with_support(10, all, rng);
    CHECK(observable_closure(w, rw) == all);
}

TEST_CASE("closure: diagonal coupling isolates the support") {
    Rng rng(2);
    Matrix m = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) m(i, i) = 0.5;
    const auto w = from_dense(m, rng);
    const auto rw = readout_with_support(4, {2}, rng);
    CHECK(observable_closure(w, rw) == std::vector<int>{2});
}

TEST_CASE("closure: chain coupling pulls in the whole chain") {
    Rng rng(3);
    // W_x(0,1) != 0 and W_x(1,2) != 0: state 2 feeds 1 feeds 0
    Matrix m = Matrix::Zero(3, 3);
    m(0, 1) = 0.4;
    m(1, 2) = 0.4;
    const auto w = from_dense(m, rng);
    const auto rw = readout_with_support(3, {0}, rng);
    CHECK(observable_closure(w, rw) == std::vector<int>{0, 1, 2});
}

TEST_CASE("closure agrees with the brute-force fixed-point oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 100);
        const int n = 12;
        Matrix m = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (rng.u01() < 0.12) m(i, j) = rng.symmetric();
        const auto w = from_dense(m, rng);
        std::vector<int> supp = {static_cast<int>(rng.below(n))};
        const auto rw = readout_with_support(n, supp, rng);
        CHECK(observable_closure(w, rw) == closure_oracle(m, rw.support));
    }
}

TEST_CASE("closure rejects an all-zero readout") {
    Rng rng(4);
    const auto w = generate_reservoir(5, 0.5, 6, ScalingMode::Norm, 0.9);
    ReadoutWeights rw;
    rw.w_out1 = Vector::Zero(5);
    rw.w_out2 = 1.0;
    CHECK_THROWS_AS(observable_closure(w, rw), std::invalid_argument);
}

TEST_CASE("prune: keeping everything is the identity transformation") {
    Rng rng(5);
    const auto w = generate_reservoir(8, 0.4, 7, ScalingMode::Norm, 0.9);
    std::vector<int> all(8);
    for (int i = 0; i < 8; ++i) all[i] = i;
    const auto rw = readout_with_support(8, all, rng);
    const auto [wp, rwp] = prune(w, rw, all);
    CHECK(wp.n == 8);
    CHECK((Matrix(wp.w_x) - Matrix(w.w_x)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((wp.w_u - w.w_u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((rwp.w_out1 - rw.w_out1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("prune: diagonal example reduces to one state with identical output") {
    Rng rng(6);
    Matrix m = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) m(i, i) = 0.5;
    const auto w = from_dense(m, rng);
    const auto rw = readout_with_support(4, {2}, rng);
    const auto keep = observable_closure(w, rw);
    const auto [wp, rwp] = prune(w, rw, keep);
    CHECK(wp.n == 1);

    std::vector<double> u(200);
    for (auto& v : u) v = rng.symmetric();
    const auto y_full = free_run(w, rw, u, Vector::Zero(4), 0.25);
    const auto y_red = free_run(wp, rwp, u, Vector::Zero(1), 0.25);
    for (std::size_t k = 0; k < u.size(); ++k)
        CHECK(std::abs(y_full[k] - y_red[k]) <= 1e-12);
}

TEST_CASE("prune rejects a keep set that is not closed") {
    Rng rng(7);
    Matrix m = Matrix::Zero(3, 3);
    m(0, 1) = 0.4;  // state 1 feeds state 0
    const auto w = from_dense(m, rng);
    const auto rw = readout_with_support(3, {0}, rng);
    CHECK_THROWS_AS(prune(w, rw, std::vector<int>{0}), std::invalid_argument);
    CHECK_THROWS_AS(prune(w, rw, std::vector<int>{1, 2}), std::invalid_argument);
}

TEST_CASE("prune on constructed blocks preserves the output exactly") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const int n_keep = 6, n_prune = 5;
        const auto w = block_reservoir(n_keep, n_prune, seed);
        Rng rng(seed + 1);
        std::vector<int> supp;
        for (int i = 0; i < n_keep; ++i)
            if (i == 0 || rng.u01() < 0.6) supp.push_back(i);
        const auto rw = readout_with_support(n_keep + n_prune, supp, rng);

        const auto keep = observable_closure(w, rw);
        CHECK(static_cast<int>(keep.size()) <= n_keep);
        const auto [wp, rwp] = prune(w, rw, keep);

        std::vector<double> u(500);
        for (auto& v : u) v = 2.0 * rng.symmetric();
        const auto y_full = free_run(w, rw, u, Vector::Zero(w.n), 0.1);
        const auto y_red = free_run(wp, rwp, u, Vector::Zero(wp.n), 0.1);
        for (std::size_t k = 0; k < u.size(); ++k)
            CHECK(std::abs(y_full[k] - y_red[k]) <= 1e-12);
    }
}

TEST_CASE("reduce_and_retrain: support mode shrinks, keeps support, reports stages") {
    // Data from a first-order system the network can model well, so the
    // stage fittings are meaningful.
    const auto w = generate_reservoir(24, 0.15, 42, ScalingMode::Norm, 0.8);
    Dataset train, val;
    train.t_s = val.t_s = 1.0;
    auto make = [&](Dataset& d, std::uint64_t s) {
        Rng r2(s);
        double y = 0.0;
        for (int k = 0; k < 800; ++k) {
            const double u = r2.symmetric();
            d.u.push_back(u);
            d.y_sys.push_back(y);
            y = 0.8 * y + 0.2 * u;
        }
        d.k0 = 60;
    };
    make(train, 100);
    make(val, 200);

    const auto reg = collect(w, train, Vector::Zero(w.n));
    const double lmax = lasso_lambda_max(reg);
    const auto lasso = train_lasso(reg, 0.02 * lmax);
    REQUIRE(!lasso.support.empty());
    REQUIRE(static_cast<int>(lasso.support.size()) < w.n);  // sparsity happened

    const auto res = reduce_and_retrain(w, lasso, train, val);
    CHECK(res.report.n_before == w.n);
    CHECK(res.report.n_after == static_cast<int>(lasso.support.size()));
    CHECK(res.report.kept == lasso.support);
    CHECK(res.report.kept.size() + res.report.removed.size() ==
          static_cast<std::size_t>(w.n));
    // retraining must not be worse than the pruned-but-stale readout
    CHECK(res.report.fitting_after_retrain >= res.report.fitting_after_prune);
    CHECK(res.reservoir.n == res.report.n_after);

    // idempotence: a retrained LS readout has full support, so a second pass
    // removes nothing
    const auto res2 =
        reduce_and_retrain(res.reservoir, res.readout, train, val);
    CHECK(res2.report.n_after == res.reservoir.n);
}

TEST_CASE("reduce_and_retrain: closure mode is exact before retraining") {
    const auto w = block_reservoir(7, 6, 77);
    Rng rng(10);
    const auto rw = readout_with_support(13, {0, 2, 4}, rng);

    Dataset train, val;
    train.t_s = val.t_s = 1.0;
    auto make = [&](Dataset& d, std::uint64_t s) {
        Rng r2(s);
        double y = 0.0;
        for (int k = 0; k < 500; ++k) {
            const double u = r2.symmetric();
            y = 0.7 * y + 0.4 * u;
            d.u.push_back(u);
            d.y_sys.push_back(y);
        }
        d.k0 = 50;
    };
    make(train, 300);
    make(val, 400);

    const auto res =
        reduce_and_retrain(w, rw, train, val, ReductionMode::ObservableClosure);
    CHECK(res.report.n_after <= 7);
    // exactness: the closure-pruned network reproduces the full network's
    // validation run, so the fitting is unchanged by pruning
    CHECK(res.report.fitting_after_prune ==
          doctest::Approx(res.report.fitting_before).epsilon(1e-9));
}
