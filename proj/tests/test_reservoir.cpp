#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>
#include <vector>

#include "esnctl/reservoir.hpp"
#include "esnctl/rng.hpp"

using namespace esnctl;

namespace {

// Independent oracle: largest singular value straight from Eigen's SVD on a
// fresh dense copy, bypassing the generator's own scaling path.
double svd_norm(const SparseMatrix& m) {
    const Matrix dense(m);
    Eigen::BDCSVD<Matrix> s(dense);
    return s.singularValues()(0);
}

}  // namespace

TEST_CASE("1x1 reservoir scales exactly to the norm target") {
    for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
        const auto w = generate_reservoir(1, 1.0, seed, ScalingMode::Norm, 0.5);
        CHECK(std::abs(Matrix(w.w_x)(0, 0)) == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("norm scaling hits the target within 1e-12 (SVD oracle)") {
    const auto w = generate_reservoir(5, 1.0, 314, ScalingMode::Norm, 0.9);
    CHECK(std::abs(svd_norm(w.w_x) - 0.9) < 1e-12);

    const auto w300 = generate_reservoir(300, 0.05, 2024, ScalingMode::Norm, 0.9);
    CHECK(std::abs(svd_norm(w300.w_x) - 0.9) < 1e-10);
}

TEST_CASE("radius scaling hits the spectral radius target") {
    const auto w = generate_reservoir(40, 0.2, 5, ScalingMode::Radius, 0.8);
    const auto cert = certify(w);
    CHECK(cert.spectral_radius == doctest::Approx(0.8).epsilon(1e-10));
}

TEST_CASE("nonzero count matches round(density * n^2) and regeneration is bit-identical") {
    const int n = 50;
    const double density = 0.07;
    const auto a = generate_reservoir(n, density, 77, ScalingMode::Norm, 0.9);
    const auto b = generate_reservoir(n, density, 77, ScalingMode::Norm, 0.9);

    const long expected = std::lround(density * n * n);
    CHECK(std::abs(a.w_x.nonZeros() - expected) <= 1);

    const Matrix da(a.w_x), db(b.w_x);
    CHECK((da - db).cwiseAbs().maxCoeff() == 0.0);  // bitwise identical
    CHECK((a.w_u - b.w_u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.w_y - b.w_y).cwiseAbs().maxCoeff() == 0.0);

    const auto c = generate_reservoir(n, density, 78, ScalingMode::Norm, 0.9);
    CHECK(Matrix(c.w_x) != da);
}

TEST_CASE("generator rejects bad arguments") {
    CHECK_THROWS_AS(generate_reservoir(0, 0.5, 1, ScalingMode::Norm, 0.9),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_reservoir(10, 0.0, 1, ScalingMode::Norm, 0.9),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_reservoir(10, 0.5, 1, ScalingMode::Norm, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_reservoir(10, 0.5, 1, ScalingMode::Radius, 1.3),
                    std::invalid_argument);
}

TEST_CASE("step: zero state, zero forcing stays at the tanh fixed point") {
    const auto w = generate_reservoir(8, 0.5, 3, ScalingMode::Norm, 0.9);
    EsnState s{Vector::Zero(8), 0.0};
    const auto next = step(w, s, 0.0, 0.0);
    CHECK(next.x.cwiseAbs().maxCoeff() == 0.0);
    CHECK(next.u_prev == 0.0);
}

TEST_CASE("step: scalar network reproduces tanh(1)") {
    // n=1, w_x=0.5, w_u=1, w_y=0, x=0, u=1, y=0 -> tanh(1)
    ReservoirWeights w;
    w.n = 1;
    w.w_x.resize(1, 1);
    w.w_x.insert(0, 0) = 0.5;
    w.w_u = Vector::Constant(1, 1.0);
    w.w_y = Vector::Zero(1);
    EsnState s{Vector::Zero(1), 0.0};
    const auto next = step(w, s, 1.0, 0.0);
    CHECK(next.x(0) == doctest::Approx(0.7615941559557649).epsilon(1e-15));
    CHECK(next.u_prev == 1.0);
}

TEST_CASE("step rejects a mismatched state") {
    const auto w = generate_reservoir(4, 1.0, 1, ScalingMode::Norm, 0.5);
    EsnState s{Vector::Zero(3), 0.0};
    CHECK_THROWS_AS(step(w, s, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("state stays inside the tanh range under any forcing") {
    const auto w = generate_reservoir(12, 0.4, 9, ScalingMode::Norm, 0.99);
    Rng rng(4);
    // huge drive: tanh saturates and double rounding lands exactly on +-1
    EsnState s{Vector::Zero(12), 0.0};
    for (int k = 0; k < 50; ++k) {
        s = step(w, s, 1e6 * rng.symmetric(), 1e6 * rng.symmetric());
        CHECK(s.x.cwiseAbs().maxCoeff() <= 1.0);
    }
    // moderate drive: strictly interior
    s = EsnState{Vector::Zero(12), 0.0};
    for (int k = 0; k < 50; ++k) {
        s = step(w, s, 3.0 * rng.symmetric(), 3.0 * rng.symmetric());
        CHECK(s.x.cwiseAbs().maxCoeff() < 1.0);
    }
}

TEST_CASE("readout: selector row returns the chosen coordinate plus feedthrough") {
    EsnState s{Vector::Zero(5), 2.0};
    s.x << 0.1, -0.2, 0.3, -0.4, 0.5;
    Vector w1 = Vector::Zero(5);
    w1(2) = 1.0;
    CHECK(readout(s, w1, 0.25) == doctest::Approx(0.3 + 0.25 * 2.0).epsilon(1e-15));

    EsnState zero{Vector::Zero(5), 0.0};
    CHECK(readout(zero, w1, 0.25) == 0.0);
}

TEST_CASE("readout equals a brute-force accumulation loop") {
    Rng rng(11);
    const int n = 17;
    EsnState s{Vector(n), rng.symmetric()};
    Vector w1(n);
    for (int i = 0; i < n; ++i) {
        s.x(i) = rng.symmetric();
        w1(i) = rng.symmetric();
    }
    const double w2 = rng.symmetric();

    double expected = w2 * s.u_prev;
    for (int i = 0; i < n; ++i) expected += w1(i) * s.x(i);
    CHECK(readout(s, w1, w2) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("certify: zero coupling matrix") {
    ReservoirWeights w;
    w.n = 3;
    w.w_x.resize(3, 3);
    w.w_u = Vector::Zero(3);
    w.w_y = Vector::Zero(3);
    const auto cert = certify(w);
    CHECK(cert.operator_norm == 0.0);
    CHECK(cert.spectral_radius == 0.0);
    CHECK(cert.delta_gas);
    CHECK(cert.alpha == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("certify: scaled orthogonal matrix has alpha equal to the norm") {
    // W^T W = 0.81 I, so lambda_min(Q) = 0.19 and alpha = 0.9 exactly.
    Matrix q(3, 3);
    q << 0, 1, 0, 0, 0, 1, 1, 0, 0;  // permutation, orthogonal
    ReservoirWeights w;
    w.n = 3;
    w.w_x = (0.9 * q).sparseView();
    w.w_u = Vector::Zero(3);
    w.w_y = Vector::Zero(3);
    const auto cert = certify(w);
    CHECK(cert.operator_norm == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(cert.alpha == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(cert.delta_gas);
}

TEST_CASE("certify: non-normal matrix with small radius but large norm is not certified") {
    // upper triangular: eigenvalues on the diagonal, norm blown up by the
    // off-diagonal coupling
    Matrix m(2, 2);
    m << 0.95, 1.2, 0.0, 0.9;
    ReservoirWeights w;
    w.n = 2;
    w.w_x = m.sparseView();
    w.w_u = Vector::Zero(2);
    w.w_y = Vector::Zero(2);
    const auto cert = certify(w);

    Eigen::BDCSVD<Matrix> svd(m);
    CHECK(cert.operator_norm == doctest::Approx(svd.singularValues()(0)).epsilon(1e-12));
    CHECK(cert.spectral_radius == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(cert.operator_norm > 1.0);
    CHECK_FALSE(cert.delta_gas);
    CHECK(cert.spectral_radius < cert.operator_norm);
}

TEST_CASE("spectral radius never exceeds the operator norm") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto w = generate_reservoir(15, 0.3, seed, ScalingMode::Radius, 0.7);
        const auto cert = certify(w);
        CHECK(cert.spectral_radius <= cert.operator_norm * (1 + 1e-12));
    }
}

TEST_CASE("contraction: randomized trajectory pairs respect alpha^k (100+ seeds)") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        const double target = (seed % 3 == 0) ? 0.5 : (seed % 3 == 1) ? 0.9 : 0.99;
        const int n = 4 + static_cast<int>(seed % 12);
        const auto w = generate_reservoir(n, 0.5, seed + 1000, ScalingMode::Norm, target);
        const auto cert = certify(w);
        REQUIRE(cert.delta_gas);

        Rng rng(seed);
        EsnState a{Vector(n), 0.0}, b{Vector(n), 0.0};
        for (int i = 0; i < n; ++i) a.x(i) = rng.symmetric();
        for (int i = 0; i < n; ++i) b.x(i) = rng.symmetric();
        const double gap0 = (a.x - b.x).norm();

        double bound = gap0;
        for (int k = 1; k <= 40; ++k) {
            const double u = 3.0 * rng.symmetric();
            const double y = 3.0 * rng.symmetric();
            a = step(w, a, u, y);
            b = step(w, b, u, y);
            bound *= cert.alpha;
            const double gap = (a.x - b.x).norm();
            if (bound < 1e-12) break;  // below floating-point noise floor
            CHECK(gap <= bound * (1 + 1e-12));
            ++checked;
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("tanh step is Lipschitz against the coupled difference") {
    // || step(x1) - step(x2) || <= || W_x (x1 - x2) || for equal forcing
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto w = generate_reservoir(10, 0.6, seed, ScalingMode::Norm, 0.95);
        Rng rng(seed + 50);
        EsnState a{Vector(10), 0.0}, b{Vector(10), 0.0};
        for (int i = 0; i < 10; ++i) a.x(i) = rng.symmetric();
        for (int i = 0; i < 10; ++i) b.x(i) = rng.symmetric();
        const double u = rng.symmetric(), y = rng.symmetric();
        const auto fa = step(w, a, u, y), fb = step(w, b, u, y);
        const double lhs = (fa.x - fb.x).norm();
        const double rhs = (w.w_x * (a.x - b.x)).norm();
        CHECK(lhs <= rhs * (1 + 1e-12) + 1e-15);
    }
}

TEST_CASE("echo state probe: gap shrinks below alpha^k and is zero for equal starts") {
    const auto w = generate_reservoir(20, 0.3, 17, ScalingMode::Norm, 0.5);
    const auto cert = certify(w);

    std::vector<double> u(60), y(60);
    Rng rng(3);
    for (auto& v : u) v = rng.symmetric();
    for (auto& v : y) v = rng.symmetric();

    const int k_probe = 50;
    const auto probe = echo_state_probe(w, u, y, k_probe, 1234);
    CHECK(probe.final_gap <=
          probe.initial_gap * std::pow(cert.alpha, k_probe) * (1 + 1e-9));
    // k=50 at alpha=0.5 pushes the bound to ~1e-15 * gap0; the 2*sqrt(n)
    // worst-case start also satisfies it
    CHECK(probe.final_gap <= 2.0 * std::sqrt(20.0) * std::pow(0.5, 50));

    // identical trajectories when the forcing sequence is reused with the
    // same start
    EsnState s{Vector::Zero(20), 0.0};
    auto s2 = s;
    for (int k = 0; k < 10; ++k) {
        s = step(w, s, u[k], y[k]);
        s2 = step(w, s2, u[k], y[k]);
    }
    CHECK((s.x - s2.x).cwiseAbs().maxCoeff() == 0.0);
}
