#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "esnctl/dataset.hpp"
#include "esnctl/experiment.hpp"
#include "esnctl/ident.hpp"
#include "esnctl/model.hpp"
#include "esnctl/rng.hpp"
#include "esnctl/text_io.hpp"

using namespace esnctl;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("fmt17 round-trips arbitrary doubles exactly") {
    Rng rng(1);
    for (int k = 0; k < 2000; ++k) {
        const double v = (rng.symmetric()) * std::pow(10.0, rng.symmetric() * 30.0);
        CHECK(parse_double(fmt17(v)) == v);
    }
    CHECK(parse_double(fmt17(0.0)) == 0.0);
    CHECK(parse_double(fmt17(-0.1)) == -0.1);
}

TEST_CASE("dataset CSV round-trip is bit-exact, comments are skipped") {
    Dataset d;
    d.t_s = 10.0;
    Rng rng(2);
    for (int k = 0; k < 500; ++k) {
        d.u.push_back(12.7 + 4.0 * rng.u01());
        d.y_sys.push_back(6.0 + 2.6 * rng.u01());
    }
    const std::string path = tmp_path("esnctl_test_dataset.csv");
    save_dataset(d, path, {"# test run", "# config: {}"});
    const Dataset back = load_dataset(path);

    REQUIRE(back.size() == d.size());
    CHECK(back.t_s == 10.0);
    for (int k = 0; k < d.size(); ++k) {
        CHECK(back.u[k] == d.u[k]);
        CHECK(back.y_sys[k] == d.y_sys[k]);
    }
    std::remove(path.c_str());
    std::remove((path + ".meta.json").c_str());
}

TEST_CASE("dataset loader rejects malformed files") {
    const std::string path = tmp_path("esnctl_bad_dataset.csv");
    write_file(path, "a,b\n1,2\n");
    CHECK_THROWS(load_dataset(path));
    write_file(path, "u,y\n1,2,3\n");
    CHECK_THROWS(load_dataset(path));
    CHECK_THROWS(load_dataset(tmp_path("esnctl_nonexistent_file.csv")));
    std::remove(path.c_str());
}

TEST_CASE("reservoir file reloads bit-exactly") {
    const auto w = generate_reservoir(40, 0.1, 91, ScalingMode::Radius, 0.85);
    const std::string path = tmp_path("esnctl_test_reservoir.esn");
    save_reservoir(w, path);
    const LoadedModel back = load_model(path);

    CHECK_FALSE(back.readout.has_value());
    CHECK(back.reservoir.n == 40);
    CHECK(back.reservoir.seed == 91);
    CHECK(back.reservoir.mode == ScalingMode::Radius);
    CHECK(back.reservoir.target == w.target);
    CHECK((Matrix(back.reservoir.w_x) - Matrix(w.w_x)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.reservoir.w_x.nonZeros() == w.w_x.nonZeros());
    CHECK((back.reservoir.w_u - w.w_u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.reservoir.w_y - w.w_y).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("full model file round-trips readout and scalers bit-exactly") {
    EsnModel m;
    m.reservoir = generate_reservoir(25, 0.2, 7, ScalingMode::Norm, 0.9);
    Rng rng(3);
    m.readout.w_out1 = Vector(25);
    for (int i = 0; i < 25; ++i)
        m.readout.w_out1(i) = (i % 3 == 0) ? 0.0 : rng.symmetric();
    m.readout.w_out2 = rng.symmetric();
    m.readout.lambda = 0.0123;
    m.readout.support = ReadoutWeights::compute_support(m.readout.w_out1);
    m.u_scale = {14.7, 2.0};
    m.y_scale = {7.325, 1.325};

    const std::string path = tmp_path("esnctl_test_model.esn");
    save_model(m, path);
    const LoadedModel back = load_model(path);
    REQUIRE(back.readout.has_value());
    REQUIRE(back.u_scale.has_value());

    const EsnModel m2 = back.require_model("test");
    CHECK((m2.readout.w_out1 - m.readout.w_out1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m2.readout.w_out2 == m.readout.w_out2);
    CHECK(m2.readout.lambda == m.readout.lambda);
    CHECK(m2.readout.support == m.readout.support);
    CHECK(m2.u_scale.center == 14.7);
    CHECK(m2.y_scale.half_range == 1.325);

    // behavioral equality: same free run on the same input
    std::vector<double> u(50);
    for (auto& v : u) v = 12.7 + 4.0 * rng.u01();
    const auto ya = m.free_run(u, 7.0);
    const auto yb = m2.free_run(u, 7.0);
    for (std::size_t k = 0; k < u.size(); ++k) CHECK(ya[k] == yb[k]);
    std::remove(path.c_str());
}

TEST_CASE("experiment config survives a JSON round trip") {
    ExperimentConfig cfg;
    cfg.reservoir.n = 123;
    cfg.reservoir.seed = 987654321;
    cfg.training.selection_margin = 3.5;
    cfg.excitation.duration = 12340.0;
    cfg.mpc.q = 2.25;
    cfg.scenario.reference = {{0.0, 7.0}, {100.0, 8.5}};
    cfg.scenario.disturbance = {{500.0, 0.61}};
    cfg.plant.substep = 0.25;

    const auto text = cfg.to_json_string();
    const auto back = ExperimentConfig::from_json_string(text);
    CHECK(back.to_json_string() == text);
    CHECK(back.reservoir.n == 123);
    CHECK(back.training.selection_margin == 3.5);
    CHECK(back.scenario.reference.size() == 2);
    CHECK(back.scenario.reference[1].value == 8.5);
    CHECK(back.plant.substep == 0.25);
}

TEST_CASE("apply_seed rederives the excitation seeds") {
    ExperimentConfig cfg;
    cfg.apply_seed(7);
    CHECK(cfg.reservoir.seed == 7);
    CHECK(cfg.excitation.train_seed != cfg.excitation.val_seed);
}

TEST_CASE("model loader rejects damaged files") {
    const std::string path = tmp_path("esnctl_bad_model.esn");
    write_file(path, "not a model\n");
    CHECK_THROWS(load_model(path));
    write_file(path, "esn-model v1\n[reservoir]\nn 3\n");
    CHECK_THROWS(load_model(path));
    std::remove(path.c_str());
}
