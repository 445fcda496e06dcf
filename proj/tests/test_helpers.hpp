#pragma once

#include <cmath>
#include <vector>

#include "esnctl/ident.hpp"
#include "esnctl/model.hpp"
#include "esnctl/plant.hpp"
#include "esnctl/rng.hpp"

namespace esnctl::testing {

/// Small model trained on a first-order linear system, y+ = a y + b u, so its
/// steady-state map is predictable (gain ~ b/(1-a)) and closed-loop tests
/// have a reachable target. Scalers stay at identity: the data already live
/// in the network's working range.
inline EsnModel make_trained_toy_model(std::uint64_t seed, int n = 24, double a = 0.8,
                                       double b = 0.2) {
    const auto w = generate_reservoir(n, 0.3, seed, ScalingMode::Norm, 0.8);
    Dataset d;
    d.t_s = 1.0;
    d.k0 = 80;
    Rng rng(seed + 999);
    double y = 0.0;
    for (int k = 0; k < 1200; ++k) {
        const double u = rng.symmetric();
        d.u.push_back(u);
        d.y_sys.push_back(y);
        y = a * y + b * u;
    }
    const auto ls = train_ls(collect(w, d, Vector::Zero(n)));
    EsnModel m;
    m.reservoir = w;
    m.readout = ls.readout;
    return m;
}

/// Truth system for the synthetic offset-free check: exactly the model's own
/// dynamics, with a constant bias added to the measurement only.
class EsnBiasPlant : public DiscretePlant {
  public:
    EsnBiasPlant(EsnModel model, double bias, double u_init)
        : model_(std::move(model)), bias_(bias), u_prev_(u_init) {
        x_ = Vector::Zero(model_.reservoir.n);
        for (int k = 0; k < 600; ++k) apply(u_init, 1.0);  // settle
    }

    double output() const override { return model_.output(x_, u_prev_) + bias_; }

    void apply(double u, double /*t_s*/) override {
        const double y_own = model_.output(x_, u_prev_);  // feedback unbiased
        x_ = model_.advance(x_, u, y_own);
        u_prev_ = u;
    }

  private:
    EsnModel model_;
    Vector x_;
    double bias_;
    double u_prev_;
};

}  // namespace esnctl::testing
