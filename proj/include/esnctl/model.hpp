#pragma once

#include <optional>
#include <string>
#include <vector>

#include "esnctl/ident.hpp"
#include "esnctl/reservoir.hpp"
#include "esnctl/scaling.hpp"

namespace esnctl {

/// A deployable identified model: the fixed reservoir, the trained readout
/// and the affine maps between plant units and the network's working range.
/// The state equation always runs on scaled quantities; every public method
/// below speaks plant units.
struct EsnModel {
    ReservoirWeights reservoir;
    ReadoutWeights readout;
    AffineScaler u_scale;
    AffineScaler y_scale;

    int n_states() const { return reservoir.n; }

    /// State update with explicit output feedback (plant units).
    Vector advance(const Vector& x, double u_plant, double y_plant) const;

    /// Readout in plant units for a given state and previous input.
    double output(const Vector& x, double u_prev_plant) const;

    /// Closed-loop simulation over a plant-unit input sequence; y0 seeds the
    /// output feedback at the first step.
    std::vector<double> free_run(const std::vector<double>& u, double y0) const;

    /// Iterates the state equation at frozen (u, y) until the fixed point
    /// stops moving; used to initialize a controller at an equilibrium.
    Vector settle(double u_plant, double y_plant, int max_steps = 2000) const;
};

/// Text serialization. A reservoir-only file carries the [reservoir]
/// section; training appends [readout], and the scalers go into [scaling].
/// All values are written with 17 significant digits and reload bit-exactly.
void save_model(const EsnModel& m, const std::string& path);
void save_reservoir(const ReservoirWeights& w, const std::string& path);

struct LoadedModel {
    ReservoirWeights reservoir;
    std::optional<ReadoutWeights> readout;
    std::optional<AffineScaler> u_scale;
    std::optional<AffineScaler> y_scale;

    /// Requires readout and scalers to be present.
    EsnModel require_model(const std::string& context) const;
};

LoadedModel load_model(const std::string& path);

}  // namespace esnctl
