#pragma once

#include <string>
#include <utility>
#include <vector>

#include "esnctl/ident.hpp"
#include "esnctl/reservoir.hpp"

namespace esnctl {

/// Outcome of one reduction pass, with validation fitting tracked at each
/// stage so the cost of pruning and the recovery from retraining are both
/// visible.
struct ReductionReport {
    int n_before = 0;
    int n_after = 0;
    std::vector<int> removed;
    std::vector<int> kept;
    double fitting_before = 0.0;         // trained network, before any pruning
    double fitting_after_prune = 0.0;    // states removed, readout truncated
    double fitting_after_retrain = 0.0;  // least-squares retrain on the sub-network

    std::string to_text() const;
};

/// Which states the pipeline keeps when shrinking a LASSO-trained network.
///
/// ReadoutSupport keeps exactly the states the sparse readout uses. The
/// removed states generally still feed the kept ones, so the input-output
/// map changes and a retrain is required; this is what actually shrinks a
/// randomly coupled reservoir, and the retrained network has an all-nonzero
/// readout (the minimality condition for this model class).
///
/// ObservableClosure additionally keeps every state with a coupling path
/// into the readout support. Pruning is then exact (no retrain needed to
/// preserve behavior), but on a generically connected reservoir the closure
/// is the whole state set and nothing is removed.
enum class ReductionMode { ReadoutSupport, ObservableClosure };

/// Smallest index set containing supp(w_out1) and closed under coupling:
/// if i is in the set and W_x(i,j) != 0 then j joins it (states feeding an
/// output-relevant state are output-relevant). States outside the set
/// cannot influence the output for any input. Sorted ascending. Throws
/// std::invalid_argument when the readout support is empty.
std::vector<int> observable_closure(const ReservoirWeights& w, const ReadoutWeights& rw);

/// Restricts the network to `keep` (rows/cols of W_x, rows of W_u/W_y,
/// columns of w_out1) after checking that keep contains the readout support
/// and is closed under observable_closure; under those preconditions the
/// input-output map is unchanged whenever both networks start from states
/// agreeing on the kept coordinates. Throws std::invalid_argument otherwise.
std::pair<ReservoirWeights, ReadoutWeights> prune(const ReservoirWeights& w,
                                                  const ReadoutWeights& rw,
                                                  const std::vector<int>& keep);

/// Restriction without the closure check (keep must still cover the readout
/// support). Used by the pipeline's aggressive reduction, where the map is
/// allowed to change because a retrain follows.
std::pair<ReservoirWeights, ReadoutWeights> restrict_states(
    const ReservoirWeights& w, const ReadoutWeights& rw, const std::vector<int>& keep);

/// Full reduction pass: select the keep set (per mode), restrict, retrain
/// the readout by least squares on the training set, and report validation
/// fitting before pruning, after pruning and after retraining. Both
/// datasets must already be in the network's working units.
struct ReductionResult {
    ReservoirWeights reservoir;
    ReadoutWeights readout;
    ReductionReport report;
};

ReductionResult reduce_and_retrain(const ReservoirWeights& w, const ReadoutWeights& rw,
                                   const Dataset& training, const Dataset& validation,
                                   ReductionMode mode = ReductionMode::ReadoutSupport);

}  // namespace esnctl
