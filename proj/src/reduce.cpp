#include "esnctl/reduce.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace esnctl {

namespace {

std::vector<char> keep_mask(int n, const std::vector<int>& keep) {
    std::vector<char> mask(n, 0);
    for (int i : keep) {
        if (i < 0 || i >= n) throw std::invalid_argument("reduce: keep index out of range");
        mask[i] = 1;
    }
    return mask;
}

bool contains_support(const std::vector<char>& mask, const ReadoutWeights& rw) {
    for (int i : rw.support)
        if (!mask[i]) return false;
    return true;
}

}  // namespace

std::string ReductionReport::to_text() const {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "states: %d -> %d (%d removed, %.1f%%)\n",
                  n_before, n_after, n_before - n_after,
                  n_before > 0 ? 100.0 * (n_before - n_after) / n_before : 0.0);
    out << line;
    out << "stage                    n  fitting\n";
    std::snprintf(line, sizeof(line), "%-20s %5d  %9.2f%%\n", "trained", n_before,
                  fitting_before);
    out << line;
    std::snprintf(line, sizeof(line), "%-20s %5d  %9.2f%%\n", "pruned", n_after,
                  fitting_after_prune);
    out << line;
    std::snprintf(line, sizeof(line), "%-20s %5d  %9.2f%%\n", "pruned+retrained",
                  n_after, fitting_after_retrain);
    out << line;
    return out.str();
}

std::vector<int> observable_closure(const ReservoirWeights& w, const ReadoutWeights& rw) {
    if (rw.w_out1.size() != w.n)
        throw std::invalid_argument("observable_closure: readout dimension mismatch");
    if (rw.support.empty())
        throw std::invalid_argument(
            "observable_closure: readout support is empty, nothing to keep");

    std::vector<char> in_set(w.n, 0);
    std::vector<int> frontier;
    for (int i : rw.support) {
        in_set[i] = 1;
        frontier.push_back(i);
    }

    // Fixed point of: i observable and W_x(i,j) != 0  =>  j observable.
    // Row i of the sparse matrix lists exactly the states feeding state i.
    while (!frontier.empty()) {
        const int i = frontier.back();
        frontier.pop_back();
        for (SparseMatrix::InnerIterator it(w.w_x, i); it; ++it) {
            const int j = static_cast<int>(it.col());
            if (!in_set[j]) {
                in_set[j] = 1;
                frontier.push_back(j);
            }
        }
    }

    std::vector<int> closure;
    for (int i = 0; i < w.n; ++i)
        if (in_set[i]) closure.push_back(i);
    return closure;
}

std::pair<ReservoirWeights, ReadoutWeights> restrict_states(
    const ReservoirWeights& w, const ReadoutWeights& rw, const std::vector<int>& keep) {
    if (rw.w_out1.size() != w.n)
        throw std::invalid_argument("restrict_states: readout dimension mismatch");
    if (keep.empty()) throw std::invalid_argument("restrict_states: empty keep set");

    const auto mask = keep_mask(w.n, keep);
    if (!contains_support(mask, rw))
        throw std::invalid_argument("restrict_states: keep must cover the readout support");

    std::vector<int> sorted = keep;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const int m = static_cast<int>(sorted.size());

    std::vector<int> new_index(w.n, -1);
    for (int r = 0; r < m; ++r) new_index[sorted[r]] = r;

    ReservoirWeights out;
    out.n = m;
    out.seed = w.seed;
    out.mode = w.mode;
    out.target = w.target;
    out.w_u.resize(m);
    out.w_y.resize(m);
    for (int r = 0; r < m; ++r) {
        out.w_u(r) = w.w_u(sorted[r]);
        out.w_y(r) = w.w_y(sorted[r]);
    }

    // Submatrix rows keep their nonzeros in column order, so kept-state
    // updates sum exactly the same terms as before.
    std::vector<Eigen::Triplet<double>> entries;
    for (int r = 0; r < m; ++r) {
        for (SparseMatrix::InnerIterator it(w.w_x, sorted[r]); it; ++it) {
            const int j = new_index[static_cast<int>(it.col())];
            if (j >= 0) entries.emplace_back(r, j, it.value());
        }
    }
    out.w_x.resize(m, m);
    out.w_x.setFromTriplets(entries.begin(), entries.end());
    out.w_x.makeCompressed();
    out.density = m > 0 ? static_cast<double>(out.w_x.nonZeros()) / (static_cast<double>(m) * m) : 0.0;

    ReadoutWeights out_rw;
    out_rw.w_out1.resize(m);
    for (int r = 0; r < m; ++r) out_rw.w_out1(r) = rw.w_out1(sorted[r]);
    out_rw.w_out2 = rw.w_out2;
    out_rw.lambda = rw.lambda;
    out_rw.support = ReadoutWeights::compute_support(out_rw.w_out1);
    return {std::move(out), std::move(out_rw)};
}

std::pair<ReservoirWeights, ReadoutWeights> prune(const ReservoirWeights& w,
                                                  const ReadoutWeights& rw,
                                                  const std::vector<int>& keep) {
    const auto mask = keep_mask(w.n, keep);
    if (!contains_support(mask, rw))
        throw std::invalid_argument("prune: keep must cover the readout support");

    // Closure check: every state feeding a kept state must itself be kept,
    // otherwise removal changes the input-output behavior.
    for (int i : keep) {
        for (SparseMatrix::InnerIterator it(w.w_x, i); it; ++it) {
            if (!mask[static_cast<int>(it.col())])
                throw std::invalid_argument(
                    "prune: keep set not closed under coupling (state " +
                    std::to_string(it.col()) + " feeds kept state " + std::to_string(i) +
                    ")");
        }
    }
    return restrict_states(w, rw, keep);
}

ReductionResult reduce_and_retrain(const ReservoirWeights& w, const ReadoutWeights& rw,
                                   const Dataset& training, const Dataset& validation,
                                   ReductionMode mode) {
    training.validate();
    validation.validate();

    const Vector x0 = Vector::Zero(w.n);
    ReductionResult res;
    res.report.n_before = w.n;
    res.report.fitting_before =
        fitting(validation.y_sys, free_run(w, rw, validation.u, x0, validation.y_sys[0]));

    std::vector<int> keep;
    if (mode == ReductionMode::ObservableClosure) {
        keep = observable_closure(w, rw);
    } else {
        keep = rw.support;
        if (keep.empty())
            throw std::invalid_argument("reduce_and_retrain: readout support is empty");
    }

    auto [w_red, rw_pruned] = restrict_states(w, rw, keep);
    const Vector x0_red = Vector::Zero(w_red.n);
    res.report.n_after = w_red.n;
    res.report.kept = keep;
    {
        std::vector<char> mask(w.n, 0);
        for (int i : keep) mask[i] = 1;
        for (int i = 0; i < w.n; ++i)
            if (!mask[i]) res.report.removed.push_back(i);
    }
    res.report.fitting_after_prune = fitting(
        validation.y_sys,
        free_run(w_red, rw_pruned, validation.u, x0_red, validation.y_sys[0]));

    const LsResult retrained = train_ls(collect(w_red, training, x0_red));
    res.report.fitting_after_retrain = fitting(
        validation.y_sys,
        free_run(w_red, retrained.readout, validation.u, x0_red, validation.y_sys[0]));

    res.reservoir = std::move(w_red);
    res.readout = retrained.readout;
    return res;
}

}  // namespace esnctl
