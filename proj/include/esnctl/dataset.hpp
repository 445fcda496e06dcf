#pragma once

#include <string>
#include <vector>

#include "esnctl/scaling.hpp"

namespace esnctl {

/// Synchronized input/output record used for identification. u and y_sys
/// must have equal length T > k0; k0 is the washout prefix dropped before
/// regression.
struct Dataset {
    std::vector<double> u;
    std::vector<double> y_sys;
    double t_s = 1.0;  // sampling time, seconds
    int k0 = 0;        // washout samples

    int size() const { return static_cast<int>(u.size()); }

    void validate() const;

    /// Copy with both channels passed through their scalers.
    Dataset scaled(const AffineScaler& u_scale, const AffineScaler& y_scale) const;
};

/// Reads a two-column CSV (header "u,y", '#' comments skipped). Sampling
/// time comes from the sidecar JSON "<path>.meta.json" when present.
Dataset load_dataset(const std::string& path);

/// Writes the CSV plus its sidecar. Values are printed with 17 significant
/// digits so a reload is bit-exact. Extra header comment lines (already
/// prefixed with '#') are emitted verbatim before the column header.
void save_dataset(const Dataset& d, const std::string& path,
                  const std::vector<std::string>& header_comments = {});

}  // namespace esnctl
