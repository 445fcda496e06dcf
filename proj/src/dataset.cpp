#include "esnctl/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "esnctl/text_io.hpp"

namespace esnctl {

void Dataset::validate() const {
    if (u.size() != y_sys.size())
        throw std::invalid_argument("Dataset: u and y_sys lengths differ");
    if (static_cast<int>(u.size()) <= k0)
        throw std::invalid_argument("Dataset: length must exceed washout k0");
    if (t_s <= 0.0) throw std::invalid_argument("Dataset: t_s must be positive");
}

Dataset Dataset::scaled(const AffineScaler& u_scale, const AffineScaler& y_scale) const {
    Dataset out = *this;
    for (double& v : out.u) v = u_scale.apply(v);
    for (double& v : out.y_sys) v = y_scale.apply(v);
    return out;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset " + path);

    Dataset d;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            auto cols = split(line, ',');
            if (cols.size() != 2 || cols[0] != "u" || cols[1] != "y")
                throw std::runtime_error("dataset " + path + ": expected header 'u,y'");
            header_seen = true;
            continue;
        }
        auto cols = split(line, ',');
        if (cols.size() != 2)
            throw std::runtime_error("dataset " + path + ": malformed row '" + line + "'");
        d.u.push_back(parse_double(cols[0]));
        d.y_sys.push_back(parse_double(cols[1]));
    }
    if (!header_seen) throw std::runtime_error("dataset " + path + ": empty file");

    std::ifstream meta(path + ".meta.json");
    if (meta) {
        nlohmann::json j;
        meta >> j;
        d.t_s = j.value("t_s", 1.0);
    }
    return d;
}

void save_dataset(const Dataset& d, const std::string& path,
                  const std::vector<std::string>& header_comments) {
    if (d.u.size() != d.y_sys.size())
        throw std::invalid_argument("save_dataset: channel lengths differ");

    std::ostringstream out;
    for (const auto& c : header_comments) out << c << "\n";
    out << "u,y\n";
    for (std::size_t k = 0; k < d.u.size(); ++k)
        out << fmt17(d.u[k]) << ',' << fmt17(d.y_sys[k]) << "\n";
    write_file(path, out.str());

    nlohmann::json meta;
    meta["t_s"] = d.t_s;
    write_file(path + ".meta.json", meta.dump(2) + "\n");
}

}  // namespace esnctl
