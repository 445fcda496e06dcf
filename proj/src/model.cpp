#include "esnctl/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "esnctl/text_io.hpp"

namespace esnctl {

Vector EsnModel::advance(const Vector& x, double u_plant, double y_plant) const {
    EsnState s{x, 0.0};
    return step(reservoir, s, u_scale.apply(u_plant), y_scale.apply(y_plant)).x;
}

double EsnModel::output(const Vector& x, double u_prev_plant) const {
    const double y_scaled =
        readout.w_out1.dot(x) + readout.w_out2 * u_scale.apply(u_prev_plant);
    return y_scale.invert(y_scaled);
}

std::vector<double> EsnModel::free_run(const std::vector<double>& u, double y0) const {
    std::vector<double> u_s(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) u_s[k] = u_scale.apply(u[k]);
    const auto y_s = esnctl::free_run(reservoir, readout, u_s,
                                      Vector::Zero(reservoir.n), y_scale.apply(y0));
    std::vector<double> y(y_s.size());
    for (std::size_t k = 0; k < y_s.size(); ++k) y[k] = y_scale.invert(y_s[k]);
    return y;
}

Vector EsnModel::settle(double u_plant, double y_plant, int max_steps) const {
    Vector x = Vector::Zero(reservoir.n);
    for (int k = 0; k < max_steps; ++k) {
        Vector next = advance(x, u_plant, y_plant);
        const double move = (next - x).lpNorm<Eigen::Infinity>();
        x = std::move(next);
        if (move < 1e-15) break;
    }
    return x;
}

namespace {

constexpr const char* kMagic = "esn-model v1";

void write_vector(std::ostringstream& out, const char* name, const Vector& v) {
    out << name;
    for (int i = 0; i < v.size(); ++i) out << ' ' << fmt17(v(i));
    out << "\n";
}

void write_reservoir_section(std::ostringstream& out, const ReservoirWeights& w) {
    out << "[reservoir]\n";
    out << "n " << w.n << "\n";
    out << "density " << fmt17(w.density) << "\n";
    out << "seed " << w.seed << "\n";
    out << "scaling_mode " << (w.mode == ScalingMode::Norm ? "norm" : "radius") << "\n";
    out << "scaling_target " << fmt17(w.target) << "\n";
    const Matrix dense = Matrix(w.w_x);
    out << "w_x\n";
    for (int i = 0; i < w.n; ++i) {
        for (int j = 0; j < w.n; ++j) out << (j ? " " : "") << fmt17(dense(i, j));
        out << "\n";
    }
    write_vector(out, "w_u", w.w_u);
    write_vector(out, "w_y", w.w_y);
}

class LineReader {
  public:
    explicit LineReader(const std::string& text) : in_(text) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            return true;
        }
        return false;
    }

  private:
    std::istringstream in_;
};

std::vector<double> parse_numbers(const std::string& line, std::size_t expect) {
    std::vector<double> out;
    out.reserve(expect);
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(parse_double(tok));
    if (expect && out.size() != expect)
        throw std::runtime_error("model file: expected " + std::to_string(expect) +
                                 " numbers, got " + std::to_string(out.size()));
    return out;
}

}  // namespace

void save_reservoir(const ReservoirWeights& w, const std::string& path) {
    std::ostringstream out;
    out << kMagic << "\n";
    write_reservoir_section(out, w);
    write_file(path, out.str());
}

void save_model(const EsnModel& m, const std::string& path) {
    std::ostringstream out;
    out << kMagic << "\n";
    write_reservoir_section(out, m.reservoir);
    out << "[readout]\n";
    out << "lambda " << fmt17(m.readout.lambda) << "\n";
    write_vector(out, "w_out1", m.readout.w_out1);
    out << "w_out2 " << fmt17(m.readout.w_out2) << "\n";
    out << "[scaling]\n";
    out << "u_center " << fmt17(m.u_scale.center) << "\n";
    out << "u_half " << fmt17(m.u_scale.half_range) << "\n";
    out << "y_center " << fmt17(m.y_scale.center) << "\n";
    out << "y_half " << fmt17(m.y_scale.half_range) << "\n";
    write_file(path, out.str());
}

LoadedModel load_model(const std::string& path) {
    const std::string text = read_file(path);
    LineReader reader(text);
    std::string line;
    if (!reader.next(line) || line != kMagic)
        throw std::runtime_error("model file " + path + ": bad magic line");

    LoadedModel loaded;
    ReadoutWeights readout;
    AffineScaler u_scale, y_scale;
    bool have_readout = false, have_scaling = false;

    std::string section;
    while (reader.next(line)) {
        if (line[0] == '[') {
            section = line;
            continue;
        }
        std::istringstream in(line);
        std::string key;
        in >> key;
        std::string rest;
        std::getline(in, rest);

        if (section == "[reservoir]") {
            auto& w = loaded.reservoir;
            if (key == "n") {
                w.n = static_cast<int>(parse_double(rest));
            } else if (key == "density") {
                w.density = parse_double(rest);
            } else if (key == "seed") {
                w.seed = static_cast<std::uint64_t>(std::stoull(rest));
            } else if (key == "scaling_mode") {
                std::string mode = rest;
                mode.erase(0, mode.find_first_not_of(' '));
                w.mode = (mode == "radius") ? ScalingMode::Radius : ScalingMode::Norm;
            } else if (key == "scaling_target") {
                w.target = parse_double(rest);
            } else if (key == "w_x") {
                if (w.n <= 0) throw std::runtime_error("model file: w_x before n");
                std::vector<Eigen::Triplet<double>> entries;
                for (int i = 0; i < w.n; ++i) {
                    if (!reader.next(line))
                        throw std::runtime_error("model file: truncated w_x");
                    const auto row = parse_numbers(line, static_cast<std::size_t>(w.n));
                    for (int j = 0; j < w.n; ++j)
                        if (row[j] != 0.0) entries.emplace_back(i, j, row[j]);
                }
                w.w_x.resize(w.n, w.n);
                w.w_x.setFromTriplets(entries.begin(), entries.end());
                w.w_x.makeCompressed();
            } else if (key == "w_u" || key == "w_y") {
                const auto vals = parse_numbers(rest, static_cast<std::size_t>(w.n));
                Vector v(w.n);
                for (int i = 0; i < w.n; ++i) v(i) = vals[i];
                (key == "w_u" ? w.w_u : w.w_y) = std::move(v);
            } else {
                throw std::runtime_error("model file: unknown reservoir key " + key);
            }
        } else if (section == "[readout]") {
            have_readout = true;
            if (key == "lambda") {
                readout.lambda = parse_double(rest);
            } else if (key == "w_out1") {
                const auto vals = parse_numbers(rest, static_cast<std::size_t>(loaded.reservoir.n));
                readout.w_out1.resize(loaded.reservoir.n);
                for (int i = 0; i < loaded.reservoir.n; ++i) readout.w_out1(i) = vals[i];
            } else if (key == "w_out2") {
                readout.w_out2 = parse_double(rest);
            } else {
                throw std::runtime_error("model file: unknown readout key " + key);
            }
        } else if (section == "[scaling]") {
            have_scaling = true;
            if (key == "u_center")
                u_scale.center = parse_double(rest);
            else if (key == "u_half")
                u_scale.half_range = parse_double(rest);
            else if (key == "y_center")
                y_scale.center = parse_double(rest);
            else if (key == "y_half")
                y_scale.half_range = parse_double(rest);
            else
                throw std::runtime_error("model file: unknown scaling key " + key);
        } else {
            throw std::runtime_error("model file: content outside any section");
        }
    }

    if (loaded.reservoir.n <= 0 || loaded.reservoir.w_u.size() != loaded.reservoir.n)
        throw std::runtime_error("model file " + path + ": incomplete reservoir");
    if (have_readout) {
        readout.support = ReadoutWeights::compute_support(readout.w_out1);
        loaded.readout = std::move(readout);
    }
    if (have_scaling) {
        loaded.u_scale = u_scale;
        loaded.y_scale = y_scale;
    }
    return loaded;
}

EsnModel LoadedModel::require_model(const std::string& context) const {
    if (!readout || !u_scale || !y_scale)
        throw std::runtime_error(context + ": model file lacks a trained readout");
    EsnModel m;
    m.reservoir = reservoir;
    m.readout = *readout;
    m.u_scale = *u_scale;
    m.y_scale = *y_scale;
    return m;
}

}  // namespace esnctl
