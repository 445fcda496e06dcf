#include "esnctl/plant.hpp"

#include <cmath>
#include <stdexcept>

#include "esnctl/rng.hpp"

namespace esnctl {

namespace {

struct Derivative {
    double dwa, dwb, dh;
};

Derivative rhs(const double x[3], double q2, double q3, const PhParams& p) {
    const double vol = p.tank_area * x[2];
    const double q4 = p.valve_coeff * std::sqrt(std::max(x[2], 1e-9));
    Derivative d;
    d.dwa = (p.q1 * (p.wa1 - x[0]) + q2 * (p.wa2 - x[0]) + q3 * (p.wa3 - x[0])) / vol;
    d.dwb = (p.q1 * (p.wb1 - x[1]) + q2 * (p.wb2 - x[1]) + q3 * (p.wb3 - x[1])) / vol;
    d.dh = (p.q1 + q2 + q3 - q4) / p.tank_area;
    return d;
}

void rk4_step(double x[3], double q2, double q3, double dt, const PhParams& p) {
    const Derivative k1 = rhs(x, q2, q3, p);
    double t2[3] = {x[0] + 0.5 * dt * k1.dwa, x[1] + 0.5 * dt * k1.dwb,
                    x[2] + 0.5 * dt * k1.dh};
    const Derivative k2 = rhs(t2, q2, q3, p);
    double t3[3] = {x[0] + 0.5 * dt * k2.dwa, x[1] + 0.5 * dt * k2.dwb,
                    x[2] + 0.5 * dt * k2.dh};
    const Derivative k3 = rhs(t3, q2, q3, p);
    double t4[3] = {x[0] + dt * k3.dwa, x[1] + dt * k3.dwb, x[2] + dt * k3.dh};
    const Derivative k4 = rhs(t4, q2, q3, p);
    x[0] += dt / 6.0 * (k1.dwa + 2 * k2.dwa + 2 * k3.dwa + k4.dwa);
    x[1] += dt / 6.0 * (k1.dwb + 2 * k2.dwb + 2 * k3.dwb + k4.dwb);
    x[2] += dt / 6.0 * (k1.dh + 2 * k2.dh + 2 * k3.dh + k4.dh);
}

}  // namespace

PhPlant::PhPlant(const PhParams& p) : p_(p), q2_(p.q2_nominal) {
    // default construction parks the plant at the nominal neutral point
    *this = at_equilibrium(15.556, p.q2_nominal, p);
}

PhPlant PhPlant::at_equilibrium(double q3, double q2, const PhParams& p) {
    if (q2 < 0.0 || q3 < 0.0)
        throw std::invalid_argument("PhPlant: flows must be nonnegative");
    return PhPlant(p, q3, q2);
}

PhPlant::PhPlant(const PhParams& p, double q3, double q2) : p_(p), q2_(q2) {
    const double total = p_.q1 + q2 + q3;
    x_[0] = (p_.q1 * p_.wa1 + q2 * p_.wa2 + q3 * p_.wa3) / total;
    x_[1] = (p_.q1 * p_.wb1 + q2 * p_.wb2 + q3 * p_.wb3) / total;
    const double ratio = total / p_.valve_coeff;
    x_[2] = ratio * ratio;
}

double PhPlant::solve_ph(double wa, double wb, const PhParams& p) {
    const auto charge = [&](double ph) {
        const double h_ion = std::pow(10.0, -ph);
        const double oh_ion = std::pow(10.0, ph - 14.0);
        const double r2 = std::pow(10.0, ph - p.pk2);
        const double r1 = std::pow(10.0, p.pk1 - ph);
        return wa + oh_ion - h_ion + wb * (1.0 + 2.0 * r2) / (1.0 + r1 + r2);
    };

    double lo = 0.0, hi = 14.0;
    double f_lo = charge(lo), f_hi = charge(hi);
    if (f_lo > 0.0 || f_hi < 0.0)
        throw std::runtime_error("PhPlant: pH bracket failed, state outside physical range");
    // charge(ph) is strictly increasing, so bisection is safe
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (charge(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double PhPlant::output() const { return solve_ph(x_[0], x_[1], p_); }

void PhPlant::apply(double q3, double t_s) {
    if (t_s <= 0.0) throw std::invalid_argument("PhPlant: t_s must be positive");
    if (q3 < 0.0) throw std::invalid_argument("PhPlant: base flow must be nonnegative");
    const int substeps = std::max(1, static_cast<int>(std::ceil(t_s / p_.substep)));
    const double dt = t_s / substeps;
    for (int i = 0; i < substeps; ++i) rk4_step(x_, q2_, q3, dt, p_);
}

void PhPlant::set_disturbance(double q2) {
    if (q2 < 0.0) throw std::invalid_argument("PhPlant: buffer flow must be nonnegative");
    q2_ = q2;
}

std::vector<double> generate_mprs(const MprsConfig& cfg, double t_s) {
    if (cfg.levels.empty()) throw std::invalid_argument("generate_mprs: no levels");
    if (t_s <= 0.0 || cfg.fast_period <= 0.0 || cfg.slow_period <= 0.0)
        throw std::invalid_argument("generate_mprs: periods must be positive");
    if (cfg.mix < 0.0 || cfg.mix > 1.0)
        throw std::invalid_argument("generate_mprs: mix must be in [0, 1]");
    const int total = static_cast<int>(std::floor(cfg.duration / t_s));
    if (total <= 0) throw std::invalid_argument("generate_mprs: zero duration");

    Rng rng(cfg.seed);
    const double fast_end = cfg.mix * cfg.duration;

    std::vector<double> u(total);
    double level = cfg.levels[rng.below(cfg.levels.size())];
    int current_dwell = -1;
    for (int k = 0; k < total; ++k) {
        const double t = k * t_s;
        const bool fast = t < fast_end;
        const double period = fast ? cfg.fast_period : cfg.slow_period;
        // dwell index is anchored at the band start so switch instants land
        // on multiples of the band's period
        const double band_t = fast ? t : t - fast_end;
        const int dwell = (fast ? 0 : 1 << 28) + static_cast<int>(std::floor(band_t / period));
        if (dwell != current_dwell) {
            current_dwell = dwell;
            level = cfg.levels[rng.below(cfg.levels.size())];
        }
        u[k] = level;
    }
    return u;
}

void DisturbanceSchedule::validate() const {
    if (times.size() != values.size())
        throw std::invalid_argument("DisturbanceSchedule: times/values length mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1])
            throw std::invalid_argument("DisturbanceSchedule: times must be strictly increasing");
}

double DisturbanceSchedule::value_at(double t) const {
    double v = nominal;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (t >= times[i])
            v = values[i];
        else
            break;
    }
    return v;
}

}  // namespace esnctl
