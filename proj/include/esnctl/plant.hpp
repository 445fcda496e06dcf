#pragma once

#include <cstdint>
#include <vector>

namespace esnctl {

/// Minimal interface a controller needs from the controlled process: read
/// the current output, then advance one sampling period with a held input.
class DiscretePlant {
  public:
    virtual ~DiscretePlant() = default;
    virtual double output() const = 0;
    virtual void apply(double u, double t_s) = 0;
};

/// Constants of the three-state pH neutralization reactor (acid, buffer and
/// base streams mixing in a tank; effluent pH measured through the implicit
/// charge-balance equation). This is the standard benchmark parameter set:
///
///   Wa' = (q1 (Wa1-Wa) + q2 (Wa2-Wa) + q3 (Wa3-Wa)) / (A h)
///   Wb' = (q1 (Wb1-Wb) + q2 (Wb2-Wb) + q3 (Wb3-Wb)) / (A h)
///   h'  = (q1 + q2 + q3 - Cv sqrt(h)) / A
///   0   = Wa + 10^(pH-14) - 10^(-pH)
///         + Wb (1 + 2*10^(pH-pK2)) / (1 + 10^(pK1-pH) + 10^(pH-pK2))
///
/// Flows in mL/s, level in cm, invariants in mol/L.
struct PhParams {
    double wa1 = 3.00e-3, wb1 = 0.0;      // acid feed (HNO3)
    double wa2 = -3.00e-2, wb2 = 3.00e-2; // buffer feed (NaHCO3)
    double wa3 = -3.05e-3, wb3 = 5.00e-5; // base feed (NaOH + trace NaHCO3)
    double pk1 = 6.35, pk2 = 10.25;       // carbonic acid constants
    double tank_area = 207.0;             // cm^2
    double valve_coeff = 8.75;            // mL/s per sqrt(cm)
    double q1 = 16.6;                     // acid flow, held constant
    double q2_nominal = 0.55;             // buffer flow (disturbance channel)
    double substep = 1.0;                 // RK4 integration step, seconds
};

/// The benchmark truth system. States: effluent charge invariant, carbonate
/// invariant, tank level. Control input is the base flow q3; the buffer
/// flow q2 is the unmeasured disturbance.
class PhPlant : public DiscretePlant {
  public:
    explicit PhPlant(const PhParams& p = {});

    /// Plant initialized at the exact equilibrium for the given flows.
    static PhPlant at_equilibrium(double q3, double q2, const PhParams& p = {});

    double output() const override;  // pH of the current state
    void apply(double q3, double t_s) override;

    void set_disturbance(double q2);
    double disturbance() const { return q2_; }
    const double* state() const { return x_; }

    /// pH for arbitrary invariants, solved by bisection on [0, 14] to 1e-10.
    /// Throws std::runtime_error when the bracket fails (non-physical state).
    static double solve_ph(double wa, double wb, const PhParams& p);

  private:
    PhPlant(const PhParams& p, double q3, double q2);  // equilibrium constructor

    PhParams p_;
    double x_[3];  // wa4, wb4, h
    double q2_;
};

/// Multilevel pseudo-random excitation: a fast-switching band (transient
/// information) followed by a slow band (steady-state gain), levels drawn
/// uniformly per dwell interval. Deterministic in the seed.
struct MprsConfig {
    std::vector<double> levels;
    double fast_period = 10.0;   // seconds
    double slow_period = 1000.0; // seconds
    double mix = 0.5;            // fraction of duration spent in the fast band
    std::uint64_t seed = 0;
    double duration = 40000.0;   // seconds
};

/// Emits the signal sampled every t_s seconds (duration/t_s samples).
/// Dwell switch instants fall on multiples of the band's period.
std::vector<double> generate_mprs(const MprsConfig& cfg, double t_s);

/// Piecewise-constant schedule: value_at(t) is the nominal value before the
/// first step time, then the most recent step value. Step times must be
/// strictly increasing.
struct DisturbanceSchedule {
    std::vector<double> times;
    std::vector<double> values;
    double nominal = 0.0;

    void validate() const;
    double value_at(double t) const;
};

}  // namespace esnctl
