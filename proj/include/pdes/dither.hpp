#pragma once

#include "pdes/core.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

namespace pdes {

struct Measure {
    MeasureKind kind = MeasureKind::uniform;
};

/// Everything needed to produce S(t) for one PDE class.
struct DitherSource {
    DitherMethod method = DitherMethod::analytic;
    PdeClass pde_class = PdeClass::diffusion;
    double a = 0.2;
    double omega = 10.0;
    double D = 1.0;
    RadParams rad;
    StefanParams stefan;
    Measure measure;
    double gamma = 1.0;
    int n_max = 10;
    /// Time advance applied before evaluation: S'(t) = S(t + shift) compensates a measurement delay.
    double shift = 0.0;
    /// Learned S(t) for method = pinn.
    std::function<double(double)> learned;
};

DitherSource make_dither_source(const Scenario& s);
/// |∫ e^{iωσ} dβ(σ)|²; makes the dither arriving through the distributed delay exactly a·sin ωt.
double distributed_gamma_auto(MeasureKind kind, double omega, double D);

double s_transport(double t, const DitherSource& src);
double s_wave(double t, const DitherSource& src);
double s_diffusion(double t, const DitherSource& src);
double s_rad_series(double t, const DitherSource& src);
double s_stefan_series(double t, const DitherSource& src);
double s_distributed(double t, const DitherSource& src, const Measure& m);

/// Partial sums S_0..S_nmax of the closed series, for truncation studies.
std::vector<double> rad_partial_sums(double t, const DitherSource& src);
std::vector<double> stefan_partial_sums(double t, const DitherSource& src);

/// Numeric oracles. Throws UnsupportedMethod where no well-posed construction exists.
std::vector<double> s_numeric(const std::vector<double>& t_grid, const DitherSource& src);

/// Flat-output series Σ y^{(k)}(t) L^{2k}/(2k)! for y = a sin ωt on a domain of length L.
double flat_series_heat(double t, double a, double omega, double L);

double demod_M(double t, double a, double omega);
double demod_N(double t, double a, double omega);

/// Evaluates the configured source (method + shift) at t.
class DitherSignal {
public:
    explicit DitherSignal(DitherSource src);
    double operator()(double t) const;
    const DitherSource& source() const { return src_; }

private:
    DitherSource src_;
    std::shared_ptr<std::vector<double>> table_;  // one period of the numeric wave construction
    double table_dt_ = 0.0;
};

// ---------------------------------------------------------------------------
// Motion-planning profiles β(x,t) with β(0,t) = a sin ωt, ∂xβ(0,t) = 0.
// Templated so tests can push jets through them.

template <class T>
T beta_diffusion(T x, T t, double a, double omega) {
    using std::exp;
    using std::sin;
    const double k = std::sqrt(omega / 2);
    return 0.5 * a * (exp(k * x) * sin(omega * t + k * x) + exp(-k * x) * sin(omega * t - k * x));
}

template <class T>
T beta_wave(T x, T t, double a, double omega) {
    using std::cos;
    using std::sin;
    return a * sin(omega * t) * cos(omega * x);
}

/// Second-order forward jet in one direction: value, first and second derivative.
struct Jet {
    double v = 0, d = 0, dd = 0;
};
inline Jet operator+(Jet a, Jet b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Jet operator-(Jet a, Jet b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Jet operator-(Jet a) { return {-a.v, -a.d, -a.dd}; }
inline Jet operator*(Jet a, Jet b) { return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2 * a.d * b.d + a.v * b.dd}; }
inline Jet operator*(double c, Jet a) { return {c * a.v, c * a.d, c * a.dd}; }
inline Jet operator*(Jet a, double c) { return c * a; }
inline Jet operator+(Jet a, double c) { return {a.v + c, a.d, a.dd}; }
inline Jet operator-(Jet a, double c) { return {a.v - c, a.d, a.dd}; }
inline Jet chain(Jet a, double f, double f1, double f2) { return {f, f1 * a.d, f1 * a.dd + f2 * a.d * a.d}; }
inline Jet sin(Jet a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet cos(Jet a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet exp(Jet a) {
    double e = std::exp(a.v);
    return chain(a, e, e, e);
}

struct ResidualReport {
    double max_pde = 0.0;
    double max_bc_value = 0.0;
    double max_bc_flux = 0.0;
    bool pass(double tol) const { return max_pde <= tol && max_bc_value <= tol && max_bc_flux <= tol; }
};

/// Substitutes the closed-form β into its PDE and both x = 0 conditions at random points.
/// The validated alternative to time-stepping the ill-posed sideways heat problem.
ResidualReport check_motion_planning_residual(const DitherSource& src, int n_points, std::uint64_t seed);

}  // namespace pdes
