#pragma once

#include "pdes/core.hpp"
#include "pdes/solvers.hpp"

#include <vector>

namespace pdes {

struct StaticMap {
    double H = -2.0;
    double Theta_star = 2.0;
    double y_star = 5.0;
};

StaticMap static_map(const Scenario& s);
/// y* + (H/2)(Θ − Θ*)²
double map_eval(const StaticMap& m, double Theta);

struct Estimates {
    double G = 0.0;
    double Hhat = 0.0;
};

/// G = M(t)·y, Ĥ = N(t)·y.
Estimates estimates(double y, double t, double a, double omega);

/// Exact zero-order-hold discretization of c/(s+c).
double lowpass_step(double state, double input, double c, double dt);

struct EsState {
    double theta_hat = 0.0;
    double U = 0.0;            // filter output
    double G = 0.0;            // gradient estimate from the washed-out output
    double Hhat_raw = 0.0;     // N(t)·ỹ
    double Hhat = 0.0;         // estimate used by the laws (low-passed when enabled)
    double washout = 0.0;      // low-pass of y removed before demodulation
    bool primed = false;
    DelayLine u_history{0};    // past U over the predictor window
    double t = 0.0;
};

/// θ̂(0) from the scenario, predictor buffer sized for D (+ D_t) where the class needs one.
EsState make_es_state(const Scenario& s);

/// Washout, demodulation and Hessian filtering. Stores G, Ĥ in es.
void update_estimates(EsState& es, double y, double t, const Scenario& s);

// Law brackets (the argument of the low-pass operator) from the current estimates.
double bracket_diffusion_measured(const EsState& es, double Theta, double t, const Scenario& s);
double bracket_diffusion_fullstate(const EsState& es, const Field& u, const Scenario& s);
/// ∫ over the delay window of past U, weighted by 1 − F(σ) for a distributed measure.
double predictor_integral(const EsState& es, const Scenario& s);
double bracket_predictor(const EsState& es, const Scenario& s);
double bracket_rad(const EsState& es, const Field& u, const Scenario& s);
double bracket_stefan(const EsState& es, const Field& u, const Scenario& s);
/// c[KĤ u(D) − ∂t u(D)] + ρ(D)G + Ĥ ∫ ρ(σ) ∂t u(σ) dσ, with c the wave damping gain.
double bracket_wave_reduced(const EsState& es, const Field& u, const Field& u_t, const Scenario& s);

/// U ← T{bracket}; θ̂ ← θ̂ + dt (U + extra_rate); pushes U into the predictor buffer.
double commit(EsState& es, double bracket, const Scenario& s, double extra_rate = 0.0);

double control_diffusion_measured(EsState& es, double y, double Theta, double t, const Scenario& s);
double control_diffusion_fullstate(EsState& es, const Field& u, double y, double t, const Scenario& s);
double control_transport_predictor(EsState& es, double y, double t, const Scenario& s);
double control_rad(EsState& es, const Field& u, double y, double t, const Scenario& s);
double control_stefan(EsState& es, const Field& u, double y, double t, const Scenario& s);
/// Wave: predictor law with boundary damping −c_d ∂x ᾱ(D) on θ̂ (default), or the reduced law without damping.
/// u is the error field ᾱ, u_t its velocity.
double control_wave(EsState& es, const Field& u, const Field& u_t, double y, double t, const Scenario& s);

// ---------------------------------------------------------------------------
// RAD kernels (real branches of cosh/sinh for ξ ≤ 0 and ξ > 0)

struct RadKernel {
    double eps, b, xi;
    double gamma(double x) const;
    double m(double z) const;
};
RadKernel rad_kernel(const RadParams& p);

// ---------------------------------------------------------------------------
// Backstepping pair on the averaged error variables

/// ∫₀^x f dr at every node, exact for quintics (6-point local stencils).
std::vector<double> cumulative_integral(const std::vector<double>& f, double h);

struct BacksteppingResult {
    Field w;              // forward transform
    Field reconstruction; // inverse applied to w
    Field residual;       // reconstruction − u
};

Field backstepping_forward(const Field& u, double vartheta, double K, double H);
Field backstepping_inverse(const Field& w, double vartheta, double K, double H);
BacksteppingResult backstepping_residual(const Field& u_avg, double vartheta, double K, double H);

struct LyapunovWeights {
    double a, b, d;
};
/// a = (c−λ)/(8Dλ³), b = 1/(8Dλ³), d = 1 with λ = −KH > 0.
LyapunovWeights lyapunov_weights(double K, double H, double c, double D);

struct Step3Thresholds {
    double c1, c2, zeta;
    bool cleared(double c) const { return c > c1 && c > c2; }
};
Step3Thresholds step3_thresholds(double K, double H, double D);

/// ‖f‖² by the trapezoid rule and ‖f_x‖² by cell differences.
double l2_sq(const Field& f);
double h1_semi_sq(const Field& f);

}  // namespace pdes
