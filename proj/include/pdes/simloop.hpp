#pragma once

#include "pdes/core.hpp"
#include "pdes/dither.hpp"
#include "pdes/escontrol.hpp"

#include <optional>
#include <vector>

namespace pdes {

struct LogOptions {
    std::vector<double> snapshot_times;  // plant field dumps (nearest step)
    /// Also run the other diffusion law form in shadow and record the max |U − U_shadow|.
    bool shadow_form = false;
};

struct LoopWiring {
    Scenario scen;
    DitherSource dither;
    LogOptions log;
};

LoopWiring make_wiring(const Scenario& s, std::optional<DitherSource> dither = std::nullopt);

struct LoopDiagnostics {
    double max_form_gap = 0.0;  // shadow_form only
    long steps = 0;
};

/// Actuate θ = θ̂ + S(t), advance the plant, read Θ, evaluate y (delayed by D_t when configured),
/// estimate, filter, integrate θ̂, log. Throws NumericalError on blowup with the step index.
SimTrace run_closed_loop(const LoopWiring& w, LoopDiagnostics* diag = nullptr);

struct SteadyState {
    double mean_abs_y = 0.0;      // |y − y*|
    double mean_abs_Theta = 0.0;  // |Θ − Θ*|
    double mean_abs_theta_hat = 0.0;  // |θ̂ − Θ*| with θ̂ = θ − S
    double window_start = 0.0;
};
/// Means over the final 10% of the trace.
SteadyState steady_state(const SimTrace& tr, const Scenario& s);

// ---------------------------------------------------------------------------
// Averaged closed loop

struct AvgSystemState {
    double vartheta = 0.0;
    Field u;  // u_av; u[n] is the boundary ODE state u_av(D)
};

struct AvgReport {
    std::vector<double> t, psi, upsilon;
    double mu = 0.0;               // fitted decay rate of Ψ
    double envelope_const = 0.0;   // sup Ψ(t) e^{μt} / Ψ(0)
    double max_rel_increase = 0.0; // max over k ≥ 1 of (Υ_{k+1} − Υ_k)/Υ_k
    Step3Thresholds thresholds{};
};

/// Ψ = ϑ² + ‖u‖² + ‖u_x‖² + u(D)²
double psi_norm(const AvgSystemState& st);
/// Υ = ϑ²/2 + (a/2)‖w‖² + (b/2)‖w_x‖² + (d/2) w(D)² with w the backstepping transform of u_av.
double lyapunov_monitor(const AvgSystemState& st, double K, double H, double c, const LyapunovWeights& wts);

AvgSystemState make_avg_state(const Scenario& s, double vartheta0);
/// CN interior + exact exponential step of the boundary ODE + trapezoid on ϑ.
void step_average_system(AvgSystemState& st, const ParabolicCN& cn, const Scenario& s);
AvgReport run_average_system(const Scenario& s, double vartheta0, double horizon);

}  // namespace pdes
