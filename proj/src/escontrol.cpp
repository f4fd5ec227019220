#include "pdes/escontrol.hpp"

#include "pdes/dither.hpp"

#include <array>
#include <cmath>

namespace pdes {

StaticMap static_map(const Scenario& s) { return {s.map.hessian, s.map.optimizer, s.map.optimum}; }

double map_eval(const StaticMap& m, double Theta) {
    double e = Theta - m.Theta_star;
    return m.y_star + 0.5 * m.H * e * e;
}

Estimates estimates(double y, double t, double a, double omega) {
    return {demod_M(t, a, omega) * y, demod_N(t, a, omega) * y};
}

double lowpass_step(double state, double input, double c, double dt) {
    double e = std::exp(-c * dt);
    return e * state + (1.0 - e) * input;
}

namespace {

long predictor_lag(const Scenario& s) {
    switch (s.pde_class) {
        case PdeClass::transport:
        case PdeClass::distributed_delay: return steps_in(s.domain_length + s.delay, s.grid.dt, "predictor window");
        case PdeClass::wave: return std::lround((s.domain_length + s.delay) / s.grid.dt);
        default: return 0;
    }
}

}  // namespace

EsState make_es_state(const Scenario& s) {
    EsState es;
    es.theta_hat = s.controller.theta_hat0;
    es.u_history = DelayLine(predictor_lag(s), 0.0);
    return es;
}

void update_estimates(EsState& es, double y, double t, const Scenario& s) {
    const auto& c = s.controller;
    const double dt = s.grid.dt;
    if (!es.primed) {
        es.washout = y;
        es.primed = true;
    }
    double yt = y;
    if (c.washout > 0) {
        es.washout = lowpass_step(es.washout, y, c.washout, dt);
        yt = y - es.washout;
    }
    auto e = estimates(yt, t, s.dither.amplitude, s.dither.frequency);
    es.G = e.G;
    es.Hhat_raw = e.Hhat;
    es.Hhat = c.hessian_filter > 0 ? lowpass_step(es.Hhat, e.Hhat, c.hessian_filter, dt) : e.Hhat;
    es.t = t;
}

double bracket_diffusion_measured(const EsState& es, double Theta, double t, const Scenario& s) {
    const double dither = s.dither.amplitude * std::sin(s.dither.frequency * t);
    return s.controller.gain * (es.G + es.Hhat * (es.theta_hat - Theta + dither));
}

double bracket_diffusion_fullstate(const EsState& es, const Field& u, const Scenario& s) {
    const double D = u.length();
    double f1 = kernel_integral(u, [D](double x) { return D - x; });
    return s.controller.gain * (es.G + es.Hhat * f1);
}

double predictor_integral(const EsState& es, const Scenario& s) {
    if (es.u_history.lag() == 0) return 0.0;
    const double Dt = s.delay, D = s.domain_length;
    const bool uniform = s.pde_class == PdeClass::distributed_delay && s.dither.measure == MeasureKind::uniform;
    return es.u_history.integrate(s.grid.dt, [&](double sigma) {
        if (!uniform || sigma <= Dt) return 1.0;
        return std::max(0.0, 1.0 - (sigma - Dt) / D);
    });
}

double bracket_predictor(const EsState& es, const Scenario& s) {
    return s.controller.gain * (es.G + es.Hhat * predictor_integral(es, s));
}

RadKernel rad_kernel(const RadParams& p) {
    return {p.epsilon, p.advection, p.advection * p.advection / (4 * p.epsilon) - p.reaction};
}

double RadKernel::gamma(double x) const {
    const double h = b / (2 * eps);
    if (xi < 0) {
        double q = std::sqrt(-xi / eps);
        return std::cos(q * x) + h / q * std::sin(q * x);
    }
    if (xi == 0) return 1.0 + h * x;
    double p = std::sqrt(xi / eps);
    return std::cosh(p * x) + h / p * std::sinh(p * x);
}

double RadKernel::m(double z) const {
    if (xi < 0) {
        double q = std::sqrt(-xi / eps);
        return -(q / eps) * std::sin(q * z);
    }
    if (xi == 0) return 0.0;
    double p = std::sqrt(xi / eps);
    return (p / eps) * std::sinh(p * z);
}

double bracket_rad(const EsState& es, const Field& u, const Scenario& s) {
    const auto k = rad_kernel(s.rad);
    const double D = u.length(), h = k.b / (2 * k.eps);
    double integral = kernel_integral(u, [&](double sig) { return std::exp(h * sig) * k.m(D - sig); });
    return s.controller.gain * std::exp(-h) * (k.gamma(D) * es.G + es.Hhat * integral);
}

double bracket_stefan(const EsState& es, const Field& u, const Scenario& s) {
    double integral = kernel_integral(u, [](double) { return 1.0; });
    return s.controller.gain * (es.G + es.Hhat * integral);
}

namespace {

double sample_kernel(const std::vector<double>& rho, double D, double x) {
    if (rho.empty()) return 0.0;
    double pos = x / D * static_cast<double>(rho.size() - 1);
    auto i = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(rho.size() - 1)));
    if (i + 1 >= rho.size()) return rho.back();
    double w = pos - static_cast<double>(i);
    return (1 - w) * rho[i] + w * rho[i + 1];
}

double boundary_slope(const Field& u) {
    const auto n = u.values.size() - 1;
    return (3 * u[n] - 4 * u[n - 1] + u[n - 2]) / (2 * u.dx);
}

}  // namespace

double bracket_wave_reduced(const EsState& es, const Field& u, const Field& u_t, const Scenario& s) {
    const auto& c = s.controller;
    const double D = u.length();
    const auto n = u.values.size() - 1;
    double out = c.wave_damping * (c.gain * es.Hhat * u[n] - u_t[n]);
    if (!c.wave_rho.empty()) {
        out += sample_kernel(c.wave_rho, D, D) * es.G;
        out += es.Hhat * kernel_integral(u_t, [&](double x) { return sample_kernel(c.wave_rho, D, x); });
    }
    return out;
}

double commit(EsState& es, double bracket, const Scenario& s, double extra_rate) {
    const double dt = s.grid.dt;
    es.U = lowpass_step(es.U, bracket, s.controller.filter_corner, dt);
    es.theta_hat += dt * (es.U + extra_rate);
    es.u_history.push(es.U);
    return es.U;
}

double control_diffusion_measured(EsState& es, double y, double Theta, double t, const Scenario& s) {
    update_estimates(es, y, t, s);
    return commit(es, bracket_diffusion_measured(es, Theta, t, s), s);
}

double control_diffusion_fullstate(EsState& es, const Field& u, double y, double t, const Scenario& s) {
    update_estimates(es, y, t, s);
    return commit(es, bracket_diffusion_fullstate(es, u, s), s);
}

double control_transport_predictor(EsState& es, double y, double t, const Scenario& s) {
    update_estimates(es, y, t, s);
    return commit(es, bracket_predictor(es, s), s);
}

double control_rad(EsState& es, const Field& u, double y, double t, const Scenario& s) {
    update_estimates(es, y, t, s);
    return commit(es, bracket_rad(es, u, s), s);
}

double control_stefan(EsState& es, const Field& u, double y, double t, const Scenario& s) {
    update_estimates(es, y, t, s);
    return commit(es, bracket_stefan(es, u, s), s);
}

double control_wave(EsState& es, const Field& u, const Field& u_t, double y, double t, const Scenario& s) {
    update_estimates(es, y, t, s);
    if (s.controller.wave_law == WaveLaw::reduced) return commit(es, bracket_wave_reduced(es, u, u_t, s), s);
    return commit(es, bracket_predictor(es, s), s, -s.controller.wave_damping * boundary_slope(u));
}

// ---------------------------------------------------------------------------
// Backstepping

std::vector<double> cumulative_integral(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 2) throw NumericalError("quadrature needs at least 2 nodes");
    std::vector<double> out(n, 0.0);
    if (n < 6) {
        for (std::size_t i = 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        return out;
    }
    // weights[o][k] = ∫_o^{o+1} L_k(ξ) dξ for the 6-node Lagrange basis on ξ = 0..5
    static const auto weights = [] {
        std::array<std::array<double, 6>, 5> w{};
        const double g[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
        const double gw[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
        for (int o = 0; o < 5; ++o)
            for (int k = 0; k < 6; ++k) {
                double acc = 0.0;
                for (int q = 0; q < 3; ++q) {
                    double xi = o + 0.5 + 0.5 * g[q], l = 1.0;
                    for (int m = 0; m < 6; ++m)
                        if (m != k) l *= (xi - m) / (k - m);
                    acc += 0.5 * gw[q] * l;
                }
                w[o][k] = acc;
            }
        return w;
    }();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t s = i >= 2 ? i - 2 : 0;
        if (s + 5 >= n) s = n - 6;
        const auto& w = weights[i - s];
        double acc = 0.0;
        for (int k = 0; k < 6; ++k) acc += w[k] * f[s + k];
        out[i + 1] = out[i] + h * acc;
    }
    return out;
}

Field backstepping_forward(const Field& u, double vartheta, double K, double H) {
    const double kb = K * H;
    const auto n = u.values.size();
    std::vector<double> xu(n);
    for (std::size_t j = 0; j < n; ++j) xu[j] = u.x(j) * u[j];
    auto c0 = cumulative_integral(u.values, u.dx);
    auto c1 = cumulative_integral(xu, u.dx);
    Field w = u;
    for (std::size_t j = 0; j < n; ++j) w[j] = u[j] - kb * (vartheta + u.x(j) * c0[j] - c1[j]);
    return w;
}

Field backstepping_inverse(const Field& w, double vartheta, double K, double H) {
    // With φ = ∫₀^x (x−r)u dr the forward map reads φ'' − K̄φ = w + K̄ϑ, φ(0) = φ'(0) = 0,
    // so u = w + K̄ϑ c(x) + K̄ ∫₀^x s(x−r) w(r) dr with c, s the cos/sin (K̄ < 0) or cosh/sinh (K̄ > 0) pair.
    const double kb = K * H;
    const auto n = w.values.size();
    Field u = w;
    if (kb == 0.0) return u;
    const double q = std::sqrt(std::abs(kb));
    const bool osc = kb < 0;
    auto even = [&](double z) { return osc ? std::cos(q * z) : std::cosh(q * z); };
    auto odd = [&](double z) { return osc ? std::sin(q * z) : std::sinh(q * z); };
    std::vector<double> we(n), wo(n);
    for (std::size_t j = 0; j < n; ++j) {
        we[j] = even(w.x(j)) * w[j];
        wo[j] = odd(w.x(j)) * w[j];
    }
    auto ce = cumulative_integral(we, w.dx);
    auto co = cumulative_integral(wo, w.dx);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = w.x(j);
        // sin(q(x−r)) = sin qx cos qr − cos qx sin qr; sinh likewise
        double conv = (odd(x) * ce[j] - even(x) * co[j]) / q;
        u[j] = w[j] + kb * vartheta * even(x) + kb * conv;
    }
    return u;
}

BacksteppingResult backstepping_residual(const Field& u_avg, double vartheta, double K, double H) {
    BacksteppingResult r;
    r.w = backstepping_forward(u_avg, vartheta, K, H);
    r.reconstruction = backstepping_inverse(r.w, vartheta, K, H);
    r.residual = r.reconstruction;
    for (std::size_t j = 0; j < r.residual.values.size(); ++j) r.residual[j] -= u_avg[j];
    return r;
}

LyapunovWeights lyapunov_weights(double K, double H, double c, double D) {
    const double lam = -K * H;
    if (!(lam > 0)) throw ValidationError("lyapunov: λ = −KH > 0 required (K > 0, H < 0)");
    const double l3 = 8 * D * lam * lam * lam;
    return {(c - lam) / l3, 1.0 / l3, 1.0};
}

Step3Thresholds step3_thresholds(double K, double H, double D) {
    const double lam = -K * H;
    if (!(lam > 0)) throw ValidationError("step3: λ = −KH > 0 required");
    const int n = 2000;
    const double h = D / n;
    double z = 0.0;
    for (int i = 0; i <= n; ++i) {
        double r = i * h, f = std::exp(-lam * (D - r) * (D - r)) - 1.0;
        z += (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f;
    }
    z *= h / 3;
    Step3Thresholds t;
    t.zeta = z;
    t.c1 = 1.5 * lam * lam * lam + lam + (1 + 2 * D) / lam + 2 * D * lam * z;
    t.c2 = lam + 8 * D * lam * lam * lam * ((4 * D * D + 1) / lam + 4 * D * D * lam * z);
    return t;
}

double l2_sq(const Field& f) {
    std::vector<double> sq(f.values.size());
    for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = f[j] * f[j];
    return trapezoid(sq, f.dx);
}

double h1_semi_sq(const Field& f) {
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < f.values.size(); ++j) {
        double d = f[j + 1] - f[j];
        acc += d * d;
    }
    return acc / f.dx;
}

}  // namespace pdes
