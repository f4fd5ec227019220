#include "pdes/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pdes {

void solve_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                       const std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    if (n == 0) return;
    std::vector<double> c(n);
    double m = 1.0 / diag[0];
    c[0] = upper[0] * m;
    rhs[0] *= m;
    for (std::size_t i = 1; i < n; ++i) {
        m = 1.0 / (diag[i] - lower[i] * c[i - 1]);
        c[i] = (i + 1 < n ? upper[i] : 0.0) * m;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) * m;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

namespace {

// One CN step for a general tridiagonal operator on nodes 0..n-1 with Dirichlet node n.
void cn_general(Field& f, const std::vector<double>& lo, const std::vector<double>& di, const std::vector<double>& up,
                double dt, double right_new) {
    const int n = f.n_cells();
    auto& a = f.values;
    std::vector<double> rhs(n), A(n), B(n), C(n);
    for (int j = 0; j < n; ++j) {
        double l = (j > 0 ? lo[j] * a[j - 1] : 0.0) + di[j] * a[j] + up[j] * a[j + 1];
        rhs[j] = a[j] + 0.5 * dt * l;
        A[j] = -0.5 * dt * lo[j];
        B[j] = 1.0 - 0.5 * dt * di[j];
        C[j] = -0.5 * dt * up[j];
    }
    rhs[n - 1] += 0.5 * dt * up[n - 1] * right_new;
    solve_tridiagonal(A, B, C, rhs);
    std::copy(rhs.begin(), rhs.end(), a.begin());
    a[n] = right_new;
    f.t += dt;
}

}  // namespace

ParabolicCN::ParabolicCN(double length, int n_x, double dt, double eps, double adv, double react)
    : n_(n_x), dt_(dt), lo_(n_x), di_(n_x), up_(n_x), c_(n_x), m_(n_x) {
    if (n_x < 2) throw ValidationError("ParabolicCN: n_x ≥ 2 required");
    if (!(dt > 0) || dt > 1.0) throw ValidationError("ParabolicCN: 0 < dt ≤ 1 required");
    const double dx = length / n_x;
    const double d2 = eps / (dx * dx), d1 = adv / (2 * dx);
    for (int j = 0; j < n_; ++j) {
        lo_[j] = d2 - d1;
        di_[j] = -2 * d2 + react;
        up_[j] = d2 + d1;
    }
    // ghost α_{-1} = α_1 folds the left neighbour into the right one
    up_[0] = 2 * d2;
    lo_[0] = 0.0;
    for (int j = 0; j < n_; ++j) {
        double a = -0.5 * dt_ * lo_[j], b = 1.0 - 0.5 * dt_ * di_[j], c = -0.5 * dt_ * up_[j];
        m_[j] = 1.0 / (b - (j > 0 ? a * c_[j - 1] : 0.0));
        c_[j] = c * m_[j];
    }
}

void ParabolicCN::step(Field& f, double right_value) const {
    if (f.n_cells() != n_) throw ValidationError("ParabolicCN: grid mismatch");
    auto& a = f.values;
    // forward sweep fused with the explicit half of the scheme
    double prev = 0.0;
    std::vector<double> d(n_);
    for (int j = 0; j < n_; ++j) {
        double l = (j > 0 ? lo_[j] * a[j - 1] : 0.0) + di_[j] * a[j] + up_[j] * a[j + 1];
        double r = a[j] + 0.5 * dt_ * l;
        if (j == n_ - 1) r += 0.5 * dt_ * up_[j] * right_value;
        double sub = j > 0 ? -0.5 * dt_ * lo_[j] : 0.0;
        prev = (r - sub * prev) * m_[j];
        d[j] = prev;
    }
    a[n_] = right_value;
    a[n_ - 1] = d[n_ - 1];
    for (int j = n_ - 2; j >= 0; --j) a[j] = d[j] - c_[j] * a[j + 1];
    f.t += dt_;
}

void step_cn_dirichlet(Field& f, const std::vector<double>& lo, const std::vector<double>& di,
                       const std::vector<double>& up, double dt, double left_new, double right_new) {
    const int n = f.n_cells();
    if (n < 2) throw ValidationError("step_cn_dirichlet: n_x ≥ 2 required");
    auto& a = f.values;
    const int m = n - 1;  // interior unknowns 1..n-1
    std::vector<double> rhs(m), A(m), B(m), C(m);
    for (int i = 0; i < m; ++i) {
        const int j = i + 1;
        rhs[i] = a[j] + 0.5 * dt * (lo[j] * a[j - 1] + di[j] * a[j] + up[j] * a[j + 1]);
        A[i] = -0.5 * dt * lo[j];
        B[i] = 1.0 - 0.5 * dt * di[j];
        C[i] = -0.5 * dt * up[j];
    }
    rhs[0] += 0.5 * dt * lo[1] * left_new;
    rhs[m - 1] += 0.5 * dt * up[n - 1] * right_new;
    A[0] = 0.0;
    solve_tridiagonal(A, B, C, rhs);
    std::copy(rhs.begin(), rhs.end(), a.begin() + 1);
    a[0] = left_new;
    a[n] = right_new;
    f.t += dt;
}

void parabolic_rows(const Field& f, double eps, double adv, double react, std::vector<double>& lo,
                    std::vector<double>& di, std::vector<double>& up) {
    const auto n = f.values.size();
    const double d2 = eps / (f.dx * f.dx), d1 = adv / (2 * f.dx);
    lo.assign(n, d2 - d1);
    di.assign(n, -2 * d2 + react);
    up.assign(n, d2 + d1);
}

DiffusionState step_diffusion(const DiffusionState& s, double theta_in, double dt) {
    ParabolicCN cn(s.field.length(), s.field.n_cells(), dt);
    DiffusionState out = s;
    cn.step(out.field, theta_in);
    require_finite(out.field, "step_diffusion");
    return out;
}

RadState step_rad(const RadState& s, double theta_in, double dt) {
    if (!(s.params.epsilon > 0)) throw ValidationError("step_rad: ε > 0 violated");
    ParabolicCN cn(s.field.length(), s.field.n_cells(), dt, s.params.epsilon, s.params.advection, s.params.reaction);
    RadState out = s;
    cn.step(out.field, theta_in);
    require_finite(out.field, "step_rad");
    return out;
}

double manufactured_heat(double x, double t, double length) {
    double k = std::numbers::pi / (2 * length);
    return std::exp(-k * k * t) * std::cos(k * x);
}

// ---------------------------------------------------------------------------
// Stefan

double stefan_boundary(const StefanParams& p, double t) { return p.k_t * std::exp(-p.k_b * t); }

StefanState make_stefan_state(const StefanParams& p, int n_x, double t0, double value) {
    StefanState st;
    st.params = p;
    st.s = stefan_boundary(p, t0);
    st.field = Field(n_x, st.s, value, t0);
    return st;
}

StefanState step_stefan(const StefanState& st, double theta_in, double dt) {
    const auto& p = st.params;
    const double t = st.field.t;
    const double s_new = stefan_boundary(p, t + dt);
    if (s_new <= p.floor) throw NumericalError("step_stefan: domain collapse, s(t+dt) below floor");
    const double sh = stefan_boundary(p, t + 0.5 * dt);
    const double sdot = -p.k_b * sh;
    const int n = st.field.n_cells();
    const double dxi = 1.0 / n;
    const double d2 = 1.0 / (sh * sh * dxi * dxi);
    std::vector<double> lo(n), di(n), up(n);
    for (int j = 0; j < n; ++j) {
        double adv = (j * dxi) * sdot / sh / (2 * dxi);
        lo[j] = d2 - adv;
        di[j] = -2 * d2;
        up[j] = d2 + adv;
    }
    lo[0] = 0.0;
    up[0] = 2 * d2;
    StefanState out = st;
    cn_general(out.field, lo, di, up, dt, theta_in);
    out.s = s_new;
    out.field.dx = s_new / n;
    require_finite(out.field, "step_stefan");
    return out;
}

StefanState step_stefan_dirichlet(const StefanState& st, double left_in, double front_in, double dt) {
    const auto& p = st.params;
    const double s_new = stefan_boundary(p, st.field.t + dt);
    if (s_new <= p.floor) throw NumericalError("step_stefan: domain collapse, s(t+dt) below floor");
    const double sh = stefan_boundary(p, st.field.t + 0.5 * dt);
    const double sdot = -p.k_b * sh;
    const int n = st.field.n_cells();
    const double dxi = 1.0 / n, d2 = 1.0 / (sh * sh * dxi * dxi);
    std::vector<double> lo(n + 1), di(n + 1), up(n + 1);
    for (int j = 0; j <= n; ++j) {
        double adv = (j * dxi) * sdot / sh / (2 * dxi);
        lo[j] = d2 - adv;
        di[j] = -2 * d2;
        up[j] = d2 + adv;
    }
    StefanState out = st;
    step_cn_dirichlet(out.field, lo, di, up, dt, left_in, front_in);
    out.s = s_new;
    out.field.dx = s_new / n;
    require_finite(out.field, "step_stefan");
    return out;
}

StefanFrontTracking::StefanFrontTracking(const StefanParams& p, int n_x, double t0)
    : p_(p), h_(stefan_boundary(p, t0) / n_x), t_(t0), dt_max_(0.2 * h_ * h_), u_(static_cast<std::size_t>(n_x) + 1, 0.0) {}

void StefanFrontTracking::set(const std::vector<double>& x, const std::vector<double>& v) {
    for (std::size_t j = 0; j < u_.size(); ++j) {
        double xj = j * h_;
        auto it = std::upper_bound(x.begin(), x.end(), xj);
        if (it == x.begin()) {
            u_[j] = v.front();
        } else if (it == x.end()) {
            u_[j] = v.back();
        } else {
            auto k = static_cast<std::size_t>(it - x.begin());
            double w = (xj - x[k - 1]) / (x[k] - x[k - 1]);
            u_[j] = (1 - w) * v[k - 1] + w * v[k];
        }
    }
}

void StefanFrontTracking::substep(double dt, double bc_now) {
    const double s = stefan_boundary(p_, t_);
    // last active node sits at least half a cell inside the front
    auto J = static_cast<std::size_t>(std::floor((s - 0.5 * h_) / h_));
    J = std::min(J, u_.size() - 1);
    if (J < 2) throw NumericalError("StefanFrontTracking: front reached the left boundary");
    const double delta = s - J * h_;
    std::vector<double> next(u_);
    const double ih2 = 1.0 / (h_ * h_);
    next[0] = u_[0] + dt * 2 * (u_[1] - u_[0]) * ih2;
    for (std::size_t j = 1; j < J; ++j) next[j] = u_[j] + dt * (u_[j + 1] - 2 * u_[j] + u_[j - 1]) * ih2;
    next[J] = u_[J] + dt * 2 / (h_ + delta) * ((bc_now - u_[J]) / delta - (u_[J] - u_[J - 1]) / h_);
    for (std::size_t j = J + 1; j < u_.size(); ++j) next[j] = bc_now;
    u_.swap(next);
    t_ += dt;
}

double StefanFrontTracking::value_at(double x) const {
    const double s = front();
    auto J = std::min(static_cast<std::size_t>(std::floor((s - 0.5 * h_) / h_)), u_.size() - 1);
    if (x >= J * h_) {
        double w = (x - J * h_) / (s - J * h_);
        return (1 - w) * u_[J] + w * bc_;
    }
    auto k = static_cast<std::size_t>(x / h_);
    double w = x / h_ - k;
    return (1 - w) * u_[k] + w * u_[k + 1];
}

// ---------------------------------------------------------------------------
// Wave

namespace {

double wave_lap(const std::vector<double>& a, std::size_t j, double ih2) {
    return j == 0 ? 2 * (a[1] - a[0]) * ih2 : (a[j + 1] - 2 * a[j] + a[j - 1]) * ih2;
}

}  // namespace

WaveState make_wave_state(const Field& disp0, const Field& vel0, double dt) {
    WaveState s{disp0, vel0};
    const double ih2 = 1.0 / (disp0.dx * disp0.dx);
    const auto n = static_cast<std::size_t>(disp0.n_cells());
    for (std::size_t j = 0; j < n; ++j) s.vel[j] = vel0[j] - 0.5 * dt * wave_lap(disp0.values, j, ih2);
    return s;
}

void step_wave_inplace(WaveState& s, double theta_in, double dt) {
    if (dt > s.disp.dx * (1 + 1e-12)) throw ValidationError("step_wave: CFL dt ≤ dx violated");
    const auto n = static_cast<std::size_t>(s.disp.n_cells());
    const double ih2 = 1.0 / (s.disp.dx * s.disp.dx);
    auto& a = s.disp.values;
    auto& v = s.vel.values;
    for (std::size_t j = 0; j < n; ++j) v[j] += dt * wave_lap(a, j, ih2);
    for (std::size_t j = 0; j < n; ++j) a[j] += dt * v[j];
    v[n] = (theta_in - a[n]) / dt;
    a[n] = theta_in;
    s.disp.t += dt;
    s.vel.t = s.disp.t - 0.5 * dt;
}

WaveState step_wave(const WaveState& s, double theta_in, double dt) {
    WaveState out = s;
    step_wave_inplace(out, theta_in, dt);
    require_finite(out.disp, "step_wave");
    return out;
}

double wave_energy(const WaveState& s, const Field& prev) {
    const auto& a = s.disp.values;
    const auto& b = prev.values;
    const auto n = a.size() - 1;
    const double dx = s.disp.dx;
    double kin = 0.0, pot = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        double w = (j == 0 || j == n) ? 0.5 : 1.0;
        kin += w * s.vel[j] * s.vel[j];
    }
    for (std::size_t j = 0; j < n; ++j) pot += (a[j + 1] - a[j]) * (b[j + 1] - b[j]);
    return 0.5 * kin * dx + 0.5 * pot / dx;
}

// ---------------------------------------------------------------------------
// Transport

TransportState make_transport_state(double delay, double dt, double fill) {
    return TransportState{DelayLine(steps_in(delay, dt, "transport delay"), fill)};
}

std::pair<TransportState, double> step_transport(TransportState s, double theta_in) {
    s.line.push(theta_in);
    double out = s.line.delayed(s.line.lag());
    return {std::move(s), out};
}

}  // namespace pdes
