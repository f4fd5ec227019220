#pragma once

#include "pdes/core.hpp"

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

namespace pdes {

/// Thomas algorithm. lower[i] couples x[i-1], upper[i] couples x[i+1]; rhs is overwritten with x.
void solve_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                       const std::vector<double>& upper, std::vector<double>& rhs);

// ---------------------------------------------------------------------------
// Parabolic family: α_t = ε α_xx + b α_x + λ α on [0, L]
// Left: Neumann by ghost reflection α_{-1} = α_1. Right: Dirichlet actuation.

/// Crank–Nicolson stepper with a pre-factored tridiagonal matrix.
class ParabolicCN {
public:
    ParabolicCN(double length, int n_x, double dt, double eps = 1.0, double adv = 0.0, double react = 0.0);

    /// Advances f by one dt; the right node becomes right_value.
    void step(Field& f, double right_value) const;

    double dt() const { return dt_; }
    int n_x() const { return n_; }

private:
    int n_;
    double dt_;
    std::vector<double> lo_, di_, up_;  // spatial operator on unknown nodes 0..n-1
    std::vector<double> c_, m_;         // Thomas forward-sweep factors of (I - dt/2 L)
};

struct DiffusionState {
    Field field;
};

struct RadState {
    Field field;
    RadParams params;
};

/// Neumann-left / Dirichlet-right heat step. Θ readout is field[0].
DiffusionState step_diffusion(const DiffusionState& s, double theta_in, double dt);
RadState step_rad(const RadState& s, double theta_in, double dt);

/// Exact heat-equation solution satisfying both boundary conditions: e^{-(π/2L)² t} cos(πx/2L).
double manufactured_heat(double x, double t, double length);

/// One CN step with Dirichlet values at both ends. lo/di/up hold the spatial operator row of every
/// node (end rows ignored). Used by the comparison IBVPs and as an oracle for the ghost-node identity.
void step_cn_dirichlet(Field& f, const std::vector<double>& lo, const std::vector<double>& di,
                       const std::vector<double>& up, double dt, double left_new, double right_new);
/// ε α_xx + b α_x + λ α rows on the field's grid.
void parabolic_rows(const Field& f, double eps, double adv, double react, std::vector<double>& lo,
                    std::vector<double>& di, std::vector<double>& up);

// ---------------------------------------------------------------------------
// Stefan: heat equation on (0, s(t)), s = k_t e^{-k_b t}, boundary immobilized by ξ = x/s.

struct StefanState {
    Field field;  // values on the fixed ξ grid, dx = s/n_x
    double s = 1.0;
    StefanParams params;
};

double stefan_boundary(const StefanParams& p, double t);
StefanState make_stefan_state(const StefanParams& p, int n_x, double t0, double value = 0.0);
StefanState step_stefan(const StefanState& st, double theta_in, double dt);
/// Same immobilized scheme with Dirichlet data at x = 0 and at the front.
StefanState step_stefan_dirichlet(const StefanState& st, double left_in, double front_in, double dt);

/// Independent oracle: explicit Euler on a fixed physical grid; the front cuts through
/// the last active cell and is handled with a non-uniform 3-point stencil.
class StefanFrontTracking {
public:
    StefanFrontTracking(const StefanParams& p, int n_x, double t0);
    void set(const std::vector<double>& x, const std::vector<double>& v);  // samples interpolated onto nodes
    /// Advances to t_target with internal substeps; boundary(t) supplies the Dirichlet value at s(t).
    template <class Boundary>
    void advance_to(double t_target, Boundary&& boundary);
    double value_at(double x) const;  // linear interpolation including the front
    double time() const { return t_; }
    double front() const { return stefan_boundary(p_, t_); }

private:
    void substep(double dt, double bc_now);
    StefanParams p_;
    double h_, t_, dt_max_, bc_ = 0.0;
    std::vector<double> u_;
};

template <class Boundary>
void StefanFrontTracking::advance_to(double t_target, Boundary&& boundary) {
    while (t_ < t_target - 1e-15) {
        double dt = std::min(dt_max_, t_target - t_);
        substep(dt, boundary(t_));
    }
    bc_ = boundary(t_);
}

// ---------------------------------------------------------------------------
// Wave: α_tt = α_xx, Neumann left, Dirichlet right. Störmer–Verlet (leapfrog).

struct WaveState {
    Field disp;  // α at t
    Field vel;   // ∂t α at t - dt/2 (staggered)
};

/// Builds the staggered state from α(·,0), ∂tα(·,0) with a second-order half step.
WaveState make_wave_state(const Field& disp0, const Field& vel0, double dt);
/// Throws ValidationError if dt > dx.
WaveState step_wave(const WaveState& s, double theta_in, double dt);
void step_wave_inplace(WaveState& s, double theta_in, double dt);
/// Conserved leapfrog energy between steps n and n+1 (needs the previous displacement).
double wave_energy(const WaveState& s, const Field& prev_disp);

// ---------------------------------------------------------------------------
// Transport: exact delay line of D/dt samples.

class DelayLine {
public:
    /// Holds the current sample plus `lag` past samples.
    explicit DelayLine(long lag, double fill = 0.0) : buf_(static_cast<std::size_t>(lag) + 1, fill) {}
    void push(double v) {
        head_ = (head_ + 1) % buf_.size();
        buf_[head_] = v;
    }
    /// Sample pushed k steps ago (k = 0 is the newest).
    double delayed(long k) const {
        auto n = buf_.size();
        return buf_[(head_ + n - static_cast<std::size_t>(k) % n) % n];
    }
    long lag() const { return static_cast<long>(buf_.size()) - 1; }
    /// Trapezoid of w(k·dt)·sample(k) over k = 0..lag.
    template <class Weight>
    double integrate(double dt, Weight&& w) const {
        long n = lag();
        double acc = 0.0;
        for (long k = 0; k <= n; ++k) acc += ((k == 0 || k == n) ? 0.5 : 1.0) * w(k * dt) * delayed(k);
        return acc * dt;
    }

private:
    std::vector<double> buf_;
    std::size_t head_ = 0;
};

struct TransportState {
    DelayLine line{0};
};

TransportState make_transport_state(double delay, double dt, double fill = 0.0);
/// Pushes θ_in and returns it delayed by exactly D/dt steps.
std::pair<TransportState, double> step_transport(TransportState s, double theta_in);

}  // namespace pdes
