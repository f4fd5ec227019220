#include "pdes/simloop.hpp"

#include "pdes/solvers.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace pdes {

LoopWiring make_wiring(const Scenario& s, std::optional<DitherSource> dither) {
    validate(s);
    LoopWiring w{s, dither ? std::move(*dither) : make_dither_source(s), {}};
    if (w.dither.pde_class != s.pde_class)
        throw ValidationError("wiring: dither source class '" + std::string(to_string(w.dither.pde_class)) +
                              "' does not match plant class '" + std::string(to_string(s.pde_class)) + "'");
    return w;
}

namespace {

constexpr double spin_up_time = 5.0;

/// (3a_k − 4a_{k−1} + a_{k−2}) / 2dt, backward Euler until two past samples exist.
class TimeDerivative {
public:
    void push(const std::vector<double>& v) {
        prev2_ = std::move(prev_);
        prev_ = std::move(cur_);
        cur_ = v;
        ++count_;
    }
    void eval(std::vector<double>& out, double dt) const {
        out.assign(cur_.size(), 0.0);
        if (count_ < 2) return;
        for (std::size_t j = 0; j < cur_.size(); ++j)
            out[j] = count_ < 3 ? (cur_[j] - prev_[j]) / dt : (3 * cur_[j] - 4 * prev_[j] + prev2_[j]) / (2 * dt);
    }

private:
    std::vector<double> cur_, prev_, prev2_;
    int count_ = 0;
};

/// One plant plus, where a law needs the error field, a reference copy driven by S alone.
class Plant {
public:
    virtual ~Plant() = default;
    virtual void advance(double theta_in, double S, double t_new) = 0;
    /// Θ(t) = α(0, t) before any measurement delay.
    virtual double output() const = 0;
    virtual Field snapshot() const = 0;
    virtual void check_finite() const = 0;
};

class ParabolicPlant : public Plant {
public:
    ParabolicPlant(const Scenario& s, const DitherSignal& S, bool need_error)
        : cn_(s.domain_length, s.grid.n_x, s.grid.dt, eps(s), adv(s), react(s)), need_error_(need_error) {
        const int n = s.grid.n_x;
        const double D = s.domain_length, th0 = s.controller.theta_hat0;
        ref_ = Field(n, D);
        if (s.pde_class == PdeClass::diffusion && S.source().method == DitherMethod::analytic && S.source().shift == 0) {
            for (std::size_t j = 0; j < ref_.values.size(); ++j)
                ref_[j] = beta_diffusion(ref_.x(j), 0.0, S.source().a, S.source().omega);
        } else {
            // No closed-form profile for this source: run the reference into its periodic regime.
            const long n_spin = std::lround(spin_up_time / s.grid.dt);
            for (long k = -n_spin + 1; k <= 0; ++k) cn_.step(ref_, S(k * s.grid.dt));
        }
        plant_ = ref_;
        for (auto& v : plant_.values) v += th0;
        if (need_error_) {
            err_ = Field(n, D);
            push_error();
        }
    }

    void advance(double theta_in, double S, double t_new) override {
        cn_.step(plant_, theta_in);
        plant_.t = t_new;
        if (need_error_) {
            cn_.step(ref_, S);
            push_error();
        }
    }
    double output() const override { return plant_[0]; }
    Field snapshot() const override { return plant_; }
    void check_finite() const override { require_finite(plant_, "plant"); }

    /// u = ∂t(α − β) at the current step.
    const Field& error_rate() {
        deriv_.eval(err_.values, cn_.dt());
        err_.t = plant_.t;
        return err_;
    }

private:
    static double eps(const Scenario& s) { return s.pde_class == PdeClass::rad ? s.rad.epsilon : 1.0; }
    static double adv(const Scenario& s) { return s.pde_class == PdeClass::rad ? s.rad.advection : 0.0; }
    static double react(const Scenario& s) { return s.pde_class == PdeClass::rad ? s.rad.reaction : 0.0; }

    void push_error() {
        std::vector<double> e(plant_.values.size());
        for (std::size_t j = 0; j < e.size(); ++j) e[j] = plant_[j] - ref_[j];
        deriv_.push(e);
    }

    ParabolicCN cn_;
    bool need_error_;
    Field plant_, ref_, err_;
    TimeDerivative deriv_;
};

class StefanPlant : public Plant {
public:
    StefanPlant(const Scenario& s, const DitherSignal& S) : dt_(s.grid.dt) {
        const long n_spin = std::lround(spin_up_time / dt_);
        ref_ = make_stefan_state(s.stefan, s.grid.n_x, -n_spin * dt_, 0.0);
        for (long k = -n_spin + 1; k <= 0; ++k) ref_ = step_stefan(ref_, S(k * dt_), dt_);
        plant_ = ref_;
        for (auto& v : plant_.field.values) v += s.controller.theta_hat0;
        push_error();
    }

    void advance(double theta_in, double S, double t_new) override {
        plant_ = step_stefan(plant_, theta_in, dt_);
        ref_ = step_stefan(ref_, S, dt_);
        plant_.field.t = t_new;
        push_error();
    }
    double output() const override { return plant_.field[0]; }
    Field snapshot() const override { return plant_.field; }
    void check_finite() const override { require_finite(plant_.field, "plant"); }

    /// u = ∂t ᾱ at fixed x = ∂t ᾱ|ξ − x (ṡ/s) ∂x ᾱ, with ṡ/s = −k_b.
    const Field& error_rate() {
        err_ = plant_.field;
        deriv_.eval(err_.values, dt_);
        const auto n = err_.values.size() - 1;
        const double kb = plant_.params.k_b, h = plant_.field.dx;
        for (std::size_t j = 1; j <= n; ++j) {
            double grad = j < n ? (bar_[j + 1] - bar_[j - 1]) / (2 * h)
                                : (3 * bar_[n] - 4 * bar_[n - 1] + bar_[n - 2]) / (2 * h);
            err_[j] += kb * err_.x(j) * grad;
        }
        return err_;
    }

private:
    void push_error() {
        bar_.resize(plant_.field.values.size());
        for (std::size_t j = 0; j < bar_.size(); ++j) bar_[j] = plant_.field[j] - ref_.field[j];
        deriv_.push(bar_);
    }

    double dt_;
    StefanState plant_, ref_;
    Field err_;
    std::vector<double> bar_;
    TimeDerivative deriv_;
};

class WavePlant : public Plant {
public:
    WavePlant(const Scenario& s, const DitherSignal& S) : dt_(s.grid.dt) {
        const int n = s.grid.n_x;
        const double D = s.domain_length, a = S.source().a, om = S.source().omega, t0 = s.delay;
        Field d0(n, D), v0(n, D);
        for (std::size_t j = 0; j < d0.values.size(); ++j) {
            double x = d0.x(j);
            d0[j] = beta_wave(x, t0, a, om);
            v0[j] = a * om * std::cos(om * t0) * std::cos(om * x);
        }
        ref_ = make_wave_state(d0, v0, dt_);
        for (auto& v : d0.values) v += s.controller.theta_hat0;
        plant_ = make_wave_state(d0, v0, dt_);
        bar_ = Field(n, D);
        bar_t_ = Field(n, D);
    }

    void advance(double theta_in, double S, double t_new) override {
        step_wave_inplace(plant_, theta_in, dt_);
        step_wave_inplace(ref_, S, dt_);
        plant_.disp.t = t_new;
    }
    double output() const override { return plant_.disp[0]; }
    Field snapshot() const override { return plant_.disp; }
    void check_finite() const override { require_finite(plant_.disp, "plant"); }

    void error_fields(const Field*& u, const Field*& u_t) {
        for (std::size_t j = 0; j < bar_.values.size(); ++j) {
            bar_[j] = plant_.disp[j] - ref_.disp[j];
            bar_t_[j] = plant_.vel[j] - ref_.vel[j];
        }
        u = &bar_;
        u_t = &bar_t_;
    }

private:
    double dt_;
    WaveState plant_, ref_;
    Field bar_, bar_t_;
};

/// Pure or distributed input delay: Θ(t) = ∫ θ(t − σ) dβ(σ).
class DelayPlant : public Plant {
public:
    DelayPlant(const Scenario& s, const DitherSignal& S)
        : dt_(s.grid.dt), D_(s.domain_length), line_(steps_in(s.domain_length, s.grid.dt, "delay"), 0.0) {
        uniform_ = s.pde_class == PdeClass::distributed_delay && s.dither.measure == MeasureKind::uniform;
        const long lag = line_.lag();
        for (long k = -lag; k <= 0; ++k) line_.push(s.controller.theta_hat0 + S(k * dt_));
    }

    void advance(double theta_in, double, double t_new) override {
        line_.push(theta_in);
        t_ = t_new;
    }
    double output() const override {
        if (!uniform_) return line_.delayed(line_.lag());
        return line_.integrate(dt_, [](double) { return 1.0; }) / D_;
    }
    Field snapshot() const override {
        // Actuator state along the delay coordinate: value at x is θ(t − x).
        Field f(static_cast<int>(line_.lag()), D_, 0.0, t_);
        for (long k = 0; k <= line_.lag(); ++k) f[static_cast<std::size_t>(k)] = line_.delayed(k);
        return f;
    }
    void check_finite() const override {
        if (!std::isfinite(line_.delayed(0))) throw NumericalError("plant: non-finite actuator sample");
    }

private:
    double dt_, D_, t_ = 0.0;
    DelayLine line_;
    bool uniform_ = false;
};

[[noreturn]] void blowup(long k, double t, const std::string& what) {
    throw NumericalError("closed loop diverged at step " + std::to_string(k) + " (t = " + fmt17(t) + "): " + what);
}

}  // namespace

SimTrace run_closed_loop(const LoopWiring& w, LoopDiagnostics* diag) {
    const Scenario& s = w.scen;
    const DitherSignal S(w.dither);
    const double dt = s.grid.dt, a = w.dither.a, om = w.dither.omega;
    const long n_steps = std::lround(s.grid.t_end / dt);
    const StaticMap map = static_map(s);
    const bool full_state = s.controller.diffusion_law == DiffusionLaw::full_state;
    const bool shadow = w.log.shadow_form && s.pde_class == PdeClass::diffusion;

    std::unique_ptr<Plant> plant;
    ParabolicPlant* parabolic = nullptr;
    StefanPlant* stefan = nullptr;
    WavePlant* wave = nullptr;
    switch (s.pde_class) {
        case PdeClass::diffusion:
        case PdeClass::rad: {
            bool need = s.pde_class == PdeClass::rad || full_state || shadow;
            auto p = std::make_unique<ParabolicPlant>(s, S, need);
            parabolic = p.get();
            plant = std::move(p);
            break;
        }
        case PdeClass::stefan: {
            auto p = std::make_unique<StefanPlant>(s, S);
            stefan = p.get();
            plant = std::move(p);
            break;
        }
        case PdeClass::wave: {
            auto p = std::make_unique<WavePlant>(s, S);
            wave = p.get();
            plant = std::move(p);
            break;
        }
        case PdeClass::transport:
        case PdeClass::distributed_delay: plant = std::make_unique<DelayPlant>(s, S); break;
    }

    // Measurement delay: the map sees Θ(t − D_t). Before t = 0 the boundary followed θ̂(0) + a sin ω(t + D_t).
    std::optional<DelayLine> meas;
    if (s.delay > 0) {
        meas.emplace(steps_in(s.delay, dt, "delay"), 0.0);
        const long lag = meas->lag();
        for (long k = -lag; k <= 0; ++k)
            meas->push(s.controller.theta_hat0 + a * std::sin(om * (k * dt + s.delay)));
    }
    auto measured = [&](double Theta_now) {
        if (!meas) return Theta_now;
        meas->push(Theta_now);
        return meas->delayed(meas->lag());
    };

    // Row 0: the delay line already holds Θ(0) as its newest sample.
    EsState es = make_es_state(s);
    double shadow_U = 0.0;
    SimTrace tr;
    tr.rows.reserve(static_cast<std::size_t>(n_steps) + 1);
    {
        double Th = meas ? meas->delayed(meas->lag()) : plant->output();
        double S0 = S(0.0);
        tr.rows.push_back({0.0, es.theta_hat + S0, Th, map_eval(map, Th), 0.0, S0, 0.0, 0.0});
    }

    std::vector<long> snap_steps;
    for (double ts : w.log.snapshot_times) snap_steps.push_back(std::lround(ts / dt));
    auto take_snapshots = [&](long k) {
        for (long ks : snap_steps)
            if (ks == k) tr.snapshots.push_back(plant->snapshot());
    };
    take_snapshots(0);

    LoopDiagnostics dg;
    for (long k = 1; k <= n_steps; ++k) {
        const double t = k * dt;
        const double Sk = S(t);
        const double theta = es.theta_hat + Sk;
        plant->advance(theta, Sk, t);
        const double Theta = measured(plant->output());
        const double y = map_eval(map, Theta);
        if (!std::isfinite(Theta) || !std::isfinite(y)) blowup(k, t, "non-finite plant output");

        double U = 0.0;
        switch (s.pde_class) {
            case PdeClass::diffusion: {
                update_estimates(es, y, t, s);
                double b_meas = bracket_diffusion_measured(es, Theta, t, s);
                double b_full = 0.0;
                if (full_state || shadow) b_full = bracket_diffusion_fullstate(es, parabolic->error_rate(), s);
                if (shadow) {
                    shadow_U = lowpass_step(shadow_U, full_state ? b_meas : b_full, s.controller.filter_corner, dt);
                }
                U = commit(es, full_state ? b_full : b_meas, s);
                if (shadow) dg.max_form_gap = std::max(dg.max_form_gap, std::abs(U - shadow_U));
                break;
            }
            case PdeClass::rad: U = control_rad(es, parabolic->error_rate(), y, t, s); break;
            case PdeClass::stefan: U = control_stefan(es, stefan->error_rate(), y, t, s); break;
            case PdeClass::wave: {
                const Field *u = nullptr, *u_t = nullptr;
                wave->error_fields(u, u_t);
                U = control_wave(es, *u, *u_t, y, t, s);
                break;
            }
            case PdeClass::transport:
            case PdeClass::distributed_delay: U = control_transport_predictor(es, y, t, s); break;
        }
        if (!std::isfinite(U) || !std::isfinite(es.theta_hat) || std::abs(es.theta_hat) > 1e8)
            blowup(k, t, "non-finite or runaway parameter estimate");
        if (k % 64 == 0) {
            try {
                plant->check_finite();
            } catch (const NumericalError& e) {
                blowup(k, t, e.what());
            }
        }
        tr.rows.push_back({t, theta, Theta, y, U, Sk, es.Hhat, es.G});
        take_snapshots(k);
    }
    dg.steps = n_steps;
    if (diag) *diag = dg;
    return tr;
}

SteadyState steady_state(const SimTrace& tr, const Scenario& s) {
    SteadyState ss;
    const std::size_t n = tr.rows.size();
    if (n == 0) return ss;
    const std::size_t start = n - std::max<std::size_t>(1, n / 10);
    ss.window_start = tr.rows[start].t;
    for (std::size_t i = start; i < n; ++i) {
        const auto& r = tr.rows[i];
        ss.mean_abs_y += std::abs(r.y - s.map.optimum);
        ss.mean_abs_Theta += std::abs(r.Theta - s.map.optimizer);
        ss.mean_abs_theta_hat += std::abs(r.theta - r.S - s.map.optimizer);
    }
    const double m = static_cast<double>(n - start);
    ss.mean_abs_y /= m;
    ss.mean_abs_Theta /= m;
    ss.mean_abs_theta_hat /= m;
    return ss;
}

// ---------------------------------------------------------------------------
// Averaged closed loop

double psi_norm(const AvgSystemState& st) {
    const double uD = st.u.values.back();
    return st.vartheta * st.vartheta + l2_sq(st.u) + h1_semi_sq(st.u) + uD * uD;
}

double lyapunov_monitor(const AvgSystemState& st, double K, double H, double c, const LyapunovWeights& wts) {
    (void)c;
    if (!(-K * H > 0)) throw ValidationError("lyapunov: λ = −KH > 0 required (K > 0, H < 0)");
    const Field w = backstepping_forward(st.u, st.vartheta, K, H);
    const double wD = w.values.back();
    return 0.5 * st.vartheta * st.vartheta + 0.5 * wts.a * l2_sq(w) + 0.5 * wts.b * h1_semi_sq(w) +
           0.5 * wts.d * wD * wD;
}

AvgSystemState make_avg_state(const Scenario& s, double vartheta0) {
    return {vartheta0, Field(s.grid.n_x, s.domain_length)};
}

void step_average_system(AvgSystemState& st, const ParabolicCN& cn, const Scenario& s) {
    const double dt = cn.dt(), c = s.controller.filter_corner;
    const double kh = s.controller.gain * s.map.hessian, D = st.u.length();
    const double drive = kh * (st.vartheta + kernel_integral(st.u, [D](double x) { return D - x; }));
    const double e = std::exp(-c * dt);
    const double uD = e * st.u.values.back() + (1 - e) * drive;
    const double u0_old = st.u[0];
    cn.step(st.u, uD);
    st.u.t += dt;
    st.vartheta += 0.5 * dt * (u0_old + st.u[0]);
}

AvgReport run_average_system(const Scenario& s, double vartheta0, double horizon) {
    if (s.pde_class != PdeClass::diffusion) throw ValidationError("average system: diffusion class required");
    const double K = s.controller.gain, H = s.map.hessian, c = s.controller.filter_corner;
    const auto wts = lyapunov_weights(K, H, c, s.domain_length);
    const ParabolicCN cn(s.domain_length, s.grid.n_x, s.grid.dt);
    const long n_steps = std::lround(horizon / s.grid.dt);

    AvgReport rep;
    rep.thresholds = step3_thresholds(K, H, s.domain_length);
    AvgSystemState st = make_avg_state(s, vartheta0);
    auto record = [&](double t) {
        rep.t.push_back(t);
        rep.psi.push_back(psi_norm(st));
        rep.upsilon.push_back(lyapunov_monitor(st, K, H, c, wts));
        if (!std::isfinite(rep.psi.back())) throw NumericalError("average system diverged at t = " + fmt17(t));
    };
    record(0.0);
    for (long k = 1; k <= n_steps; ++k) {
        step_average_system(st, cn, s);
        record(k * s.grid.dt);
    }

    for (std::size_t k = 1; k + 1 < rep.upsilon.size(); ++k)
        if (rep.upsilon[k] > 0)
            rep.max_rel_increase = std::max(rep.max_rel_increase, (rep.upsilon[k + 1] - rep.upsilon[k]) / rep.upsilon[k]);
    if (rep.upsilon.size() < 3) rep.max_rel_increase = 0.0;

    // Least-squares slope of log Ψ over the second half of the horizon.
    const double psi0 = rep.psi.front();
    if (psi0 > 0) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
        for (std::size_t k = rep.t.size() / 2; k < rep.t.size(); ++k) {
            if (!(rep.psi[k] > 0)) continue;
            double x = rep.t[k], y = std::log(rep.psi[k]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            m += 1;
        }
        if (m >= 2) rep.mu = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
        for (std::size_t k = 0; k < rep.t.size(); ++k)
            rep.envelope_const = std::max(rep.envelope_const, rep.psi[k] * std::exp(rep.mu * rep.t[k]) / psi0);
    }
    return rep;
}

}  // namespace pdes
