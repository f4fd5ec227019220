// Acceptance run: one PASS/FAIL line per criterion, tolerances and runtime budgets fixed below.

#include "pdes/harness.hpp"
#include "pdes/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <thread>

using namespace pdes;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
    bool pass = false;
    std::string detail;
    bool report_gated = false;  // trend missed but not inverted
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int failures = 0;

void run(int id, double budget_s, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("threw: ") + e.what()};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = budget_s <= 0 || wall <= budget_s;
    const bool pass = v.pass && in_budget;
    if (!pass) ++failures;
    const std::string budget = budget_s > 0 ? fmt(" of %.0f s budget", budget_s) : std::string(", no budget");
    std::printf("criterion %d %s%s: %s; runtime %.1f s%s%s\n", id, pass ? "PASS" : "FAIL",
                pass && v.report_gated ? " (report-gated)" : "", v.detail.c_str(), wall, budget.c_str(),
                in_budget ? "" : " (over budget)");
    std::fflush(stdout);
}

// --- 1 ----------------------------------------------------------------------

template <class F>
double period_average(F f, double omega, int n) {
    const double period = 2 * pi / omega, h = period / n;
    double acc = 0.5 * (f(0.0) + f(period));
    for (int k = 1; k < n; ++k) acc += f(k * h);
    return acc * h / period;
}

Verdict demodulation() {
    constexpr double tol = 1e-9, a = 0.2, H = -2.0, om = 10.0;
    double worst = 0;
    for (double th : {-0.5, 0.0, 0.7}) {
        auto y = [&](double t) { return 5.0 + H / 2 * std::pow(th + a * std::sin(om * t), 2); };
        double g = period_average([&](double t) { return demod_M(t, a, om) * y(t); }, om, 10000);
        double h = period_average([&](double t) { return demod_N(t, a, om) * y(t); }, om, 10000);
        worst = std::max({worst, std::abs(g - H * th), std::abs(h - H)});
    }
    return {worst <= tol, "max |avg - target| " + fmt("%.2e", worst) + " (tol 1e-9)"};
}

// --- 2 ----------------------------------------------------------------------

double heat_error(int n_x, double dt) {
    const double L = 1.0, t_end = 0.5;
    Field f(n_x, L);
    for (std::size_t j = 0; j < f.values.size(); ++j) f[j] = manufactured_heat(f.x(j), 0.0, L);
    ParabolicCN cn(L, n_x, dt);
    const long steps = std::lround(t_end / dt);
    for (long k = 1; k <= steps; ++k) cn.step(f, manufactured_heat(L, k * dt, L));
    double err = 0;
    for (std::size_t j = 0; j < f.values.size(); ++j) err = std::max(err, std::abs(f[j] - manufactured_heat(f.x(j), t_end, L)));
    return err;
}

double wave_error(int n_x, double dt) {
    const double L = 1.0, om = 3.0, t_end = 2.0;
    auto exact = [om](double x, double t) { return std::cos(om * x) * std::sin(om * t); };
    Field d0(n_x, L), v0(n_x, L);
    for (std::size_t j = 0; j < d0.values.size(); ++j) {
        d0[j] = exact(d0.x(j), 0.0);
        v0[j] = om * std::cos(om * d0.x(j));
    }
    WaveState s = make_wave_state(d0, v0, dt);
    const long steps = std::lround(t_end / dt);
    for (long k = 1; k <= steps; ++k) step_wave_inplace(s, exact(L, k * dt), dt);
    double err = 0;
    for (std::size_t j = 0; j < s.disp.values.size(); ++j) err = std::max(err, std::abs(s.disp[j] - exact(s.disp.x(j), t_end)));
    return err;
}

Verdict solver_orders() {
    constexpr double lo = 3.5, hi = 4.5;
    double h[3] = {heat_error(16, 0.02), heat_error(32, 0.01), heat_error(64, 0.005)};
    double w[3] = {wave_error(16, 0.04), wave_error(32, 0.02), wave_error(64, 0.01)};
    double r[4] = {h[0] / h[1], h[1] / h[2], w[0] / w[1], w[1] / w[2]};
    bool ok = std::all_of(r, r + 4, [](double x) { return x >= lo && x <= hi; });
    return {ok, "diffusion ratios " + fmt("%.3f", r[0]) + ", " + fmt("%.3f", r[1]) + "; wave ratios " + fmt("%.3f", r[2]) +
                    ", " + fmt("%.3f", r[3]) + " (band [3.5, 4.5])"};
}

// --- 3 ----------------------------------------------------------------------

Verdict closed_forms() {
    constexpr double delay_tol = 1e-12, residual_tol = 1e-10;
    Scenario s;
    s.pde_class = PdeClass::transport;
    auto tr = make_dither_source(s);
    tr.method = DitherMethod::numeric;
    std::vector<double> grid;
    for (int k = 0; k <= 2000; ++k) grid.push_back(k * 1e-3);
    auto num = s_numeric(grid, tr);
    double delay_err = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) delay_err = std::max(delay_err, std::abs(num[k] - s_transport(grid[k], tr)));

    double worst = 0;
    for (PdeClass c : {PdeClass::wave, PdeClass::diffusion}) {
        s.pde_class = c;
        auto rep = check_motion_planning_residual(make_dither_source(s), 1000, 7);
        worst = std::max({worst, rep.max_pde, rep.max_bc_value, rep.max_bc_flux});
    }
    return {delay_err <= delay_tol && worst <= residual_tol,
            "transport vs delay line " + fmt("%.2e", delay_err) + " (tol 1e-12); wave/diffusion max residual " +
                fmt("%.2e", worst) + " (tol 1e-10)"};
}

// --- 4, 6 -------------------------------------------------------------------

Scenario diffusion_run(int n_x) {
    Scenario s;
    s.pde_class = PdeClass::diffusion;
    s.grid.n_x = n_x;
    s.grid.t_end = 100.0;
    return s;
}

Verdict diffusion_es() {
    constexpr double y_band = 0.1, Theta_band = 0.3;
    auto s = diffusion_run(128);
    auto ss = steady_state(run_closed_loop(make_wiring(s)), s);
    return {ss.mean_abs_y <= y_band && ss.mean_abs_Theta <= Theta_band,
            "mean |y - y*| " + fmt("%.4f", ss.mean_abs_y) + " (band 0.1), mean |Theta - Theta*| " +
                fmt("%.4f", ss.mean_abs_Theta) + " (band 0.3)"};
}

Verdict law_equivalence() {
    constexpr double tol = 1e-3;
    std::string detail = "max gap";
    double prev = INFINITY;
    bool decreasing = true;
    for (int n : {32, 64, 128, 256}) {
        auto w = make_wiring(diffusion_run(n));
        w.log.shadow_form = true;
        LoopDiagnostics dg;
        run_closed_loop(w, &dg);
        decreasing = decreasing && dg.max_form_gap < prev;
        prev = dg.max_form_gap;
        detail += " n_x=" + std::to_string(n) + ":" + fmt("%.2e", dg.max_form_gap);
    }
    return {decreasing && prev <= tol, detail + (decreasing ? ", decreasing" : ", NOT decreasing") + " (tol 1e-3 at n_x=128+)"};
}

// --- 5 ----------------------------------------------------------------------

Verdict delayed_es(PdeClass c, double length, double meas_delay) {
    constexpr double fraction = 0.1, budget_s = 60.0;
    const auto t0 = std::chrono::steady_clock::now();
    Scenario s;
    s.pde_class = c;
    s.domain_length = length;
    s.delay = meas_delay;
    s.grid.t_end = 100.0;
    auto ss = steady_state(run_closed_loop(make_wiring(s)), s);
    const double initial = std::abs(s.controller.theta_hat0 - s.map.optimizer);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {ss.mean_abs_theta_hat < fraction * initial && wall <= budget_s,
            std::string(to_string(c)) + " window |theta_hat - Theta*| " + fmt("%.4f", ss.mean_abs_theta_hat) + " vs " +
                fmt("%.3f", fraction * initial) + " (10% of initial) in " + fmt("%.1f", wall) + " s of 60 s"};
}

// --- 7 ----------------------------------------------------------------------

Verdict averaged_stability() {
    constexpr double slack = 1e-6;
    auto s = diffusion_run(128);
    auto rep = run_average_system(s, 1.0, 10.0);
    bool under = true;
    for (std::size_t k = 0; k < rep.t.size(); ++k)
        under = under && rep.psi[k] <= rep.envelope_const * rep.psi.front() * std::exp(-rep.mu * rep.t[k]) * (1 + 1e-12);
    return {rep.mu > 0 && under && rep.max_rel_increase <= slack,
            "mu " + fmt("%.4f", rep.mu) + ", envelope const " + fmt("%.3f", rep.envelope_const) +
                ", max relative increase " + fmt("%.2e", rep.max_rel_increase) + " (slack 1e-6)"};
}

// --- 8 ----------------------------------------------------------------------

Verdict pinn_trajectories() {
    constexpr double tol = 1e-3, class_budget_s = 300.0;
    bool ok = true;
    std::string detail;
    for (PdeClass c : {PdeClass::transport, PdeClass::diffusion}) {
        Scenario s;
        s.pde_class = c;
        const auto t0 = std::chrono::steady_clock::now();
        double best = INFINITY;
        std::string tried;
        for (std::uint64_t seed : {42u, 43u, 44u}) {
            double mse = fit_dither_pinn(s, train_config(Scale::desk, seed)).mse;
            tried += (tried.empty() ? "" : "/") + fmt("%.2e", mse);
            best = std::min(best, mse);
            if (best <= tol) break;
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ok = ok && best <= tol && wall <= class_budget_s;
        detail += (detail.empty() ? "" : "; ") + std::string(to_string(c)) + " best MSE " + fmt("%.2e", best) + " [" +
                  tried + "] in " + fmt("%.0f", wall) + " s";
    }
    return {ok, detail + " (tol 1e-3, 300 s per class)"};
}

// --- 9 ----------------------------------------------------------------------

Verdict pinn_machinery() {
    constexpr double grad_tol = 1e-4, deriv_tol = 1e-5;
    Scenario s;
    double grad_worst = 0;
    for (PdeClass c : {PdeClass::diffusion, PdeClass::wave, PdeClass::transport, PdeClass::rad}) {
        s.pde_class = c;
        auto p = make_trajectory_problem(s, 0.2);
        Net net = make_net({2, 8, 8, 1}, p.box(), 1.0, 5);
        Rng rng(6, stream::collocation);
        for (std::size_t l = 0; l < net.n_layers(); ++l)
            for (int i = 0; i < net.widths[l + 1]; ++i)
                net.params[net.bias_offset(l) + static_cast<std::size_t>(i)] = rng.uniform(-0.5, 0.5);
        auto pts = sample_collocation(p, 50, 50, 50, rng);
        for (int k = 0; k < 10; ++k) pts.data.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(-1, 1)});
        LossWeights w{1.0, 0.7, 1.3, 2.0};
        NetWorkspace ws(net);
        std::vector<double> grad(net.params.size(), 0.0);
        loss_and_gradient(net, pts, p, w, ws, grad);
        double gmax = 0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        const double h = 1e-5;
        for (std::size_t i = 0; i < net.params.size(); ++i) {
            Net up = net, dn = net;
            up.params[i] += h;
            dn.params[i] -= h;
            double fd = (loss(up, pts, p, w).total - loss(dn, pts, p, w).total) / (2 * h);
            grad_worst = std::max(grad_worst, std::abs(fd - grad[i]) / std::max(std::abs(grad[i]), 1e-3 * gmax));
        }
    }

    InputBox box{0.0, 1.0, -0.2, 0.83};
    Net net = make_net({2, 32, 32, 32, 1}, box, 1.0, 9);
    Rng r(2, stream::test);
    const double h = 1e-4;
    double deriv_worst = 0;
    for (int k = 0; k < 100; ++k) {
        double x = r.uniform(0, 1), t = r.uniform(-0.2, 0.83);
        auto e = forward_with_derivatives(net, x, t);
        double u = forward(net, x, t);
        double fd[4] = {(forward(net, x + h, t) - forward(net, x - h, t)) / (2 * h),
                        (forward(net, x, t + h) - forward(net, x, t - h)) / (2 * h),
                        (forward(net, x + h, t) - 2 * u + forward(net, x - h, t)) / (h * h),
                        (forward(net, x, t + h) - 2 * u + forward(net, x, t - h)) / (h * h)};
        double ad[4] = {e.u_x, e.u_t, e.u_xx, e.u_tt};
        for (int i = 0; i < 4; ++i) deriv_worst = std::max(deriv_worst, std::abs(ad[i] - fd[i]) / std::max(1.0, std::abs(ad[i])));
    }

    s.pde_class = PdeClass::transport;
    auto p = make_trajectory_problem(s, 0.2);
    TrainConfig cfg;
    cfg.hidden = {8, 8};
    cfg.iterations = 150;
    cfg.batch = 32;
    cfg.n_residual = cfg.n_bc = cfg.n_ic = 200;
    cfg.seed = 42;
    auto a = train(p, cfg), b = train(p, cfg);
    const bool bitwise = a.net.params == b.net.params && a.final_loss.total == b.final_loss.total;

    return {grad_worst <= grad_tol && deriv_worst <= deriv_tol && bitwise,
            "gradient rel err " + fmt("%.2e", grad_worst) + " (tol 1e-4), input derivative rel err " +
                fmt("%.2e", deriv_worst) + " (tol 1e-5), seeded retrain " + (bitwise ? "bitwise equal" : "DIFFERS")};
}

// --- 10 ---------------------------------------------------------------------

Verdict hyperparameter_trends() {
    constexpr double plateau = 0.10;
    const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    SweepSpec spec;
    spec.scen.pde_class = PdeClass::transport;
    spec.seeds = 3;
    spec.base = train_config(Scale::desk, 42);

    spec.param = SweepParam::learning_rate;
    spec.values = {8e-3, 1e-3, 1e-4};
    auto lr = run_sweep(spec, jobs);
    spec.param = SweepParam::batch;
    spec.values = {32, 128, 512};
    auto bs = run_sweep(spec, jobs);

    const double m_hi = lr.summary[0].median_mse, m_mid = lr.summary[1].median_mse, m_lo = lr.summary[2].median_mse;
    const bool lr_holds = m_mid < m_hi && m_mid < m_lo;
    const bool lr_inverted = m_mid > m_hi && m_mid > m_lo;
    const double b32 = bs.summary[0].median_mse, b128 = bs.summary[1].median_mse, b512 = bs.summary[2].median_mse;
    const double rel = std::abs(b512 - b128) / b128;
    const bool bs_holds = rel <= plateau;
    const bool bs_inverted = b32 < b128;
    const bool finite = std::isfinite(m_hi) && std::isfinite(m_mid) && std::isfinite(m_lo) && std::isfinite(b32) &&
                        std::isfinite(b128) && std::isfinite(b512);

    Verdict v;
    v.pass = finite && !lr_inverted && !bs_inverted;
    v.report_gated = v.pass && !(lr_holds && bs_holds);
    v.detail = "median MSE lr 8e-3/1e-3/1e-4 = " + fmt("%.2e", m_hi) + "/" + fmt("%.2e", m_mid) + "/" + fmt("%.2e", m_lo) +
               (lr_holds ? " (minimum at 1e-3)" : lr_inverted ? " (INVERTED: 1e-3 worst)" : " (minimum not at 1e-3)") +
               "; batch 32/128/512 = " + fmt("%.2e", b32) + "/" + fmt("%.2e", b128) + "/" + fmt("%.2e", b512) +
               ", 512 vs 128 differs by " + fmt("%.0f", 100 * rel) + "%" +
               (bs_holds ? " (within 10%)" : " (plateau NOT within 10%)") + (bs_inverted ? ", INVERTED: 32 beats 128" : "");
    return v;
}

}  // namespace

int main() {
    run(1, 1.0, demodulation);
    run(2, 30.0, solver_orders);
    run(3, 5.0, closed_forms);
    run(4, 60.0, diffusion_es);
    run(5, 120.0, [] {
        auto t = delayed_es(PdeClass::transport, 3.0, 0.0);
        auto w = delayed_es(PdeClass::wave, 1.0, 10.0);
        return Verdict{t.pass && w.pass, t.detail + "; " + w.detail};
    });
    run(6, 0.0, law_equivalence);
    run(7, 10.0, averaged_stability);
    run(8, 600.0, pinn_trajectories);
    run(9, 30.0, pinn_machinery);
    run(10, 900.0, hyperparameter_trends);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
