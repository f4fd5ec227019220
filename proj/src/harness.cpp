#include "pdes/harness.hpp"

#include "pdes/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

namespace pdes {

namespace {

constexpr double pi = std::numbers::pi;

double period_of(const Scenario& s) { return 2 * pi / s.dither.frequency; }

}  // namespace

Scale parse_scale(std::string_view s) {
    if (s == "desk") return Scale::desk;
    if (s == "paper") return Scale::paper;
    throw ValidationError("scale: expected one of desk, paper (got '" + std::string(s) + "')");
}

TrainConfig train_config(Scale scale, std::uint64_t seed) {
    TrainConfig cfg = scale == Scale::desk ? TrainConfig::desk() : TrainConfig::paper();
    cfg.seed = seed;
    return cfg;
}

double analytic_S(const Scenario& s, double t) {
    DitherSource src = make_dither_source(s);
    src.method = DitherMethod::analytic;
    src.shift = 0.0;
    return DitherSignal(src)(t);
}

namespace {

// What a trajectory network is fitted to: the closed form, except for Stefan where the closed series
// is not the moving-domain flat output, so the flat series on s(t) is the reference.
std::vector<double> trajectory_reference(const Scenario& s, const std::vector<double>& t) {
    DitherSource src = make_dither_source(s);
    src.shift = 0.0;
    std::vector<double> out;
    out.reserve(t.size());
    if (s.pde_class == PdeClass::stefan) {
        src.method = DitherMethod::numeric;
        return s_numeric(t, src);
    }
    src.method = DitherMethod::analytic;
    DitherSignal sig(src);
    for (double v : t) out.push_back(sig(v));
    return out;
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
    return g;
}

DitherFit fit_over(const Scenario& s, const TrainConfig& cfg, int periods, int n_eval) {
    validate(cfg);
    PinnProblem p = make_trajectory_problem(s, cfg.time_margin);
    p.t_hi += (periods - 1) * period_of(s);
    DitherFit fit;
    fit.trained = train(p, cfg);
    fit.t = uniform_grid(0.0, periods * period_of(s), n_eval);
    fit.reference = trajectory_reference(s, fit.t);
    fit.learned = extract_S(fit.trained, fit.t);
    fit.mse = mse(fit.learned, fit.reference);
    for (std::size_t k = 0; k < fit.t.size(); ++k)
        fit.max_abs = std::max(fit.max_abs, std::abs(fit.learned[k] - fit.reference[k]));
    return fit;
}

}  // namespace

DitherFit fit_dither_pinn(const Scenario& s, const TrainConfig& cfg, int n_eval) { return fit_over(s, cfg, 1, n_eval); }

DitherTable dither_table(const Scenario& s, DitherMethod method, const TrainConfig& cfg) {
    DitherTable tab;
    tab.t = uniform_grid(0.0, 2 * period_of(s), 801);
    DitherSource src = make_dither_source(s);
    src.shift = 0.0;
    src.method = DitherMethod::analytic;
    DitherSignal analytic(src);
    for (double t : tab.t) tab.analytic.push_back(analytic(t));

    switch (method) {
        case DitherMethod::analytic: tab.method = tab.analytic; break;
        case DitherMethod::numeric:
            src.method = DitherMethod::numeric;
            tab.method = s_numeric(tab.t, src);
            break;
        case DitherMethod::pinn: {
            auto fit = fit_over(s, cfg, 2, 801);
            tab.method = fit.learned;
            break;
        }
    }
    for (std::size_t k = 0; k < tab.t.size(); ++k) tab.abs_err.push_back(std::abs(tab.method[k] - tab.analytic[k]));

    if (s.pde_class == PdeClass::rad || s.pde_class == PdeClass::stefan) {
        std::vector<double> worst(static_cast<std::size_t>(src.n_max) + 1, 0.0);
        for (double t : tab.t) {
            auto sums = s.pde_class == PdeClass::rad ? rad_partial_sums(t, src) : stefan_partial_sums(t, src);
            for (std::size_t n = 1; n < sums.size(); ++n) worst[n] = std::max(worst[n], std::abs(sums[n] - sums[n - 1]));
        }
        for (std::size_t n = 1; n < worst.size(); ++n) tab.tail.emplace_back(static_cast<int>(n), worst[n]);
    }
    return tab;
}

void write_dither_csv(const DitherTable& tab, std::ostream& out) {
    out << "t,S_analytic,S_method,abs_err\n";
    for (std::size_t k = 0; k < tab.t.size(); ++k)
        out << fmt17(tab.t[k]) << ',' << fmt17(tab.analytic[k]) << ',' << fmt17(tab.method[k]) << ','
            << fmt17(tab.abs_err[k]) << '\n';
}

void write_tail_csv(const DitherTable& tab, std::ostream& out) {
    out << "n,tail\n";
    for (const auto& [n, v] : tab.tail) out << n << ',' << fmt17(v) << '\n';
}

std::vector<Field> solve_ibvp_numeric(const Scenario& s, double horizon, int n_snapshots) {
    if (n_snapshots < 2) throw ValidationError("compare: at least 2 snapshots required");
    const int n = s.grid.n_x;
    const double D = s.domain_length, w5 = 5 * s.dither.frequency;
    // Fine enough to resolve sin(5ωt) and keep the explicit wave scheme inside its CFL bound.
    const double dt_cap = std::min({1e-4, s.grid.dt, 0.5 * D / n});
    const long per_snap = static_cast<long>(std::ceil(horizon / (n_snapshots - 1) / dt_cap));
    const double dt = horizon / (static_cast<double>(per_snap) * (n_snapshots - 1));
    auto left = [&](double t) { return std::sin(w5 * t); };

    std::vector<Field> snaps;
    auto keep = [&](Field f, double t) {
        f.t = t;
        snaps.push_back(std::move(f));
    };

    switch (s.pde_class) {
        case PdeClass::diffusion:
        case PdeClass::rad: {
            Field f(n, D);
            std::vector<double> lo, di, up;
            if (s.pde_class == PdeClass::rad)
                parabolic_rows(f, s.rad.epsilon, s.rad.advection, s.rad.reaction, lo, di, up);
            else
                parabolic_rows(f, 1.0, 0.0, 0.0, lo, di, up);
            keep(f, 0.0);
            for (int k = 1; k < n_snapshots; ++k) {
                for (long j = 1; j <= per_snap; ++j) {
                    double t_new = ((k - 1) * per_snap + j) * dt;
                    step_cn_dirichlet(f, lo, di, up, dt, left(t_new), 0.0);
                }
                keep(f, k * per_snap * dt);
            }
            break;
        }
        case PdeClass::stefan: {
            StefanState st = make_stefan_state(s.stefan, n, 0.0, 0.0);
            keep(st.field, 0.0);
            for (int k = 1; k < n_snapshots; ++k) {
                for (long j = 1; j <= per_snap; ++j) {
                    double t_new = ((k - 1) * per_snap + j) * dt;
                    st = step_stefan_dirichlet(st, left(t_new), 0.0, dt);
                }
                keep(st.field, k * per_snap * dt);
            }
            break;
        }
        case PdeClass::wave: {
            Field prev(n, D), cur(n, D), next(n, D);
            const double r2 = (dt / cur.dx) * (dt / cur.dx);
            keep(cur, 0.0);
            for (int k = 1; k < n_snapshots; ++k) {
                for (long j = 1; j <= per_snap; ++j) {
                    double t_new = ((k - 1) * per_snap + j) * dt;
                    for (std::size_t i = 1; i < cur.values.size() - 1; ++i)
                        next[i] = 2 * cur[i] - prev[i] + r2 * (cur[i + 1] - 2 * cur[i] + cur[i - 1]);
                    next[0] = left(t_new);
                    next.values.back() = 0.0;
                    std::swap(prev, cur);
                    std::swap(cur, next);
                }
                keep(cur, k * per_snap * dt);
            }
            break;
        }
        case PdeClass::transport:
            throw UnsupportedMethod(
                "compare: transport carries data from x = D to x = 0, so u(0,t) = sin(5ωt) is an outflow condition; "
                "use `dither --pde transport` for the trajectory comparison");
        case PdeClass::distributed_delay:
            throw UnsupportedMethod("compare: distributed_delay has no spatial PDE; use `dither`");
    }
    for (const auto& f : snaps) require_finite(f, "compare numeric");
    return snaps;
}

ComparisonReport run_compare(const Scenario& s, const TrainConfig& cfg, int n_snapshots) {
    validate(cfg);
    const double horizon = period_of(s);
    ComparisonReport rep;
    rep.numerical = solve_ibvp_numeric(s, horizon, n_snapshots);
    TrainedNet tn = train(make_ibvp_problem(s, horizon), cfg);
    rep.final_loss = tn.final_loss;
    double sum = 0;
    long count = 0;
    for (const auto& f : rep.numerical) {
        Field u = f, e = f;
        for (std::size_t j = 0; j < f.values.size(); ++j) {
            u[j] = forward(tn.net, f.x(j), f.t);
            e[j] = std::abs(u[j] - f[j]);
            rep.max_err = std::max(rep.max_err, e[j]);
            sum += e[j];
            ++count;
        }
        rep.learned.push_back(std::move(u));
        rep.error.push_back(std::move(e));
    }
    rep.mean_err = sum / static_cast<double>(count);
    return rep;
}

SweepParam parse_sweep_param(std::string_view s) {
    if (s == "lr" || s == "learning_rate") return SweepParam::learning_rate;
    if (s == "batch") return SweepParam::batch;
    throw ValidationError("sweep: parameter must be one of lr, batch (got '" + std::string(s) + "')");
}

std::string_view to_string(SweepParam p) { return p == SweepParam::learning_rate ? "lr" : "batch"; }

void validate(const SweepSpec& spec) {
    if (spec.values.size() < 2) throw ValidationError("sweep: at least 2 values required");
    if (spec.seeds < 1) throw ValidationError("sweep: at least 1 seed required");
    for (double v : spec.values) {
        if (!(v > 0) || !std::isfinite(v)) throw ValidationError("sweep: values must be positive and finite");
        if (spec.param == SweepParam::batch && v != std::floor(v))
            throw ValidationError("sweep: batch sizes must be integers");
    }
    validate(spec.base);
}

double median(std::vector<double> v) {
    std::erase_if(v, [](double x) { return !std::isfinite(x); });
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SweepResult run_sweep(const SweepSpec& spec, unsigned jobs) {
    validate(spec);
    SweepResult res;
    for (double v : spec.values)
        for (int k = 0; k < spec.seeds; ++k) res.rows.push_back({v, spec.base.seed + static_cast<std::uint64_t>(k), 0.0, 0.0, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < res.rows.size(); i = next++) {
            SweepRow& row = res.rows[i];
            TrainConfig cfg = spec.base;
            cfg.seed = row.seed;
            if (spec.param == SweepParam::learning_rate)
                cfg.learning_rate = row.value;
            else
                cfg.batch = static_cast<int>(row.value);
            auto start = std::chrono::steady_clock::now();
            try {
                row.mse = fit_dither_pinn(spec.scen, cfg).mse;
            } catch (const Error& e) {
                row.mse = std::numeric_limits<double>::quiet_NaN();
                row.error = e.what();
            }
            row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(res.rows.size())));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (double v : spec.values) {
        std::vector<double> m, w;
        for (const auto& r : res.rows)
            if (r.value == v) {
                m.push_back(r.mse);
                w.push_back(r.wall_s);
            }
        res.summary.push_back({v, median(m), median(w)});
    }
    return res;
}

void write_sweep_csv(const SweepResult& res, std::ostream& out) {
    out << "value,seed,mse,wall_time\n";
    for (const auto& r : res.rows) out << fmt17(r.value) << ',' << r.seed << ',' << fmt17(r.mse) << ',' << fmt17(r.wall_s) << '\n';
}

EsSummary summarize_es(const SimTrace& tr, const Scenario& s) {
    EsSummary sum;
    sum.steady = steady_state(tr, s);
    sum.initial_error = std::abs(s.controller.theta_hat0 - s.map.optimizer);
    double acc = 0;
    long n = 0;
    for (const auto& r : tr.rows)
        if (r.t >= sum.steady.window_start) {
            acc += std::abs(r.theta - s.map.optimizer);
            ++n;
        }
    sum.mean_abs_theta = n ? acc / static_cast<double>(n) : 0.0;

    const double a = std::abs(s.dither.amplitude), w = s.dither.frequency;
    double smax = 0;
    for (int k = 0; k < 200; ++k) smax = std::max(smax, std::abs(analytic_S(s, k * period_of(s) / 200)));
    sum.theta_order = smax + 1 / w;
    sum.Theta_order = a + 1 / w;
    sum.y_order = a * a + 1 / (w * w);
    sum.converged = sum.steady.mean_abs_theta_hat < 0.1 * sum.initial_error;
    return sum;
}

}  // namespace pdes
