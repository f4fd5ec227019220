#include "pdes/dither.hpp"

#include "pdes/solvers.hpp"

#include <numbers>

namespace pdes {

namespace {

constexpr double pi = std::numbers::pi;

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;  // out-of-range index convention
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// pow with 0^0 = 1 and integer exponents only
double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

void require_finite(double v, const char* who) {
    if (!std::isfinite(v)) throw NumericalError(std::string(who) + ": truncation overflow (non-finite partial sum)");
}

}  // namespace

DitherSource make_dither_source(const Scenario& s) {
    DitherSource src;
    src.method = dither_method(s);
    src.pde_class = s.pde_class;
    src.a = s.dither.amplitude;
    src.omega = s.dither.frequency;
    src.D = s.domain_length;
    src.rad = s.rad;
    src.stefan = s.stefan;
    src.measure.kind = s.dither.measure;
    src.gamma = s.dither.gamma_auto ? distributed_gamma_auto(s.dither.measure, s.dither.frequency, s.domain_length)
                                    : s.dither.gamma;
    src.n_max = s.pde_class == PdeClass::stefan ? s.dither.stefan_terms : s.dither.rad_terms;
    src.shift = s.delay;
    return src;
}

double distributed_gamma_auto(MeasureKind kind, double omega, double D) {
    if (kind == MeasureKind::point_mass) return 1.0;
    double h = 0.5 * omega * D;
    double sinc = h == 0.0 ? 1.0 : std::sin(h) / h;
    return sinc * sinc;
}

double s_transport(double t, const DitherSource& src) { return src.a * std::sin(src.omega * (t + src.D)); }

double s_wave(double t, const DitherSource& src) {
    return src.a * std::cos(src.omega * src.D) * std::sin(src.omega * t);
}

double s_diffusion(double t, const DitherSource& src) { return beta_diffusion(src.D, t, src.a, src.omega); }

std::vector<double> rad_partial_sums(double t, const DitherSource& src) {
    const double eps = src.rad.epsilon, b = src.rad.advection, lam = src.rad.reaction;
    const double xi = b * b / (4 * eps) - lam;
    const double w = src.omega, sw = std::sin(w * t), cw = std::cos(w * t);
    const double pref = std::exp(b / (2 * eps));
    std::vector<double> out;
    double acc = 0.0;
    for (int k = 0; k <= src.n_max; ++k) {
        double even = 0.0, odd = 0.0;
        for (int n = 0; 2 * n <= k; ++n) even += binom(k, 2 * n) * ipow(xi, k - 2 * n) * ipow(w, 2 * n);
        for (int n = 0; 2 * n + 1 <= k; ++n) odd += binom(k, 2 * n + 1) * ipow(xi, k - 2 * n - 1) * ipow(w, 2 * n + 1);
        double a2k = src.a / ipow(eps, k) * (sw * even + cw * odd);
        acc += a2k / factorial(2 * k) + (b / (2 * eps)) * a2k / factorial(2 * k + 1);
        out.push_back(pref * acc);
        require_finite(out.back(), "s_rad_series");
    }
    return out;
}

double s_rad_series(double t, const DitherSource& src) { return rad_partial_sums(t, src).back(); }

std::vector<double> stefan_partial_sums(double t, const DitherSource& src) {
    // S = -Σ_{i≥1} 1/(2i-1)! ∂t^i [-a sin ωt]^{2i-1}; the i = 0 term carries 1/(-1)! = 0.
    const double w = src.omega;
    std::vector<double> out{0.0};
    double acc = 0.0;
    for (int i = 1; i <= src.n_max; ++i) {
        const int p = i - 1, m = 2 * i - 1;
        // sin^{2p+1} x = 4^{-p} Σ_j (-1)^{p-j} C(2p+1, j) sin((2p+1-2j) x); ∂t^i sin(fωt) = (fω)^i sin(fωt + iπ/2)
        double deriv = 0.0;
        for (int j = 0; j <= p; ++j) {
            double f = (m - 2 * j) * w;
            double sign = ((p - j) % 2 == 0) ? 1.0 : -1.0;
            deriv += sign * binom(m, j) * ipow(f, i) * std::sin(f * t + i * pi / 2);
        }
        deriv /= ipow(4.0, p);
        double power_coef = -ipow(src.a, m);  // (-a)^{2i-1}
        acc += -(power_coef * deriv) / factorial(m);
        out.push_back(acc);
        require_finite(acc, "s_stefan_series");
    }
    return out;
}

double s_stefan_series(double t, const DitherSource& src) { return stefan_partial_sums(t, src).back(); }

double s_distributed(double t, const DitherSource& src, const Measure& m) {
    if (!(src.gamma != 0.0) || !std::isfinite(src.gamma)) throw ValidationError("s_distributed: γ(ω) must be nonzero");
    const double w = src.omega, D = src.D;
    double v;
    if (m.kind == MeasureKind::point_mass || D == 0.0) {
        v = src.a * std::sin(w * (t + D));
    } else {
        // (a/ωD)[cos ωt − cos ω(t+D)] written without cancellation
        double h = 0.5 * w * D;
        v = src.a * std::sin(w * t + h) * (std::sin(h) / h);
    }
    return v / src.gamma;
}

double flat_series_heat(double t, double a, double omega, double L) {
    // β(x,t) = Σ_k y^{(k)}(t) x^{2k}/(2k)!, y^{(k)} = a ω^k sin(ωt + kπ/2)
    double acc = 0.0, c = 1.0;  // c = ω^k L^{2k}/(2k)!
    for (int k = 0; k < 200; ++k) {
        double term = a * c * std::sin(omega * t + k * pi / 2);
        acc += term;
        if (k > 4 && std::abs(c * a) < 1e-18 * (1.0 + std::abs(acc))) break;
        c *= omega * L * L / ((2.0 * k + 1) * (2.0 * k + 2));
    }
    return acc;
}

namespace {

// One period of S for the wave class by marching the Cauchy problem in x:
// β_xx = β_tt, β(0,t) = a sin ωt, β_x(0,t) = 0, periodic in t.
std::vector<double> wave_period_table(const DitherSource& src, int m_t) {
    const double period = 2 * pi / src.omega;
    const double ht = period / m_t;
    int nx = static_cast<int>(std::ceil(src.D / ht));
    if (nx < 1) nx = 1;
    const double hx = src.D / nx;
    const double r2 = (hx / ht) * (hx / ht);
    std::vector<double> prev(m_t), cur(m_t), next(m_t);
    for (int i = 0; i < m_t; ++i) prev[i] = src.a * std::sin(src.omega * i * ht);
    auto dtt = [&](const std::vector<double>& v, int i) {
        return v[(i + 1) % m_t] - 2 * v[i] + v[(i + m_t - 1) % m_t];
    };
    for (int i = 0; i < m_t; ++i) cur[i] = prev[i] + 0.5 * r2 * dtt(prev, i);
    for (int j = 1; j < nx; ++j) {
        for (int i = 0; i < m_t; ++i) next[i] = 2 * cur[i] - prev[i] + r2 * dtt(cur, i);
        prev.swap(cur);
        cur.swap(next);
    }
    return cur;
}

double periodic_lookup(const std::vector<double>& tab, double period, double t) {
    const auto m = static_cast<double>(tab.size());
    double u = std::fmod(t / period, 1.0);
    if (u < 0) u += 1.0;
    double pos = u * m;
    auto i = static_cast<std::size_t>(pos);
    double w = pos - static_cast<double>(i);
    i %= tab.size();
    return (1 - w) * tab[i] + w * tab[(i + 1) % tab.size()];
}

double distributed_quadrature(double t, const DitherSource& src) {
    if (src.measure.kind == MeasureKind::point_mass) return src.a * std::sin(src.omega * (t + src.D)) / src.gamma;
    const int n = 4000;
    const double h = src.D / n;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) acc += ((k == 0 || k == n) ? 0.5 : 1.0) * std::sin(src.omega * (t + k * h));
    return src.a * acc * h / src.D / src.gamma;
}

}  // namespace

std::vector<double> s_numeric(const std::vector<double>& t_grid, const DitherSource& src) {
    std::vector<double> out;
    out.reserve(t_grid.size());
    switch (src.pde_class) {
        case PdeClass::transport: {
            // Exact delay line read backwards: S(t_j) is the target sample D/h steps later.
            if (t_grid.size() < 2) {
                for (double t : t_grid) out.push_back(src.a * std::sin(src.omega * (t + src.D)));
                return out;
            }
            const double h = t_grid[1] - t_grid[0];
            const long lag = steps_in(src.D, h, "transport numeric: D");
            std::vector<double> target(t_grid.size() + static_cast<std::size_t>(lag));
            for (std::size_t k = 0; k < target.size(); ++k) target[k] = src.a * std::sin(src.omega * (t_grid[0] + k * h));
            for (std::size_t j = 0; j < t_grid.size(); ++j) out.push_back(target[j + static_cast<std::size_t>(lag)]);
            return out;
        }
        case PdeClass::wave: {
            auto tab = wave_period_table(src, 4096);
            for (double t : t_grid) out.push_back(periodic_lookup(tab, 2 * pi / src.omega, t));
            return out;
        }
        case PdeClass::stefan:
            for (double t : t_grid) out.push_back(flat_series_heat(t, src.a, src.omega, stefan_boundary(src.stefan, t)));
            return out;
        case PdeClass::distributed_delay:
            for (double t : t_grid) out.push_back(distributed_quadrature(t, src));
            return out;
        case PdeClass::diffusion:
            throw UnsupportedMethod(
                "numeric dither for diffusion: the sideways heat problem is ill-posed for time stepping; "
                "use the residual check (check_motion_planning_residual) on the analytic form instead");
        case PdeClass::rad:
            throw UnsupportedMethod(
                "numeric dither for rad: sideways reaction-advection-diffusion is ill-posed for time stepping; "
                "use the analytic series instead");
    }
    return out;
}

double demod_M(double t, double a, double omega) { return 2.0 / a * std::sin(omega * t); }
double demod_N(double t, double a, double omega) { return -8.0 / (a * a) * std::cos(2 * omega * t); }

DitherSignal::DitherSignal(DitherSource src) : src_(std::move(src)) {
    if (src_.method == DitherMethod::numeric) {
        if (src_.pde_class == PdeClass::diffusion || src_.pde_class == PdeClass::rad) s_numeric({}, src_);
        if (src_.pde_class == PdeClass::wave) {
            table_ = std::make_shared<std::vector<double>>(wave_period_table(src_, 4096));
        }
    }
    if (src_.method == DitherMethod::pinn && !src_.learned)
        throw ValidationError("pinn dither requires a trained network handle");
}

double DitherSignal::operator()(double t) const {
    const double te = t + src_.shift;
    switch (src_.method) {
        case DitherMethod::pinn: return src_.learned(te);
        case DitherMethod::numeric:
            switch (src_.pde_class) {
                case PdeClass::transport: return src_.a * std::sin(src_.omega * (te + src_.D));
                case PdeClass::wave: return periodic_lookup(*table_, 2 * pi / src_.omega, te);
                case PdeClass::stefan:
                    return flat_series_heat(te, src_.a, src_.omega, stefan_boundary(src_.stefan, t));
                case PdeClass::distributed_delay: return distributed_quadrature(te, src_);
                default: break;
            }
            break;
        case DitherMethod::analytic:
            switch (src_.pde_class) {
                case PdeClass::diffusion: return s_diffusion(te, src_);
                case PdeClass::transport: return s_transport(te, src_);
                case PdeClass::wave: return s_wave(te, src_);
                case PdeClass::rad: return s_rad_series(te, src_);
                case PdeClass::stefan: return s_stefan_series(te, src_);
                case PdeClass::distributed_delay: return s_distributed(te, src_, src_.measure);
            }
    }
    throw UnsupportedMethod("no dither construction for this class/method");
}

ResidualReport check_motion_planning_residual(const DitherSource& src, int n_points, std::uint64_t seed) {
    if (src.pde_class != PdeClass::diffusion && src.pde_class != PdeClass::wave)
        throw UnsupportedMethod("residual check is defined for the diffusion and wave profiles");
    const bool heat = src.pde_class == PdeClass::diffusion;
    auto prof = [&](Jet x, Jet t) {
        return heat ? beta_diffusion(x, t, src.a, src.omega) : beta_wave(x, t, src.a, src.omega);
    };
    Rng rng(seed, stream::test);
    const double period = 2 * pi / src.omega;
    ResidualReport rep;
    for (int i = 0; i < n_points; ++i) {
        double x = rng.uniform(0.0, src.D), t = rng.uniform(0.0, 2 * period);
        Jet bx = prof({x, 1, 0}, {t, 0, 0});
        Jet bt = prof({x, 0, 0}, {t, 1, 0});
        double r = heat ? bt.d - bx.dd : bt.dd - bx.dd;
        rep.max_pde = std::max(rep.max_pde, std::abs(r));
        Jet b0 = prof({0.0, 1, 0}, {t, 0, 0});
        rep.max_bc_value = std::max(rep.max_bc_value, std::abs(b0.v - src.a * std::sin(src.omega * t)));
        rep.max_bc_flux = std::max(rep.max_bc_flux, std::abs(b0.d));
    }
    return rep;
}

}  // namespace pdes
