#include "doctest.h"
#include "generators.hpp"
#include "pdes/dither.hpp"

#include <array>
#include <cmath>
#include <numbers>

using namespace pdes;

namespace {

constexpr double pi = std::numbers::pi;

DitherSource source(PdeClass c) {
    DitherSource s;
    s.pde_class = c;
    return s;
}

// Period average of f over [0, 2π/ω] by the trapezoid rule with n panels.
template <class F>
double period_average(F f, double omega, int n) {
    const double period = 2 * pi / omega, h = period / n;
    double acc = 0.5 * (f(0.0) + f(period));
    for (int k = 1; k < n; ++k) acc += f(k * h);
    return acc * h / period;
}

}  // namespace

TEST_CASE("transport dither is the advanced sinusoid") {
    auto s = source(PdeClass::transport);
    CHECK(s_transport(0.0, s) == doctest::Approx(-0.108804).epsilon(1e-5));
    CHECK(std::abs(s_transport(-1.0, s)) < 1e-15);
    CHECK(s_transport(0.37, s) == 0.2 * std::sin(10.0 * 1.37));
}

TEST_CASE("wave dither examples") {
    auto s = source(PdeClass::wave);
    CHECK(s_wave(pi / 20, s) == doctest::Approx(-0.167814).epsilon(1e-5));
    s.D = pi / 2 / s.omega;
    for (double t : {0.0, 0.1, 0.77}) CHECK(std::abs(s_wave(t, s)) < 1e-16);
}

TEST_CASE("diffusion dither at zero length is the base sinusoid") {
    auto s = source(PdeClass::diffusion);
    s.D = 0.0;
    for (double t : {0.0, 0.3, 1.1}) CHECK(s_diffusion(t, s) == 0.2 * std::sin(10.0 * t));
}

TEST_CASE("diffusion and wave closed forms satisfy their motion-planning problems") {
    for (PdeClass c : {PdeClass::diffusion, PdeClass::wave}) {
        auto rep = check_motion_planning_residual(source(c), 1000, 11);
        CAPTURE(to_string(c));
        CHECK(rep.max_pde <= 1e-10);
        CHECK(rep.max_bc_value <= 1e-12);
        CHECK(rep.max_bc_flux <= 1e-12);
    }
}

TEST_CASE("diffusion dither envelope grows like the exponential bound") {
    auto s = source(PdeClass::diffusion);
    s.D = 3.0;
    double peak = 0;
    for (int k = 0; k < 2000; ++k) peak = std::max(peak, std::abs(s_diffusion(k * 2 * pi / 10 / 2000, s)));
    double env = 0.5 * s.a * std::exp(s.D * std::sqrt(s.omega / 2));
    CHECK(peak / env == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("rad series leading term and prefactor") {
    auto s = source(PdeClass::rad);
    s.rad = {1.0, 0.0, 0.0};
    s.n_max = 0;
    for (double t : {0.0, 0.2, 0.9}) CHECK(s_rad_series(t, s) == doctest::Approx(0.2 * std::sin(10 * t)).epsilon(1e-15));

    s.n_max = 10;
    s.rad = {1.0, 0.0, 0.5};
    auto sums = rad_partial_sums(0.4, s);
    CHECK(s_rad_series(0.4, s) == sums.back());
    s.rad.advection = 0.3;
    auto shifted = rad_partial_sums(0.4, s);
    CHECK(shifted.front() / (std::exp(0.15) * (0.2 * std::sin(4.0) * (1 + 0.15))) == doctest::Approx(1.0));
}

TEST_CASE("rad partial sum increments decay past a threshold") {
    for (double lam : {0.0, 0.5, -1.0}) {
        auto s = source(PdeClass::rad);
        s.rad.reaction = lam;
        s.n_max = 14;
        // Envelope over one period: pointwise increments can vanish where a sin or cos factor does.
        std::vector<double> env(static_cast<std::size_t>(s.n_max), 0.0);
        for (int j = 0; j < 64; ++j) {
            auto sums = rad_partial_sums(j * 2 * pi / s.omega / 64, s);
            for (std::size_t n = 1; n < sums.size(); ++n) env[n - 1] = std::max(env[n - 1], std::abs(sums[n] - sums[n - 1]));
        }
        CAPTURE(lam);
        for (std::size_t n = 2; n + 1 < env.size(); ++n) CHECK(env[n + 1] < env[n]);
        CHECK(env.back() < 1e-8);
    }
}

TEST_CASE("stefan series first term and zero amplitude") {
    auto s = source(PdeClass::stefan);
    s.n_max = 1;
    for (double t : {0.0, 0.21, 1.3}) CHECK(s_stefan_series(t, s) == doctest::Approx(0.2 * 10 * std::cos(10 * t)).epsilon(1e-14));
    s.a = 0.0;
    s.n_max = 6;
    CHECK(s_stefan_series(0.3, s) == 0.0);
}

TEST_CASE("stefan second term matches hand differentiation") {
    // i = 2: -(1/3!) d²/dt² [-a sin ωt]³ = (a³/6) d²/dt² sin³ωt
    auto s = source(PdeClass::stefan);
    s.n_max = 2;
    const double a = s.a, w = s.omega;
    for (double t : {0.05, 0.4}) {
        double sn = std::sin(w * t), cs = std::cos(w * t);
        double d2 = 3 * w * w * (2 * sn * cs * cs - sn * sn * sn);
        auto sums = stefan_partial_sums(t, s);
        CHECK(sums[2] - sums[1] == doctest::Approx(a * a * a / 6 * d2).epsilon(1e-12));
    }
}

TEST_CASE("distributed delay dither") {
    auto s = source(PdeClass::distributed_delay);
    CHECK(s_distributed(0.0, s, {MeasureKind::uniform}) == doctest::Approx(0.036781).epsilon(1e-5));
    for (double t : {0.0, 0.4, 2.2}) {
        CHECK(s_distributed(t, s, {MeasureKind::point_mass}) == s_transport(t, s));
    }
    s.D = 1e-9;
    for (double t : {0.1, 0.5}) CHECK(std::abs(s_distributed(t, s, {MeasureKind::uniform}) - 0.2 * std::sin(10 * t)) < 1e-9);
    s.gamma = 0.0;
    CHECK_THROWS_AS(s_distributed(0.0, s, {MeasureKind::uniform}), ValidationError);
}

TEST_CASE("auto gamma makes the arriving uniform-delay dither the base sinusoid") {
    auto s = source(PdeClass::distributed_delay);
    s.gamma = distributed_gamma_auto(MeasureKind::uniform, s.omega, s.D);
    // Arriving signal: (1/D)∫ S(t-σ) dσ should equal a sin ωt.
    for (double t : {0.0, 0.3, 1.7}) {
        const int n = 4000;
        double acc = 0;
        for (int k = 0; k <= n; ++k) acc += (k == 0 || k == n ? 0.5 : 1.0) * s_distributed(t - k * s.D / n, s, s.measure);
        CHECK(acc / n == doctest::Approx(0.2 * std::sin(10 * t)).epsilon(1e-6));
    }
}

TEST_CASE("numeric transport dither is exact") {
    auto s = source(PdeClass::transport);
    s.method = DitherMethod::numeric;
    std::vector<double> grid;
    for (int k = 0; k <= 2000; ++k) grid.push_back(k * 1e-3);
    auto num = s_numeric(grid, s);
    double err = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) err = std::max(err, std::abs(num[k] - s_transport(grid[k], s)));
    CHECK(err <= 1e-12);
}

TEST_CASE("numeric wave dither converges to the closed form") {
    auto s = source(PdeClass::wave);
    s.method = DitherMethod::numeric;
    std::vector<double> grid;
    for (int k = 0; k <= 1000; ++k) grid.push_back(k * 1e-3);
    auto num = s_numeric(grid, s);
    double err = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) err = std::max(err, std::abs(num[k] - s_wave(grid[k], s)));
    // 4096 samples per period: h ≈ 1.5e-4, so the second-order error is a few 1e-6 of the amplitude.
    CHECK(err <= 1e-5);
}

TEST_CASE("numeric dither refuses the sideways heat problem") {
    auto s = source(PdeClass::diffusion);
    s.method = DitherMethod::numeric;
    try {
        s_numeric({0.0, 0.1}, s);
        FAIL("expected refusal");
    } catch (const UnsupportedMethod& e) {
        CHECK(std::string(e.what()).find("residual check") != std::string::npos);
    }
    CHECK(check_motion_planning_residual(source(PdeClass::diffusion), 200, 3).pass(1e-10));
    s.pde_class = PdeClass::rad;
    CHECK_THROWS_AS(DitherSignal{s}, UnsupportedMethod);
}

TEST_CASE("numeric stefan with frozen boundary matches the heat flat series") {
    auto s = source(PdeClass::stefan);
    s.method = DitherMethod::numeric;
    s.stefan.k_b = 0.0;
    s.stefan.k_t = 1.0;
    auto d = source(PdeClass::diffusion);
    for (double t : {0.0, 0.3, 0.61}) CHECK(s_numeric({t}, s)[0] == doctest::Approx(s_diffusion(t, d)).epsilon(1e-12));
}

TEST_CASE("demodulation signals") {
    CHECK(demod_M(0.0, 0.2, 10) == 0.0);
    CHECK(demod_N(0.0, 0.2, 10) == doctest::Approx(-200.0).epsilon(1e-14));
    CHECK(demod_N(0.0, 0.5, 3) == doctest::Approx(-8 / 0.25).epsilon(1e-14));
    const double period = 2 * pi / 10;
    for (double t : {0.0, 0.123, 3.3}) {
        CHECK(std::abs(demod_M(t + period, 0.2, 10) - demod_M(t, 0.2, 10)) <= 1e-12);
        CHECK(std::abs(demod_N(t + period, 0.2, 10) - demod_N(t, 0.2, 10)) <= 1e-12);
    }
}

TEST_CASE("frozen-error demodulation averages recover gradient and curvature") {
    const double H = -2.0, w = 10.0;
    auto r = gen::rng_for(77);
    for (int k = 0; k < 30; ++k) {
        const double a = std::array{0.05, 0.2, 0.5}[static_cast<std::size_t>(k % 3)];
        const double th = r.uniform(-1.0, 1.0);
        auto y = [&](double t) { return 5.0 + H / 2 * std::pow(th + a * std::sin(w * t), 2); };
        double g = period_average([&](double t) { return demod_M(t, a, w) * y(t); }, w, 10000);
        double h = period_average([&](double t) { return demod_N(t, a, w) * y(t); }, w, 10000);
        CAPTURE(a);
        CAPTURE(th);
        CHECK(std::abs(g - H * th) <= 1e-9);
        CHECK(std::abs(h - H) <= 1e-9);
    }
}

TEST_CASE("every analytic dither is periodic") {
    auto r = gen::rng_for(5);
    for (PdeClass c : {PdeClass::diffusion, PdeClass::rad, PdeClass::transport, PdeClass::wave, PdeClass::stefan,
                       PdeClass::distributed_delay}) {
        auto s = source(c);
        s.n_max = c == PdeClass::stefan ? 6 : 10;
        DitherSignal sig(s);
        const double period = 2 * pi / s.omega;
        for (int k = 0; k < 50; ++k) {
            double t = r.uniform(0.0, 20.0);
            CAPTURE(to_string(c));
            CHECK(std::abs(sig(t + period) - sig(t)) <= 1e-12 * std::max(1.0, std::abs(sig(t))));
        }
    }
}

TEST_CASE("zero length collapses every class to the base sinusoid") {
    auto r = gen::rng_for(6);
    for (PdeClass c : {PdeClass::diffusion, PdeClass::transport, PdeClass::wave, PdeClass::distributed_delay}) {
        auto s = source(c);
        s.D = 0.0;
        DitherSignal sig(s);
        for (int k = 0; k < 50; ++k) {
            double t = r.uniform(0.0, 5.0);
            CHECK(std::abs(sig(t) - 0.2 * std::sin(10 * t)) <= 1e-12);
        }
    }
}

TEST_CASE("shift advances the evaluation time") {
    auto s = source(PdeClass::wave);
    s.shift = 10.0;
    DitherSignal sig(s);
    CHECK(sig(0.25) == s_wave(10.25, s));
}

TEST_CASE("pinn method without a network is rejected") {
    auto s = source(PdeClass::transport);
    s.method = DitherMethod::pinn;
    CHECK_THROWS_AS(DitherSignal{s}, ValidationError);
    s.learned = [](double t) { return t; };
    CHECK(DitherSignal(s)(1.5) == 1.5);
}
