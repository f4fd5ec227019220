#include "doctest.h"
#include "generators.hpp"
#include "pdes/solvers.hpp"

#include <cmath>
#include <numbers>

using namespace pdes;

namespace {

constexpr double pi = std::numbers::pi;

double max_abs_diff(const Field& a, const Field& b) {
    double m = 0;
    for (std::size_t j = 0; j < a.values.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

double heat_error(int n_x, double dt, double t_end) {
    const double L = 1.0;
    DiffusionState s{Field(n_x, L)};
    for (std::size_t j = 0; j < s.field.values.size(); ++j) s.field[j] = manufactured_heat(s.field.x(j), 0.0, L);
    const long steps = std::lround(t_end / dt);
    ParabolicCN cn(L, n_x, dt);
    for (long k = 1; k <= steps; ++k) cn.step(s.field, manufactured_heat(L, k * dt, L));
    double err = 0;
    for (std::size_t j = 0; j < s.field.values.size(); ++j)
        err = std::max(err, std::abs(s.field[j] - manufactured_heat(s.field.x(j), t_end, L)));
    return err;
}

double standing_wave(double x, double t, double om) { return std::cos(om * x) * std::sin(om * t); }

double wave_error(int n_x, double dt, double t_end) {
    const double L = 1.0, om = 3.0;
    Field d0(n_x, L), v0(n_x, L);
    for (std::size_t j = 0; j < d0.values.size(); ++j) {
        d0[j] = standing_wave(d0.x(j), 0.0, om);
        v0[j] = om * std::cos(om * d0.x(j));
    }
    WaveState s = make_wave_state(d0, v0, dt);
    const long steps = std::lround(t_end / dt);
    for (long k = 1; k <= steps; ++k) step_wave_inplace(s, standing_wave(L, k * dt, om), dt);
    double err = 0;
    for (std::size_t j = 0; j < s.disp.values.size(); ++j)
        err = std::max(err, std::abs(s.disp[j] - standing_wave(s.disp.x(j), t_end, om)));
    return err;
}

}  // namespace

TEST_CASE("tridiagonal solve matches a hand-solved system") {
    std::vector<double> lo{0, 1, 1}, di{4, 4, 4}, up{1, 1, 0}, rhs{5, 6, 5};
    solve_tridiagonal(lo, di, up, rhs);
    CHECK(rhs[0] == doctest::Approx(1.0));
    CHECK(rhs[1] == doctest::Approx(1.0));
    CHECK(rhs[2] == doctest::Approx(1.0));
}

TEST_CASE("heat solver tracks the manufactured solution") {
    CHECK(heat_error(64, 1e-3, 0.5) < 5e-5);
}

TEST_CASE("heat solver error falls fourfold under simultaneous refinement") {
    double e1 = heat_error(16, 0.02, 0.5), e2 = heat_error(32, 0.01, 0.5), e3 = heat_error(64, 0.005, 0.5);
    CHECK(e1 / e2 >= 3.5);
    CHECK(e1 / e2 <= 4.5);
    CHECK(e2 / e3 >= 3.5);
    CHECK(e2 / e3 <= 4.5);
}

TEST_CASE("wave solver error falls fourfold under simultaneous refinement") {
    double e1 = wave_error(16, 0.04, 2.0), e2 = wave_error(32, 0.02, 2.0), e3 = wave_error(64, 0.01, 2.0);
    CHECK(e1 / e2 >= 3.5);
    CHECK(e1 / e2 <= 4.5);
    CHECK(e2 / e3 >= 3.5);
    CHECK(e2 / e3 <= 4.5);
}

TEST_CASE("zero state with zero input stays zero") {
    DiffusionState d{Field(32, 1.0)};
    RadState r{Field(32, 1.0), {2.0, 1.0, 0.5}};
    StefanState st = make_stefan_state({}, 32, 0.0);
    WaveState w{Field(32, 1.0), Field(32, 1.0)};
    for (int k = 0; k < 100; ++k) {
        d = step_diffusion(d, 0.0, 1e-3);
        r = step_rad(r, 0.0, 1e-3);
        st = step_stefan(st, 0.0, 1e-3);
        w = step_wave(w, 0.0, 1e-3);
    }
    for (double v : d.field.values) CHECK(v == 0.0);
    for (double v : r.field.values) CHECK(v == 0.0);
    for (double v : st.field.values) CHECK(v == 0.0);
    for (double v : w.disp.values) CHECK(v == 0.0);
}

TEST_CASE("constant field equal to the input is a steady state") {
    DiffusionState d{Field(32, 1.0, 0.7)};
    for (int k = 0; k < 50; ++k) d = step_diffusion(d, 0.7, 1e-2);
    for (double v : d.field.values) CHECK(v == doctest::Approx(0.7).epsilon(1e-13));
}

TEST_CASE("boundary conditions hold after every step") {
    auto r = gen::rng_for(3);
    Field f = gen::smooth_field(r, 40, 1.0);
    ParabolicCN cn(1.0, 40, 1e-3);
    // Neumann by reflection: the half-line solution equals the even extension solved with two Dirichlet ends.
    Field ext(80, 2.0);
    ext.x0 = -1.0;
    for (int j = 0; j <= 40; ++j) {
        ext[static_cast<std::size_t>(40 + j)] = f[static_cast<std::size_t>(j)];
        ext[static_cast<std::size_t>(40 - j)] = f[static_cast<std::size_t>(j)];
    }
    std::vector<double> lo, di, up;
    parabolic_rows(ext, 1.0, 0.0, 0.0, lo, di, up);
    for (int k = 1; k <= 200; ++k) {
        double right = std::sin(0.05 * k);
        cn.step(f, right);
        step_cn_dirichlet(ext, lo, di, up, 1e-3, right, right);
        REQUIRE(f.values.back() == right);
        for (int j = 0; j <= 40; ++j)
            REQUIRE(std::abs(ext[static_cast<std::size_t>(40 + j)] - f[static_cast<std::size_t>(j)]) < 1e-12);
    }
}

TEST_CASE("solvers are linear in state and input") {
    for (std::uint64_t c = 0; c < 20; ++c) {
        auto r = gen::rng_for(c);
        const int n = 16 + static_cast<int>(r.index(48));
        Field f1 = gen::smooth_field(r, n, 1.0), f2 = gen::rough_field(r, n, 1.0);
        double th1 = r.uniform(-1, 1), th2 = r.uniform(-1, 1);
        Field sum = f1;
        for (std::size_t j = 0; j < sum.values.size(); ++j) sum[j] += f2[j];

        RadParams rp{r.uniform(0.5, 2.0), r.uniform(0.0, 1.0), r.uniform(0.0, 1.0)};
        RadState a = step_rad({f1, rp}, th1, 1e-3), b = step_rad({f2, rp}, th2, 1e-3), ab = step_rad({sum, rp}, th1 + th2, 1e-3);
        for (std::size_t j = 0; j < sum.values.size(); ++j) CHECK(std::abs(ab.field[j] - a.field[j] - b.field[j]) < 1e-12);

        Field zero(n, 1.0);
        WaveState w1 = step_wave({f1, zero}, th1, 1e-3), w2 = step_wave({f2, zero}, th2, 1e-3),
                  w12 = step_wave({sum, zero}, th1 + th2, 1e-3);
        for (std::size_t j = 0; j < sum.values.size(); ++j) CHECK(std::abs(w12.disp[j] - w1.disp[j] - w2.disp[j]) < 1e-12);

        StefanState s1 = make_stefan_state({}, n, 0.0), s2 = s1, s12 = s1;
        s1.field.values = f1.values;
        s2.field.values = f2.values;
        s12.field.values = sum.values;
        s1 = step_stefan(s1, th1, 1e-3);
        s2 = step_stefan(s2, th2, 1e-3);
        s12 = step_stefan(s12, th1 + th2, 1e-3);
        for (std::size_t j = 0; j < sum.values.size(); ++j)
            CHECK(std::abs(s12.field[j] - s1.field[j] - s2.field[j]) < 1e-12);
    }
}

TEST_CASE("rad without advection or reaction is time-rescaled diffusion") {
    auto r = gen::rng_for(11);
    Field f = gen::smooth_field(r, 32, 1.0);
    RadState a = step_rad({f, {1.0, 0.0, 0.0}}, 0.3, 1e-3);
    DiffusionState b = step_diffusion({f}, 0.3, 1e-3);
    CHECK(max_abs_diff(a.field, b.field) < 1e-12);
    RadState c = step_rad({f, {2.5, 0.0, 0.0}}, 0.3, 1e-3);
    DiffusionState d = step_diffusion({f}, 0.3, 2.5e-3);
    CHECK(max_abs_diff(c.field, d.field) < 1e-12);
}

TEST_CASE("rad growth respects the reaction bound") {
    const double lam = 0.8, dt = 1e-3;
    auto r = gen::rng_for(12);
    Field f = gen::smooth_field(r, 64, 1.0);
    f.values.back() = 0.0;
    auto norm = [](const Field& g) {
        double m = 0;
        for (double v : g.values) m = std::max(m, std::abs(v));
        return m;
    };
    const double n0 = norm(f);
    RadState s{f, {1.0, 0.0, lam}};
    for (int k = 1; k <= 1000; ++k) {
        s = step_rad(s, 0.0, dt);
        REQUIRE(norm(s.field) <= n0 * std::exp(lam * k * dt) * (1 + 1e-6));
    }
}

TEST_CASE("rad reproduces the spatially uniform exponential") {
    const double lam = 0.5, dt = 1e-3;
    RadState s{Field(32, 1.0, 1.0), {1.0, 0.7, lam}};
    for (int k = 1; k <= 1000; ++k) s = step_rad(s, std::exp(lam * k * dt), dt);
    for (double v : s.field.values) CHECK(v == doctest::Approx(std::exp(lam)).epsilon(1e-6));
}

TEST_CASE("frozen Stefan boundary reduces to the heat solver") {
    StefanParams p{1.3, 0.0, 1e-3};
    auto r = gen::rng_for(13);
    Field f = gen::smooth_field(r, 32, p.k_t);
    StefanState st = make_stefan_state(p, 32, 0.0);
    st.field.values = f.values;
    DiffusionState d{f};
    for (int k = 1; k <= 300; ++k) {
        double th = std::cos(0.01 * k);
        st = step_stefan(st, th, 1e-3);
        d = step_diffusion(d, th, 1e-3);
    }
    CHECK(max_abs_diff(st.field, d.field) < 1e-10);
}

TEST_CASE("moving Stefan solver agrees with the front-tracking oracle") {
    StefanParams p{1.0, 0.1, 1e-3};
    const double dt = 1e-3;
    auto drive = [](double t) { return std::sin(3.0 * t); };
    StefanState st = make_stefan_state(p, 64, 0.0);
    StefanFrontTracking ft(p, 64, 0.0);
    for (int k = 1; k <= 1000; ++k) st = step_stefan(st, drive(k * dt), dt);
    ft.advance_to(1.0, drive);
    double worst = 0;
    for (std::size_t j = 0; j < st.field.values.size(); ++j)
        worst = std::max(worst, std::abs(st.field[j] - ft.value_at(st.field.x(j))));
    CHECK(st.s == doctest::Approx(std::exp(-0.1)).epsilon(1e-14));
    CHECK(worst <= 1e-3);
}

TEST_CASE("Stefan domain collapse is reported") {
    StefanState st = make_stefan_state({1.0, 5.0, 0.5}, 16, 0.0);
    CHECK_THROWS_AS(
        [&] {
            for (int k = 0; k < 1000; ++k) st = step_stefan(st, 0.0, 1e-3);
        }(),
        NumericalError);
}

TEST_CASE("transport is an exact delay line") {
    TransportState s = make_transport_state(0.3, 1e-3);
    for (int k = 0; k <= 400; ++k) {
        auto [next, out] = step_transport(std::move(s), k == 0 ? 1.0 : 0.0);
        s = std::move(next);
        CHECK(out == (k == 300 ? 1.0 : 0.0));
    }
    TransportState c = make_transport_state(0.3, 1e-3);
    for (int k = 0; k <= 600; ++k) {
        auto [next, out] = step_transport(std::move(c), 1.0);
        c = std::move(next);
        if (k >= 300) CHECK(out == 1.0);
    }
    const double a = 0.2, om = 10, D = 0.3, dt = 1e-3;
    TransportState sn = make_transport_state(D, dt);
    for (int k = 0; k <= 2000; ++k) {
        auto [next, out] = step_transport(std::move(sn), a * std::sin(om * k * dt));
        sn = std::move(next);
        if (k >= 300) CHECK(std::abs(out - a * std::sin(om * (k * dt - D))) < 1e-12);
    }
}

TEST_CASE("delay line trapezoid is exact for constants") {
    DelayLine line(100, 0.0);
    for (int k = 0; k <= 100; ++k) line.push(2.5);
    CHECK(line.integrate(0.01, [](double) { return 1.0; }) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("wave CFL violation is rejected") {
    WaveState w{Field(16, 1.0), Field(16, 1.0)};
    CHECK_THROWS_AS(step_wave(w, 0.0, 0.1), ValidationError);
}

TEST_CASE("wave energy with frozen boundary drifts under one percent over ten periods") {
    const int n = 128;
    const double dt = 2e-3, om = 0.5 * pi * 3;  // cos(ωx) vanishes at x = 1
    Field d0(n, 1.0), v0(n, 1.0);
    for (std::size_t j = 0; j < d0.values.size(); ++j) d0[j] = std::cos(om * d0.x(j));
    WaveState s = make_wave_state(d0, v0, dt);
    Field prev = s.disp;
    step_wave_inplace(s, 0.0, dt);
    const double e0 = wave_energy(s, prev);
    const long steps = std::lround(10 * 2 * pi / om / dt);
    double worst = 0;
    for (long k = 0; k < steps; ++k) {
        prev = s.disp;
        step_wave_inplace(s, 0.0, dt);
        worst = std::max(worst, std::abs(wave_energy(s, prev) - e0) / e0);
    }
    CHECK(worst <= 0.01);
}

TEST_CASE("Dirichlet step keeps both end values") {
    Field f(20, 1.0);
    std::vector<double> lo, di, up;
    parabolic_rows(f, 1.0, 0.0, 0.0, lo, di, up);
    for (int k = 0; k < 2000; ++k) step_cn_dirichlet(f, lo, di, up, 1e-3, 1.0, 0.0);
    CHECK(f.values.front() == 1.0);
    CHECK(f.values.back() == 0.0);
    for (std::size_t j = 0; j < f.values.size(); ++j) CHECK(f[j] == doctest::Approx(1.0 - f.x(j)).epsilon(1e-3));
}
