#include "doctest.h"
#include "generators.hpp"
#include "pdes/core.hpp"

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <sstream>

using namespace pdes;

namespace {

std::string error_of(std::string_view doc) {
    try {
        load_scenario(doc);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("minimal document takes the documented defaults") {
    Scenario s = load_scenario(R"({"pde_class": "diffusion"})");
    CHECK(s.pde_class == PdeClass::diffusion);
    CHECK(s.map.hessian == -2.0);
    CHECK(s.map.optimizer == 2.0);
    CHECK(s.map.optimum == 5.0);
    CHECK(s.domain_length == 1.0);
    CHECK(s.dither.frequency == 10.0);
    CHECK(s.dither.amplitude == 0.2);
    CHECK(s.controller.filter_corner == 10.0);
    CHECK(s.controller.gain == 0.2);
    CHECK(s.controller.theta_hat0 == 0.0);
}

TEST_CASE("zero frequency is rejected naming the invariant") {
    auto msg = error_of(R"({"pde_class": "diffusion", "dither": {"frequency": 0}})");
    CHECK(msg.find("ω > 0") != std::string::npos);
    CHECK(msg.find("dither.frequency") != std::string::npos);
}

TEST_CASE("transport with an integer number of delay steps is accepted") {
    Scenario s = load_scenario(R"({"pde_class": "transport", "domain_length": 3, "grid": {"dt": 0.01}})");
    CHECK(steps_in(s.domain_length, s.grid.dt, "D") == 300);
}

TEST_CASE("transport delay that is not a multiple of dt is rejected") {
    CHECK(error_of(R"({"pde_class": "transport", "domain_length": 1.0005})").find("domain_length") != std::string::npos);
}

TEST_CASE("every scalar invariant names its field") {
    struct Case {
        const char* doc;
        const char* field;
    } cases[] = {
        {R"({"domain_length": 0})", "domain_length"},
        {R"({"controller": {"filter_corner": -1}})", "controller.filter_corner"},
        {R"({"controller": {"gain": 0}})", "controller.gain"},
        {R"({"dither": {"amplitude": 0}})", "dither.amplitude"},
        {R"({"map": {"hessian": 1}})", "map.hessian"},
        {R"({"grid": {"dt": 0}})", "grid.dt"},
        {R"({"grid": {"n_x": 4}})", "grid.n_x"},
        {R"({"grid": {"t_end": 0.1}})", "grid.t_end"},
        {R"({"rad": {"epsilon": 0}})", "rad.epsilon"},
        {R"({"pde_class": "stefan", "stefan": {"k_b": 1, "floor": 0.5}, "grid": {"t_end": 10}})", "stefan"},
        {R"({"delay": 1})", "delay"},
        {R"({"pde_class": "wave", "grid": {"n_x": 2048}})", "CFL"},
        {R"({"dither": {"method": "magic"}})", "method"},
    };
    for (const auto& c : cases) {
        CAPTURE(c.doc);
        CHECK(error_of(c.doc).find(c.field) != std::string::npos);
    }
}

TEST_CASE("unknown keys are rejected at both levels") {
    CHECK(error_of(R"({"pde_class": "diffusion", "colour": 1})").find("unknown key 'colour'") != std::string::npos);
    CHECK(error_of(R"({"grid": {"nx": 64}})").find("grid.nx") != std::string::npos);
}

TEST_CASE("wrong value types are validation errors") {
    CHECK(error_of(R"({"grid": {"n_x": 64.5}})").find("grid.n_x") != std::string::npos);
    CHECK(error_of(R"({"pde_class": 3})").find("pde_class") != std::string::npos);
    CHECK(error_of(R"({"pde_class": "plasma"})").find("diffusion, rad, transport") != std::string::npos);
}

TEST_CASE("gamma accepts the auto keyword") {
    Scenario s = load_scenario(R"({"pde_class": "distributed_delay", "dither": {"gamma": "auto"}})");
    CHECK(s.dither.gamma_auto);
}

TEST_CASE("scenario json round-trips") {
    Scenario s;
    s.pde_class = PdeClass::wave;
    s.delay = 10;
    s.controller.wave_rho = {0.0, 0.5, 1.0};
    s.seed = 7;
    Scenario back = load_scenario(scenario_to_json(s));
    CHECK(back.pde_class == PdeClass::wave);
    CHECK(back.delay == 10);
    CHECK(back.controller.wave_rho == s.controller.wave_rho);
    CHECK(back.seed == 7);
    CHECK(scenario_to_json(back) == scenario_to_json(s));
}

TEST_CASE("fuzzed documents never escape as anything but validation errors") {
    for (std::uint64_t k = 0; k < 2000; ++k) {
        auto r = gen::rng_for(k);
        std::string doc = gen::junk_document(r);
        CAPTURE(doc);
        try {
            load_scenario(doc);
        } catch (const ValidationError&) {
        }
    }
}

TEST_CASE("steps_in accepts integer ratios only") {
    CHECK(steps_in(3.0, 1e-3, "x") == 3000);
    CHECK(steps_in(0.3, 0.1, "x") == 3);
    CHECK_THROWS_AS(steps_in(1.0005, 1e-3, "x"), ValidationError);
}

TEST_CASE("error families map to exit codes") {
    CHECK(ValidationError("v").exit_code() == 2);
    CHECK(UnsupportedMethod("u").exit_code() == 2);
    CHECK(NumericalError("n").exit_code() == 3);
    CHECK(DivergenceError("d").exit_code() == 4);
}

TEST_CASE("trapezoid is exact for linear integrands") {
    std::vector<double> f;
    for (int j = 0; j <= 10; ++j) f.push_back(3.0 * j * 0.1 - 1.0);
    CHECK(trapezoid(f, 0.1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(trapezoid({1.0}, 0.1), NumericalError);

    Field ones(16, 1.0, 1.0);
    CHECK(kernel_integral(ones, [](double x) { return 1.0 - x; }) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("require_finite reports the node") {
    Field f(8, 1.0);
    f[3] = std::nan("");
    try {
        require_finite(f, "probe");
        FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("node 3") != std::string::npos);
    }
}

TEST_CASE("three-row trace writes four lines") {
    SimTrace tr;
    for (int k = 0; k < 3; ++k) tr.rows.push_back({k * 0.1, 1, 2, 3, 4, 5, 6, 7});
    std::ostringstream out;
    write_trace_csv(tr, out);
    std::string s = out.str();
    CHECK(std::count(s.begin(), s.end(), '\n') == 4);
    CHECK(s.rfind("t,theta,Theta,y,U,S,Hhat,G\n", 0) == 0);
    CHECK(s.find('\r') == std::string::npos);
}

TEST_CASE("empty trace cannot be written") {
    std::ostringstream out;
    CHECK_THROWS_AS(write_trace_csv(SimTrace{}, out), ValidationError);
}

TEST_CASE("trace csv round-trips bit-exactly") {
    for (std::uint64_t k = 0; k < 200; ++k) {
        auto r = gen::rng_for(k);
        SimTrace tr;
        const std::size_t n = 1 + r.index(20);
        for (std::size_t i = 0; i < n; ++i) tr.rows.push_back(gen::trace_row(r, static_cast<double>(i) * 1e-3));
        std::stringstream io;
        write_trace_csv(tr, io);
        SimTrace back = parse_trace_csv(io);
        REQUIRE(back.rows.size() == tr.rows.size());
        for (std::size_t i = 0; i < n; ++i) CHECK(back.rows[i] == tr.rows[i]);
    }
}

TEST_CASE("fmt17 round-trips arbitrary doubles") {
    auto r = gen::rng_for(1);
    for (int k = 0; k < 5000; ++k) {
        double v = gen::wide_double(r);
        CHECK(std::strtod(fmt17(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("field csv groups rows by snapshot") {
    std::vector<Field> snaps{Field(2, 1.0, 1.0, 0.0), Field(2, 1.0, 2.0, 0.5)};
    std::ostringstream out;
    write_field_csv(snaps, out);
    CHECK(out.str() == "x,t,value\n0,0,1\n0.5,0,1\n1,0,1\n0,0.5,2\n0.5,0.5,2\n1,0.5,2\n");
}

TEST_CASE("rng is a pure function of seed, stream and counter") {
    Rng a(42, stream::collocation), b(42, stream::collocation), c(42, stream::batch), d(43, stream::collocation);
    bool differs_c = false, differs_d = false;
    for (int k = 0; k < 100; ++k) {
        auto va = a.next_u64();
        CHECK(va == b.next_u64());
        differs_c |= va != c.next_u64();
        differs_d |= va != d.next_u64();
    }
    CHECK(differs_c);
    CHECK(differs_d);
}

TEST_CASE("rng uniforms stay in range with the right mean") {
    Rng r(5, stream::test);
    double sum = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        auto i = r.index(7);
        REQUIRE(i < 7);
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("default dither methods per class") {
    CHECK(default_dither_method(PdeClass::diffusion) == DitherMethod::analytic);
    CHECK(default_dither_method(PdeClass::stefan) == DitherMethod::numeric);
    Scenario s;
    s.dither.method = "numeric";
    CHECK(dither_method(s) == DitherMethod::numeric);
}
