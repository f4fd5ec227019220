#include "pdes/core.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace pdes {

using json = nlohmann::json;

std::string_view to_string(PdeClass c) {
    switch (c) {
        case PdeClass::diffusion: return "diffusion";
        case PdeClass::rad: return "rad";
        case PdeClass::transport: return "transport";
        case PdeClass::wave: return "wave";
        case PdeClass::stefan: return "stefan";
        case PdeClass::distributed_delay: return "distributed_delay";
    }
    return "?";
}

std::string_view to_string(DitherMethod m) {
    switch (m) {
        case DitherMethod::analytic: return "analytic";
        case DitherMethod::numeric: return "numeric";
        case DitherMethod::pinn: return "pinn";
    }
    return "?";
}

std::string_view to_string(MeasureKind m) {
    return m == MeasureKind::point_mass ? "point_mass" : "uniform";
}

PdeClass parse_pde_class(std::string_view s) {
    for (auto c : {PdeClass::diffusion, PdeClass::rad, PdeClass::transport, PdeClass::wave, PdeClass::stefan,
                   PdeClass::distributed_delay})
        if (s == to_string(c)) return c;
    throw ValidationError("unknown pde class '" + std::string(s) +
                          "'; expected one of: diffusion, rad, transport, wave, stefan, distributed_delay");
}

DitherMethod parse_dither_method(std::string_view s) {
    for (auto m : {DitherMethod::analytic, DitherMethod::numeric, DitherMethod::pinn})
        if (s == to_string(m)) return m;
    throw ValidationError("unknown dither method '" + std::string(s) + "'; expected analytic, numeric or pinn");
}

MeasureKind parse_measure(std::string_view s) {
    if (s == "point_mass") return MeasureKind::point_mass;
    if (s == "uniform") return MeasureKind::uniform;
    throw ValidationError("unknown measure '" + std::string(s) + "'; expected point_mass or uniform");
}

DitherMethod default_dither_method(PdeClass c) {
    // The closed Stefan series is not the moving-domain flat output; the numeric flat series is.
    return c == PdeClass::stefan ? DitherMethod::numeric : DitherMethod::analytic;
}

DitherMethod dither_method(const Scenario& s) {
    return s.dither.method.empty() ? default_dither_method(s.pde_class) : parse_dither_method(s.dither.method);
}

bool is_hyperbolic(PdeClass c) {
    return c == PdeClass::transport || c == PdeClass::wave || c == PdeClass::distributed_delay;
}

long steps_in(double span, double dt, std::string_view what) {
    double q = span / dt;
    double n = std::round(q);
    if (std::abs(q - n) > 1e-9 * std::max(1.0, q))
        throw ValidationError(std::string(what) + " must be an integer multiple of grid.dt");
    return static_cast<long>(n);
}

namespace {

void check(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

}  // namespace

void validate(const Scenario& s) {
    check(std::isfinite(s.domain_length) && s.domain_length > 0, "domain_length: D > 0 violated");
    check(std::isfinite(s.dither.frequency) && s.dither.frequency > 0, "dither.frequency: ω > 0 violated");
    check(std::isfinite(s.controller.filter_corner) && s.controller.filter_corner > 0,
          "controller.filter_corner: c > 0 violated");
    check(std::isfinite(s.controller.gain) && s.controller.gain > 0, "controller.gain: K > 0 violated");
    check(std::isfinite(s.dither.amplitude) && s.dither.amplitude != 0, "dither.amplitude: a ≠ 0 violated");
    check(std::isfinite(s.map.hessian) && s.map.hessian < 0, "map.hessian: H < 0 violated");
    check(std::isfinite(s.map.optimizer) && std::isfinite(s.map.optimum), "map: optimizer and optimum must be finite");
    check(std::isfinite(s.grid.dt) && s.grid.dt > 0, "grid.dt: dt > 0 violated");
    check(s.grid.dt <= 1.0, "grid.dt: dt ≤ 1 violated");
    check(s.grid.n_x >= 8, "grid.n_x: n_x ≥ 8 violated");
    check(std::isfinite(s.grid.t_end) && s.grid.t_end >= 2 * std::numbers::pi / s.dither.frequency,
          "grid.t_end: t_end ≥ 2π/ω violated");
    check(std::isfinite(s.controller.theta_hat0), "controller.theta_hat0 must be finite");
    check(s.controller.washout >= 0, "controller.washout: corner ≥ 0 violated");
    check(s.controller.hessian_filter >= 0, "controller.hessian_filter: corner ≥ 0 violated");
    check(s.controller.wave_damping >= 0, "controller.wave_damping: gain ≥ 0 violated");
    check(s.controller.wave_rho.empty() || s.controller.wave_rho.size() >= 2,
          "controller.wave_rho: need at least 2 samples");
    check(s.dither.rad_terms >= 1, "dither.rad_terms: n_max ≥ 1 violated");
    check(s.dither.stefan_terms >= 1, "dither.stefan_terms: n_max ≥ 1 violated");
    check(s.dither.gamma_auto || (std::isfinite(s.dither.gamma) && s.dither.gamma != 0),
          "dither.gamma: γ ≠ 0 violated");
    check(s.rad.epsilon > 0, "rad.epsilon: ε > 0 violated");
    check(s.rad.advection >= 0, "rad.advection: b ≥ 0 violated");
    check(s.rad.reaction >= 0, "rad.reaction: λ ≥ 0 violated");
    check(s.stefan.k_t > 0, "stefan.k_t: k_t > 0 violated");
    check(s.stefan.k_b >= 0, "stefan.k_b: k_b ≥ 0 violated");
    check(s.stefan.floor > 0, "stefan.floor: floor > 0 violated");
    check(std::isfinite(s.delay) && s.delay >= 0, "delay: D_t ≥ 0 violated");
    if (s.delay > 0) {
        check(is_hyperbolic(s.pde_class), "delay: D_t > 0 is only supported for transport, wave and distributed_delay");
        steps_in(s.delay, s.grid.dt, "delay");
    }
    if (s.pde_class == PdeClass::transport || s.pde_class == PdeClass::distributed_delay)
        steps_in(s.domain_length, s.grid.dt, "domain_length (transport delay D)");
    if (s.pde_class == PdeClass::wave)
        check(s.grid.dt <= s.domain_length / s.grid.n_x, "grid.dt: wave CFL dt ≤ dx violated");
    if (s.pde_class == PdeClass::stefan)
        check(s.stefan.k_t * std::exp(-s.stefan.k_b * s.grid.t_end) > s.stefan.floor,
              "stefan: s(t_end) = k_t e^{-k_b t_end} must stay above stefan.floor");
    if (s.pde_class == PdeClass::distributed_delay && s.dither.gamma_auto) {
        double wD = s.dither.frequency * s.domain_length;
        if (s.dither.measure == MeasureKind::uniform)
            check(std::abs(std::sin(wD / 2)) > 1e-6, "dither.gamma: auto normalization vanishes at ωD = 2πk");
    }
    if (!s.dither.method.empty()) parse_dither_method(s.dither.method);
}

// ---------------------------------------------------------------------------
// JSON loading

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (auto k : known) ok = ok || it.key() == k;
        if (!ok) throw ValidationError("unknown key '" + where + (where.empty() ? "" : ".") + it.key() + "'");
    }
}

template <class T>
void get(const json& obj, const char* key, T& out, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        if constexpr (std::is_same_v<T, double>) {
            if (!it->is_number()) throw ValidationError("");
            out = it->template get<double>();
        } else if constexpr (std::is_same_v<T, int>) {
            if (!it->is_number_integer()) throw ValidationError("");
            auto v = it->template get<long long>();
            if (v < INT32_MIN || v > INT32_MAX) throw ValidationError("");
            out = static_cast<int>(v);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!it->is_number_unsigned()) throw ValidationError("");
            out = it->template get<std::uint64_t>();
        } else {
            if (!it->is_string()) throw ValidationError("");
            out = it->template get<std::string>();
        }
    } catch (const std::exception&) {
        throw ValidationError("wrong type for '" + where + key + "'");
    }
}

}  // namespace

Scenario load_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("parse error: ") + e.what());
    }
    Scenario s;
    reject_unknown(doc, {"pde_class", "domain_length", "delay", "seed", "map", "dither", "controller", "rad", "stefan", "grid"},
                   "");
    std::string cls = "diffusion";
    get(doc, "pde_class", cls, "");
    s.pde_class = parse_pde_class(cls);
    get(doc, "domain_length", s.domain_length, "");
    get(doc, "delay", s.delay, "");
    get(doc, "seed", s.seed, "");

    if (auto it = doc.find("map"); it != doc.end()) {
        reject_unknown(*it, {"hessian", "optimizer", "optimum"}, "map");
        get(*it, "hessian", s.map.hessian, "map.");
        get(*it, "optimizer", s.map.optimizer, "map.");
        get(*it, "optimum", s.map.optimum, "map.");
    }
    if (auto it = doc.find("dither"); it != doc.end()) {
        reject_unknown(*it, {"amplitude", "frequency", "gamma", "measure", "rad_terms", "stefan_terms", "method"},
                       "dither");
        get(*it, "amplitude", s.dither.amplitude, "dither.");
        get(*it, "frequency", s.dither.frequency, "dither.");
        if (auto g = it->find("gamma"); g != it->end()) {
            if (g->is_string() && g->get<std::string>() == "auto")
                s.dither.gamma_auto = true;
            else
                get(*it, "gamma", s.dither.gamma, "dither.");
        }
        std::string m;
        get(*it, "measure", m, "dither.");
        if (!m.empty()) s.dither.measure = parse_measure(m);
        get(*it, "rad_terms", s.dither.rad_terms, "dither.");
        get(*it, "stefan_terms", s.dither.stefan_terms, "dither.");
        get(*it, "method", s.dither.method, "dither.");
    }
    if (auto it = doc.find("controller"); it != doc.end()) {
        reject_unknown(*it,
                       {"filter_corner", "gain", "theta_hat0", "washout", "hessian_filter", "wave_damping",
                        "diffusion_law", "wave_law", "wave_rho"},
                       "controller");
        auto& c = s.controller;
        get(*it, "filter_corner", c.filter_corner, "controller.");
        get(*it, "gain", c.gain, "controller.");
        get(*it, "theta_hat0", c.theta_hat0, "controller.");
        get(*it, "washout", c.washout, "controller.");
        get(*it, "hessian_filter", c.hessian_filter, "controller.");
        get(*it, "wave_damping", c.wave_damping, "controller.");
        std::string law;
        get(*it, "diffusion_law", law, "controller.");
        if (law == "full_state")
            c.diffusion_law = DiffusionLaw::full_state;
        else if (!law.empty() && law != "measured")
            throw ValidationError("controller.diffusion_law: expected measured or full_state");
        law.clear();
        get(*it, "wave_law", law, "controller.");
        if (law == "reduced")
            c.wave_law = WaveLaw::reduced;
        else if (!law.empty() && law != "predictor")
            throw ValidationError("controller.wave_law: expected predictor or reduced");
        if (auto r = it->find("wave_rho"); r != it->end()) {
            if (!r->is_array()) throw ValidationError("wrong type for 'controller.wave_rho'");
            for (auto& v : *r) {
                if (!v.is_number()) throw ValidationError("wrong type for 'controller.wave_rho'");
                c.wave_rho.push_back(v.get<double>());
            }
        }
    }
    if (auto it = doc.find("rad"); it != doc.end()) {
        reject_unknown(*it, {"epsilon", "advection", "reaction"}, "rad");
        get(*it, "epsilon", s.rad.epsilon, "rad.");
        get(*it, "advection", s.rad.advection, "rad.");
        get(*it, "reaction", s.rad.reaction, "rad.");
    }
    if (auto it = doc.find("stefan"); it != doc.end()) {
        reject_unknown(*it, {"k_t", "k_b", "floor"}, "stefan");
        get(*it, "k_t", s.stefan.k_t, "stefan.");
        get(*it, "k_b", s.stefan.k_b, "stefan.");
        get(*it, "floor", s.stefan.floor, "stefan.");
    }
    if (auto it = doc.find("grid"); it != doc.end()) {
        reject_unknown(*it, {"n_x", "dt", "t_end"}, "grid");
        get(*it, "n_x", s.grid.n_x, "grid.");
        get(*it, "dt", s.grid.dt, "grid.");
        get(*it, "t_end", s.grid.t_end, "grid.");
    }
    validate(s);
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["pde_class"] = std::string(to_string(s.pde_class));
    j["domain_length"] = s.domain_length;
    j["delay"] = s.delay;
    j["seed"] = s.seed;
    j["map"] = {{"hessian", s.map.hessian}, {"optimizer", s.map.optimizer}, {"optimum", s.map.optimum}};
    j["dither"] = {{"amplitude", s.dither.amplitude},
                   {"frequency", s.dither.frequency},
                   {"measure", std::string(to_string(s.dither.measure))},
                   {"rad_terms", s.dither.rad_terms},
                   {"stefan_terms", s.dither.stefan_terms},
                   {"method", std::string(to_string(dither_method(s)))}};
    if (s.dither.gamma_auto)
        j["dither"]["gamma"] = "auto";
    else
        j["dither"]["gamma"] = s.dither.gamma;
    const auto& c = s.controller;
    j["controller"] = {{"filter_corner", c.filter_corner},
                       {"gain", c.gain},
                       {"theta_hat0", c.theta_hat0},
                       {"washout", c.washout},
                       {"hessian_filter", c.hessian_filter},
                       {"wave_damping", c.wave_damping},
                       {"diffusion_law", c.diffusion_law == DiffusionLaw::measured ? "measured" : "full_state"},
                       {"wave_law", c.wave_law == WaveLaw::predictor ? "predictor" : "reduced"}};
    if (!c.wave_rho.empty()) j["controller"]["wave_rho"] = c.wave_rho;
    j["rad"] = {{"epsilon", s.rad.epsilon}, {"advection", s.rad.advection}, {"reaction", s.rad.reaction}};
    j["stefan"] = {{"k_t", s.stefan.k_t}, {"k_b", s.stefan.k_b}, {"floor", s.stefan.floor}};
    j["grid"] = {{"n_x", s.grid.n_x}, {"dt", s.grid.dt}, {"t_end", s.grid.t_end}};
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Numerics shared by every module

double trapezoid(const std::vector<double>& f, double h) {
    if (f.size() < 2) throw NumericalError("quadrature needs at least 2 nodes");
    double acc = 0.5 * (f.front() + f.back());
    for (std::size_t j = 1; j + 1 < f.size(); ++j) acc += f[j];
    return acc * h;
}

void require_finite(const Field& f, std::string_view who) {
    for (std::size_t j = 0; j < f.values.size(); ++j)
        if (!std::isfinite(f.values[j]))
            throw NumericalError(std::string(who) + ": non-finite value at node " + std::to_string(j) +
                                 " (t=" + fmt17(f.t) + ")");
}

// ---------------------------------------------------------------------------
// CSV

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(const SimTrace& trace, std::ostream& out) {
    if (trace.rows.empty()) throw ValidationError("write_trace_csv: empty trace");
    out << "t,theta,Theta,y,U,S,Hhat,G\n";
    for (const auto& r : trace.rows) {
        out << fmt17(r.t) << ',' << fmt17(r.theta) << ',' << fmt17(r.Theta) << ',' << fmt17(r.y) << ','
            << fmt17(r.U) << ',' << fmt17(r.S) << ',' << fmt17(r.Hhat) << ',' << fmt17(r.G) << '\n';
    }
    out.flush();
    if (!out) throw Error("write_trace_csv: sink write failure");
}

SimTrace parse_trace_csv(std::istream& in) {
    SimTrace tr;
    std::string line;
    if (!std::getline(in, line) || line != "t,theta,Theta,y,U,S,Hhat,G")
        throw ValidationError("parse_trace_csv: bad header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double v[8];
        const char* p = line.c_str();
        for (int k = 0; k < 8; ++k) {
            char* end = nullptr;
            v[k] = std::strtod(p, &end);
            if (end == p) throw ValidationError("parse_trace_csv: bad number in '" + line + "'");
            p = end;
            if (k < 7) {
                if (*p != ',') throw ValidationError("parse_trace_csv: expected 8 columns");
                ++p;
            }
        }
        tr.rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
    }
    return tr;
}

void write_field_csv(const std::vector<Field>& snaps, std::ostream& out) {
    out << "x,t,value\n";
    for (const auto& f : snaps)
        for (std::size_t j = 0; j < f.values.size(); ++j)
            out << fmt17(f.x(j)) << ',' << fmt17(f.t) << ',' << fmt17(f.values[j]) << '\n';
    out.flush();
    if (!out) throw Error("write_field_csv: sink write failure");
}

}  // namespace pdes
