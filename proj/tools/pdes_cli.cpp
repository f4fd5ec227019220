// Command-line entry points: compare, sweep, es, dither, pinn-train.

#include "CLI11.hpp"
#include "pdes/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace pdes;
namespace fs = std::filesystem;

namespace {

constexpr const char* out_dir_env = "PDES_OUT_DIR";

struct Globals {
    std::uint64_t seed = 42;
    std::string out_dir;
    std::string scale = "desk";
    std::string scenario_path;
};

/// Scenario from the file (if any), with the class flag applied on top of the defaults.
Scenario resolve_scenario(const Globals& g, const std::string& pde) {
    Scenario s;
    if (!g.scenario_path.empty()) {
        s = load_scenario_file(g.scenario_path);
        if (!pde.empty() && parse_pde_class(pde) != s.pde_class)
            throw ValidationError("--pde '" + pde + "' contradicts pde_class '" + std::string(to_string(s.pde_class)) +
                                  "' in " + g.scenario_path);
    } else if (!pde.empty()) {
        s.pde_class = parse_pde_class(pde);
    }
    validate(s);
    return s;
}

/// Opens a file inside the output directory; names may not climb out of it.
std::ofstream open_out(const Globals& g, const std::string& name) {
    fs::path rel(name);
    if (rel.is_absolute() || rel.empty())
        throw ValidationError("output name '" + name + "' must be a relative path inside --out-dir");
    for (const auto& part : rel)
        if (part == "..") throw ValidationError("output name '" + name + "' escapes --out-dir");
    fs::path full = fs::path(g.out_dir) / rel;
    fs::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + full.string() + " for writing");
    return out;
}

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> v;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        double x = std::strtod(item.c_str(), &end);
        if (item.empty() || end != item.c_str() + item.size()) throw ValidationError("sweep: bad value '" + item + "'");
        v.push_back(x);
    }
    return v;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

int cmd_compare(const Globals& g, const std::string& pde, int snapshots) {
    Scenario s = resolve_scenario(g, pde);
    auto rep = run_compare(s, train_config(parse_scale(g.scale), g.seed), snapshots);
    const std::string stem = "compare_" + std::string(to_string(s.pde_class));
    auto o1 = open_out(g, stem + "_numerical.csv");
    write_field_csv(rep.numerical, o1);
    auto o2 = open_out(g, stem + "_pinn.csv");
    write_field_csv(rep.learned, o2);
    auto o3 = open_out(g, stem + "_error.csv");
    write_field_csv(rep.error, o3);
    std::cout << "compare " << to_string(s.pde_class) << ": max_abs_err " << fmt(rep.max_err) << " mean_abs_err "
              << fmt(rep.mean_err) << " final_loss " << fmt(rep.final_loss.total) << '\n';
    return 0;
}

int cmd_sweep(const Globals& g, const std::string& pde, const std::string& param, const std::string& values, int seeds,
              unsigned jobs) {
    SweepSpec spec;
    spec.scen = resolve_scenario(g, pde.empty() && g.scenario_path.empty() ? "transport" : pde);
    spec.param = parse_sweep_param(param);
    spec.values = parse_values(values);
    spec.seeds = seeds;
    spec.base = train_config(parse_scale(g.scale), g.seed);
    auto res = run_sweep(spec, jobs);
    auto out = open_out(g, "sweep_" + std::string(to_string(spec.param)) + "_" + std::string(to_string(spec.scen.pde_class)) + ".csv");
    write_sweep_csv(res, out);
    for (const auto& r : res.rows)
        if (!r.error.empty()) std::cerr << "cell " << fmt(r.value) << " seed " << r.seed << " failed: " << r.error << '\n';
    std::cout << to_string(spec.param) << ",median_mse,median_wall_time\n";
    for (const auto& m : res.summary) std::cout << fmt(m.value) << ',' << fmt(m.median_mse) << ',' << fmt(m.median_wall_s) << '\n';
    return 0;
}

int cmd_es(const Globals& g, const std::string& pde, double t_end) {
    Scenario s = resolve_scenario(g, pde);
    if (t_end > 0) {
        s.grid.t_end = t_end;
        validate(s);
    }
    auto tr = run_closed_loop(make_wiring(s));
    auto out = open_out(g, "es_" + std::string(to_string(s.pde_class)) + ".csv");
    write_trace_csv(tr, out);
    auto sum = summarize_es(tr, s);
    std::cout << "es " << to_string(s.pde_class) << " window t >= " << fmt(sum.steady.window_start) << '\n'
              << "  mean |theta - Theta*| " << fmt(sum.mean_abs_theta) << "  order scale " << fmt(sum.theta_order) << '\n'
              << "  mean |Theta - Theta*| " << fmt(sum.steady.mean_abs_Theta) << "  order scale " << fmt(sum.Theta_order) << '\n'
              << "  mean |y - y*|         " << fmt(sum.steady.mean_abs_y) << "  order scale " << fmt(sum.y_order) << '\n'
              << "  mean |theta_hat - Theta*| " << fmt(sum.steady.mean_abs_theta_hat) << " from initial "
              << fmt(sum.initial_error) << '\n'
              << "  converged " << (sum.converged ? "true" : "false") << '\n';
    return 0;
}

int cmd_dither(const Globals& g, const std::string& pde, const std::string& method, std::string out_name) {
    Scenario s = resolve_scenario(g, pde);
    auto m = parse_dither_method(method);
    auto tab = dither_table(s, m, train_config(parse_scale(g.scale), g.seed));
    const std::string cls(to_string(s.pde_class));
    if (out_name.empty()) out_name = "dither_" + cls + "_" + method + ".csv";
    auto out = open_out(g, out_name);
    write_dither_csv(tab, out);
    double worst = 0, sq = 0;
    for (double e : tab.abs_err) {
        worst = std::max(worst, e);
        sq += e * e;
    }
    std::cout << "dither " << cls << " " << method << ": max_abs_err " << fmt(worst) << " mse "
              << fmt(sq / static_cast<double>(tab.abs_err.size())) << '\n';
    if (!tab.tail.empty()) {
        auto tail = open_out(g, "dither_" + cls + "_tail.csv");
        write_tail_csv(tab, tail);
        std::cout << "series tail: n=" << tab.tail.back().first << " " << fmt(tab.tail.back().second) << '\n';
    }
    return 0;
}

int cmd_pinn_train(const Globals& g, const std::string& pde, const std::string& mode, int iterations) {
    Scenario s = resolve_scenario(g, pde);
    TrainConfig cfg = train_config(parse_scale(g.scale), g.seed);
    if (iterations > 0) cfg.iterations = iterations;
    const std::string stem = "pinn_" + std::string(to_string(s.pde_class)) + "_" + mode;
    if (parse_train_mode(mode) == TrainMode::trajectory) {
        auto fit = fit_dither_pinn(s, cfg);
        auto h = open_out(g, stem + "_history.csv");
        write_history_csv(fit.trained, h);
        auto o = open_out(g, stem + "_S.csv");
        o << "t,S_learned,S_reference\n";
        for (std::size_t k = 0; k < fit.t.size(); ++k)
            o << fmt17(fit.t[k]) << ',' << fmt17(fit.learned[k]) << ',' << fmt17(fit.reference[k]) << '\n';
        std::cout << stem << ": final_loss " << fmt(fit.trained.final_loss.total) << " S mse " << fmt(fit.mse)
                  << " max_abs_err " << fmt(fit.max_abs) << '\n';
    } else {
        const double horizon = 2 * 3.141592653589793 / s.dither.frequency;
        auto tn = train(make_ibvp_problem(s, horizon), cfg);
        auto h = open_out(g, stem + "_history.csv");
        write_history_csv(tn, h);
        std::vector<Field> grid;
        for (int k = 0; k <= 50; ++k) {
            double t = horizon * k / 50;
            Field f(s.grid.n_x, tn.problem.right_end(t), 0.0, t);
            for (std::size_t j = 0; j < f.values.size(); ++j) f[j] = forward(tn.net, f.x(j), t);
            grid.push_back(std::move(f));
        }
        auto o = open_out(g, stem + "_field.csv");
        write_field_csv(grid, o);
        std::cout << stem << ": final_loss " << fmt(tn.final_loss.total) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PDE-compensated extremum seeking: solvers, dithers, learned trajectories and closed loops"};
    app.require_subcommand(1);
    Globals g;
    if (const char* env = std::getenv(out_dir_env)) g.out_dir = env;
    if (g.out_dir.empty()) g.out_dir = ".";
    app.add_option("--seed", g.seed, "training seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, std::string("output directory (default $") + out_dir_env + " or .)")
        ->capture_default_str();
    app.add_option("--scale", g.scale, "network scale: desk or paper")->capture_default_str();
    app.add_option("--scenario", g.scenario_path, "scenario JSON file");

    std::string pde, method = "analytic", mode = "trajectory", param = "lr", values = "0.008,0.001,0.0001", out_name;
    int snapshots = 51, seeds = 3, iterations = 0;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    double t_end = 0;

    auto* compare = app.add_subcommand("compare", "numerical vs learned IBVP with u(0,t) = sin(5wt)");
    compare->add_option("--pde", pde, "diffusion, rad, wave or stefan");
    compare->add_option("--snapshots", snapshots, "time snapshots in the emitted grids")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "learning-rate or batch-size sweep of the trajectory PINN");
    sweep->add_option("--pde", pde, "class (default transport)");
    sweep->add_option("--param", param, "lr or batch")->capture_default_str();
    sweep->add_option("--values", values, "comma-separated values")->capture_default_str();
    sweep->add_option("--seeds", seeds, "seeds per value")->capture_default_str();
    sweep->add_option("--jobs", jobs, "worker threads")->capture_default_str();

    auto* es = app.add_subcommand("es", "closed-loop extremum seeking run");
    es->add_option("--pde", pde, "class when no scenario file is given");
    es->add_option("--t-end", t_end, "override the horizon (s)");

    auto* dither = app.add_subcommand("dither", "dither signal over two periods against the closed form");
    dither->add_option("--pde", pde, "class");
    dither->add_option("--method", method, "analytic, numeric or pinn")->capture_default_str();
    dither->add_option("--out", out_name, "CSV name inside --out-dir");

    auto* pinn = app.add_subcommand("pinn-train", "train one network and write its loss history");
    pinn->add_option("--pde", pde, "class");
    pinn->add_option("--mode", mode, "trajectory or ibvp")->capture_default_str();
    pinn->add_option("--iterations", iterations, "override the iteration count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*compare) return cmd_compare(g, pde, snapshots);
        if (*sweep) return cmd_sweep(g, pde, param, values, seeds, jobs);
        if (*es) return cmd_es(g, pde, t_end);
        if (*dither) return cmd_dither(g, pde, method, out_name);
        if (*pinn) return cmd_pinn_train(g, pde, mode, iterations);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
