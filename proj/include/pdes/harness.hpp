#pragma once

#include "pdes/core.hpp"
#include "pdes/dither.hpp"
#include "pdes/pinn.hpp"
#include "pdes/simloop.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pdes {

enum class Scale { desk, paper };
Scale parse_scale(std::string_view s);
TrainConfig train_config(Scale scale, std::uint64_t seed);

/// Closed-form S(t) for the scenario's class (no measurement-delay shift).
double analytic_S(const Scenario& s, double t);

// ---------------------------------------------------------------------------
// Learned dither

struct DitherFit {
    TrainedNet trained;
    std::vector<double> t, reference, learned;
    double mse = 0.0, max_abs = 0.0;
};

/// Trains a trajectory-mode network and scores u(D, ·) against the closed form over one period.
DitherFit fit_dither_pinn(const Scenario& s, const TrainConfig& cfg, int n_eval = 400);

// ---------------------------------------------------------------------------
// Dither traces

struct DitherTable {
    std::vector<double> t, analytic, method, abs_err;
    /// Series classes only: (n, max over the table of |S_n − S_{n−1}|).
    std::vector<std::pair<int, double>> tail;
};

/// Two dither periods at 801 points. method = pinn trains with cfg.
DitherTable dither_table(const Scenario& s, DitherMethod method, const TrainConfig& cfg);
void write_dither_csv(const DitherTable& tab, std::ostream& out);  // t,S_analytic,S_method,abs_err
void write_tail_csv(const DitherTable& tab, std::ostream& out);    // n,tail

// ---------------------------------------------------------------------------
// Numerical vs learned IBVP

struct ComparisonReport {
    std::vector<Field> numerical, learned, error;  // congruent snapshot grids
    double max_err = 0.0, mean_err = 0.0;
    LossTerms final_loss;
};

/// Zero initial state, u(0,t) = sin(5ωt), u = 0 at the far end, over one base dither period.
/// The finite-difference reference uses s.grid.n_x cells.
std::vector<Field> solve_ibvp_numeric(const Scenario& s, double horizon, int n_snapshots);
ComparisonReport run_compare(const Scenario& s, const TrainConfig& cfg, int n_snapshots = 51);

// ---------------------------------------------------------------------------
// Hyperparameter sweeps

enum class SweepParam { learning_rate, batch };
SweepParam parse_sweep_param(std::string_view s);
std::string_view to_string(SweepParam p);

struct SweepSpec {
    SweepParam param = SweepParam::learning_rate;
    std::vector<double> values;
    int seeds = 3;
    TrainConfig base;
    Scenario scen;
};
void validate(const SweepSpec& spec);

struct SweepRow {
    double value = 0.0;
    std::uint64_t seed = 0;
    double mse = 0.0;  // NaN when the cell failed
    double wall_s = 0.0;
    std::string error;
};

struct SweepSummary {
    double value, median_mse, median_wall_s;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // value-major, seed-minor, independent of scheduling
    std::vector<SweepSummary> summary;
};

/// Fans cells out over `jobs` threads; each cell trains with seed base.seed + k.
SweepResult run_sweep(const SweepSpec& spec, unsigned jobs);
void write_sweep_csv(const SweepResult& res, std::ostream& out);  // value,seed,mse,wall_time

/// Median of the finite entries; NaN if none.
double median(std::vector<double> v);

// ---------------------------------------------------------------------------
// Closed-loop summary

struct EsSummary {
    SteadyState steady;
    double mean_abs_theta = 0.0;  // |θ − Θ*| over the window
    double initial_error = 0.0;   // |θ̂(0) − Θ*|
    // Scales of the asymptotic orders: |S|max + 1/ω, a + 1/ω, a² + 1/ω².
    double theta_order = 0.0, Theta_order = 0.0, y_order = 0.0;
    bool converged = false;  // window |θ̂ − Θ*| below a tenth of the initial error
};

EsSummary summarize_es(const SimTrace& tr, const Scenario& s);

}  // namespace pdes
