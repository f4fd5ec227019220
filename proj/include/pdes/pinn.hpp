#pragma once

#include "pdes/core.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace pdes {

// ---------------------------------------------------------------------------
// Network

/// Axis-aligned (x, t) box mapped affinely onto [−1, 1]² before the first layer.
struct InputBox {
    double x_lo = 0.0, x_hi = 1.0, t_lo = 0.0, t_hi = 1.0;
    double sx() const { return 2.0 / (x_hi - x_lo); }
    double st() const { return 2.0 / (t_hi - t_lo); }
};

/// tanh MLP. widths = {2, hidden..., 1}; parameters stored layer by layer as W (row-major, out × in) then b.
struct Net {
    std::vector<int> widths;
    std::vector<double> params;
    InputBox box;
    double out_scale = 1.0;  // u = out_scale · N(x̃, t̃)

    std::size_t n_layers() const { return widths.size() - 1; }
    std::size_t weight_offset(std::size_t layer) const;
    std::size_t bias_offset(std::size_t layer) const;
};

/// Glorot-uniform weights and zero biases from Rng(seed, stream::init).
Net make_net(const std::vector<int>& widths, const InputBox& box, double out_scale, std::uint64_t seed);

struct NetEval {
    double u = 0, u_x = 0, u_t = 0, u_xx = 0, u_tt = 0;
};

/// Exact input derivatives by propagating first and second directional derivatives through every layer.
NetEval forward_with_derivatives(const Net& net, double x, double t);
double forward(const Net& net, double x, double t);

/// Weights on (u, u_x, u_t, u_xx, u_tt) of a scalar function of one evaluation.
using OutputAdjoint = NetEval;

/// Reusable buffers for forward + reverse passes.
class NetWorkspace {
public:
    explicit NetWorkspace(const Net& net);
    /// Forward pass keeping every intermediate; returns the physical outputs.
    NetEval forward(const Net& net, double x, double t, bool second_order);
    /// Adds d(adj · outputs)/dθ of the last forward() into grad.
    void backward(const Net& net, const OutputAdjoint& adj, std::vector<double>& grad);

private:
    static constexpr int n_ch = 5;  // value, ∂x, ∂t, ∂xx, ∂tt w.r.t. normalized inputs
    std::vector<std::vector<double>> z_, a_;  // per layer, n_ch × width
    std::vector<double> gz_, ga_, ga_prev_;
    bool second_ = true;
};

// ---------------------------------------------------------------------------
// Problems and losses

enum class TrainMode { trajectory, ibvp };
std::string_view to_string(TrainMode m);
TrainMode parse_train_mode(std::string_view s);

/// Trajectory mode: interior residual plus u(0,t) = a sin ωt and (second-order classes) u_x(0,t) = 0.
/// IBVP mode: zero initial state, u(0,t) = sin(5ωt), u = 0 at the far end.
struct PinnProblem {
    PdeClass pde_class = PdeClass::diffusion;
    TrainMode mode = TrainMode::trajectory;
    double a = 0.2, omega = 10.0, D = 1.0;
    RadParams rad;
    StefanParams stefan;
    double t_lo = 0.0, t_hi = 1.0;  // training time window

    double right_end(double t) const;  // D, or s(t) for Stefan
    double left_value(double t) const;
    bool left_flux_condition() const;  // trajectory mode, second-order in x
    InputBox box() const;
    double output_scale() const;
};

/// margin pads the window [0, 2π/ω] on both sides; transport adds D at the top (characteristics reach x = D later).
PinnProblem make_trajectory_problem(const Scenario& s, double margin);
PinnProblem make_ibvp_problem(const Scenario& s, double horizon);

struct SpaceTimePoint {
    double x, t;
};

enum class Condition { value, flux, rate };  // u, u_x or u_t equals target
struct TargetPoint {
    double x, t, target;
    Condition kind = Condition::value;
};

struct CollocationSet {
    std::vector<SpaceTimePoint> residual;
    std::vector<TargetPoint> boundary, initial, data;
};

/// Uniform i.i.d. samples inside the problem's space-time box (Stefan: x ≤ s(t)).
CollocationSet sample_collocation(const PinnProblem& p, int n_residual, int n_bc, int n_ic, Rng& rng);

struct LossWeights {
    double pde = 1.0, bc = 1.0, ic = 1.0, data = 1.0;
};

struct LossTerms {
    double total = 0, pde = 0, bc = 0, ic = 0, data = 0;
};

/// Coefficients of the residual as a combination of (u, u_x, u_t, u_xx, u_tt).
OutputAdjoint residual_operator(const PinnProblem& p);

/// Mean-squared terms; throws ValidationError when the residual or boundary set is empty.
LossTerms loss(const Net& net, const CollocationSet& pts, const PinnProblem& p, const LossWeights& w = {});
/// Same terms plus the parameter gradient of the weighted total.
LossTerms loss_and_gradient(const Net& net, const CollocationSet& pts, const PinnProblem& p, const LossWeights& w,
                            NetWorkspace& ws, std::vector<double>& grad);

// ---------------------------------------------------------------------------
// Optimizer and training

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

AdamState make_adam(const Net& net);
/// Bias-corrected Adam update; throws DivergenceError on a non-finite gradient entry.
void adam_step(Net& net, const std::vector<double>& grad, AdamState& st, double lr);

struct TrainConfig {
    std::vector<int> hidden{32, 32, 32};
    double learning_rate = 1e-3;
    int iterations = 5000;
    int batch = 128;
    int n_residual = 2000;
    int n_bc = 2000;
    int n_ic = 2000;
    int n_data = 0;
    std::uint64_t seed = 42;
    LossWeights weights;
    double time_margin = 0.2;
    int log_every = 50;

    static TrainConfig desk();
    static TrainConfig paper();
};

void validate(const TrainConfig& cfg);

struct HistoryRow {
    long step;
    LossTerms loss;
};

struct TrainedNet {
    Net net;
    PinnProblem problem;
    LossTerms final_loss;
    std::vector<HistoryRow> history;
};

/// Mini-batch Adam over fixed pools of collocation points. Throws DivergenceError if the loss exceeds 1e6.
/// Optional data points enter L_data with the configured weight.
TrainedNet train(const PinnProblem& p, const TrainConfig& cfg, const std::vector<TargetPoint>& data = {});

/// u(D, t), or u(s(t), t) for Stefan.
std::vector<double> extract_S(const TrainedNet& tn, const std::vector<double>& t_grid);
std::vector<double> evaluate_at(const TrainedNet& tn, double x, const std::vector<double>& t_grid);

double mse(const std::vector<double>& pred, const std::vector<double>& ref);

void write_history_csv(const TrainedNet& tn, std::ostream& out);

}  // namespace pdes
