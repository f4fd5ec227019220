#include "pdes/pinn.hpp"

#include "pdes/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace pdes {

std::size_t Net::weight_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
        off += static_cast<std::size_t>(widths[l] + 1) * static_cast<std::size_t>(widths[l + 1]);
    return off;
}

std::size_t Net::bias_offset(std::size_t layer) const {
    return weight_offset(layer) + static_cast<std::size_t>(widths[layer]) * static_cast<std::size_t>(widths[layer + 1]);
}

Net make_net(const std::vector<int>& widths, const InputBox& box, double out_scale, std::uint64_t seed) {
    if (widths.size() < 2 || widths.front() != 2 || widths.back() != 1)
        throw ValidationError("net: widths must start with 2 inputs and end with 1 output");
    for (int w : widths)
        if (w < 1) throw ValidationError("net: every layer width ≥ 1 required");
    if (!(box.x_hi > box.x_lo) || !(box.t_hi > box.t_lo)) throw ValidationError("net: empty input box");
    Net net{widths, {}, box, out_scale};
    net.params.assign(net.weight_offset(net.n_layers()), 0.0);
    Rng rng(seed, stream::init);
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        const int nin = widths[l], nout = widths[l + 1];
        const double bound = std::sqrt(6.0 / (nin + nout));
        double* W = net.params.data() + net.weight_offset(l);
        for (int k = 0; k < nin * nout; ++k) W[k] = rng.uniform(-bound, bound);
    }
    return net;
}

NetWorkspace::NetWorkspace(const Net& net) : z_(net.widths.size()), a_(net.widths.size()) {
    int widest = 0;
    for (std::size_t l = 0; l < net.widths.size(); ++l) {
        z_[l].assign(static_cast<std::size_t>(n_ch * net.widths[l]), 0.0);
        a_[l].assign(static_cast<std::size_t>(n_ch * net.widths[l]), 0.0);
        widest = std::max(widest, net.widths[l]);
    }
    gz_.assign(static_cast<std::size_t>(n_ch * widest), 0.0);
    ga_.assign(static_cast<std::size_t>(n_ch * widest), 0.0);
    ga_prev_.assign(static_cast<std::size_t>(n_ch * widest), 0.0);
}

NetEval NetWorkspace::forward(const Net& net, double x, double t, bool second_order) {
    second_ = second_order;
    const int nc = second_order ? n_ch : 3;
    const std::size_t L = net.n_layers();
    auto& in = a_[0];
    std::fill(in.begin(), in.end(), 0.0);
    in[0] = (x - net.box.x_lo) * net.box.sx() - 1.0;
    in[1] = (t - net.box.t_lo) * net.box.st() - 1.0;
    in[2 + 0] = 1.0;  // ∂x̃ of x̃
    in[4 + 1] = 1.0;  // ∂t̃ of t̃

    for (std::size_t l = 0; l < L; ++l) {
        const int nin = net.widths[l], nout = net.widths[l + 1];
        const double* W = net.params.data() + net.weight_offset(l);
        const double* b = net.params.data() + net.bias_offset(l);
        const auto& prev = a_[l];
        auto& z = z_[l + 1];
        for (int j = 0; j < nout; ++j) {
            const double* row = W + static_cast<std::ptrdiff_t>(j) * nin;
            for (int c = 0; c < nc; ++c) {
                const double* src = prev.data() + static_cast<std::ptrdiff_t>(c) * nin;
                double s = c == 0 ? b[j] : 0.0;
                for (int i = 0; i < nin; ++i) s += row[i] * src[i];
                z[static_cast<std::size_t>(c * nout + j)] = s;
            }
        }
        auto& a = a_[l + 1];
        if (l + 1 == L) {
            std::copy(z.begin(), z.begin() + nc * nout, a.begin());
            break;
        }
        for (int j = 0; j < nout; ++j) {
            const double v = std::tanh(z[static_cast<std::size_t>(j)]);
            const double d1 = 1.0 - v * v, d2 = -2.0 * v * d1;
            const double z1 = z[static_cast<std::size_t>(nout + j)], z2 = z[static_cast<std::size_t>(2 * nout + j)];
            a[static_cast<std::size_t>(j)] = v;
            a[static_cast<std::size_t>(nout + j)] = d1 * z1;
            a[static_cast<std::size_t>(2 * nout + j)] = d1 * z2;
            if (second_order) {
                a[static_cast<std::size_t>(3 * nout + j)] = d2 * z1 * z1 + d1 * z[static_cast<std::size_t>(3 * nout + j)];
                a[static_cast<std::size_t>(4 * nout + j)] = d2 * z2 * z2 + d1 * z[static_cast<std::size_t>(4 * nout + j)];
            }
        }
    }
    const auto& out = a_[L];
    const double os = net.out_scale, sx = net.box.sx(), st = net.box.st();
    NetEval e;
    e.u = os * out[0];
    e.u_x = os * sx * out[1];
    e.u_t = os * st * out[2];
    if (second_order) {
        e.u_xx = os * sx * sx * out[3];
        e.u_tt = os * st * st * out[4];
    }
    return e;
}

void NetWorkspace::backward(const Net& net, const OutputAdjoint& adj, std::vector<double>& grad) {
    const int nc = second_ ? n_ch : 3;
    const std::size_t L = net.n_layers();
    const double os = net.out_scale, sx = net.box.sx(), st = net.box.st();
    gz_[0] = os * adj.u;
    gz_[1] = os * sx * adj.u_x;
    gz_[2] = os * st * adj.u_t;
    gz_[3] = second_ ? os * sx * sx * adj.u_xx : 0.0;
    gz_[4] = second_ ? os * st * st * adj.u_tt : 0.0;

    for (std::size_t l = L; l-- > 0;) {
        const int nin = net.widths[l], nout = net.widths[l + 1];
        const double* W = net.params.data() + net.weight_offset(l);
        double* gW = grad.data() + net.weight_offset(l);
        double* gb = grad.data() + net.bias_offset(l);
        const auto& prev = a_[l];
        for (int j = 0; j < nout; ++j) {
            double* grow = gW + static_cast<std::ptrdiff_t>(j) * nin;
            gb[j] += gz_[static_cast<std::size_t>(j)];
            for (int c = 0; c < nc; ++c) {
                const double g = gz_[static_cast<std::size_t>(c * nout + j)];
                if (g == 0.0) continue;
                const double* src = prev.data() + static_cast<std::ptrdiff_t>(c) * nin;
                for (int i = 0; i < nin; ++i) grow[i] += g * src[i];
            }
        }
        if (l == 0) break;

        // adjoint of the previous activations
        std::fill(ga_.begin(), ga_.begin() + n_ch * nin, 0.0);
        for (int j = 0; j < nout; ++j) {
            const double* row = W + static_cast<std::ptrdiff_t>(j) * nin;
            for (int c = 0; c < nc; ++c) {
                const double g = gz_[static_cast<std::size_t>(c * nout + j)];
                if (g == 0.0) continue;
                double* dst = ga_.data() + static_cast<std::ptrdiff_t>(c) * nin;
                for (int i = 0; i < nin; ++i) dst[i] += g * row[i];
            }
        }
        // through tanh of layer l−1 (pre-activation z_[l], activation a_[l])
        const auto& z = z_[l];
        const auto& a = a_[l];
        const int n = nin;
        for (int j = 0; j < n; ++j) {
            const auto u = static_cast<std::size_t>(j), w = static_cast<std::size_t>(n);
            const double v = a[u];
            const double d1 = 1.0 - v * v, d2 = -2.0 * v * d1, d3 = -2.0 * d1 * d1 + 4.0 * v * v * d1;
            const double A0 = ga_[u], A1 = ga_[w + u], A2 = ga_[2 * w + u];
            const double z1 = z[w + u], z2 = z[2 * w + u];
            double Z0 = A0 * d1 + d2 * (A1 * z1 + A2 * z2);
            double Z1 = A1 * d1, Z2 = A2 * d1;
            if (second_) {
                const double A3 = ga_[3 * w + u], A4 = ga_[4 * w + u];
                const double z3 = z[3 * w + u], z4 = z[4 * w + u];
                Z0 += d2 * (A3 * z3 + A4 * z4) + d3 * (A3 * z1 * z1 + A4 * z2 * z2);
                Z1 += 2.0 * A3 * d2 * z1;
                Z2 += 2.0 * A4 * d2 * z2;
                gz_[3 * w + u] = A3 * d1;
                gz_[4 * w + u] = A4 * d1;
            }
            gz_[u] = Z0;
            gz_[w + u] = Z1;
            gz_[2 * w + u] = Z2;
        }
    }
}

NetEval forward_with_derivatives(const Net& net, double x, double t) {
    NetWorkspace ws(net);
    return ws.forward(net, x, t, true);
}

double forward(const Net& net, double x, double t) {
    NetWorkspace ws(net);
    return ws.forward(net, x, t, false).u;
}

// ---------------------------------------------------------------------------
// Problems

std::string_view to_string(TrainMode m) { return m == TrainMode::trajectory ? "trajectory" : "ibvp"; }

TrainMode parse_train_mode(std::string_view s) {
    if (s == "trajectory") return TrainMode::trajectory;
    if (s == "ibvp") return TrainMode::ibvp;
    throw ValidationError("mode: unknown '" + std::string(s) + "'; expected trajectory or ibvp");
}

double PinnProblem::right_end(double t) const {
    return pde_class == PdeClass::stefan ? stefan_boundary(stefan, t) : D;
}

double PinnProblem::left_value(double t) const {
    return mode == TrainMode::trajectory ? a * std::sin(omega * t) : std::sin(5 * omega * t);
}

bool PinnProblem::left_flux_condition() const {
    return mode == TrainMode::trajectory && pde_class != PdeClass::transport;
}

InputBox PinnProblem::box() const {
    // s(t) decreases, so the widest slice is at the earliest time
    return {0.0, right_end(t_lo), t_lo, t_hi};
}

double PinnProblem::output_scale() const { return mode == TrainMode::trajectory ? a : 1.0; }

namespace {

PinnProblem base_problem(const Scenario& s) {
    if (s.pde_class == PdeClass::distributed_delay)
        throw UnsupportedMethod("pinn: distributed_delay has no PDE to fit; use the analytic or numeric dither");
    PinnProblem p;
    p.pde_class = s.pde_class;
    p.a = s.dither.amplitude;
    p.omega = s.dither.frequency;
    p.D = s.domain_length;
    p.rad = s.rad;
    p.stefan = s.stefan;
    return p;
}

}  // namespace

PinnProblem make_trajectory_problem(const Scenario& s, double margin) {
    PinnProblem p = base_problem(s);
    const double period = 2 * std::numbers::pi / p.omega;
    p.mode = TrainMode::trajectory;
    p.t_lo = -margin;
    p.t_hi = period + margin;
    if (p.pde_class == PdeClass::transport) p.t_hi += p.D;
    if (p.pde_class == PdeClass::wave) {
        p.t_lo -= p.D;
        p.t_hi += p.D;
    }
    return p;
}

PinnProblem make_ibvp_problem(const Scenario& s, double horizon) {
    PinnProblem p = base_problem(s);
    if (p.pde_class == PdeClass::transport)
        throw UnsupportedMethod("pinn: the transport IBVP is ill-posed with data at x = 0 (outflow end); use trajectory mode");
    if (!(horizon > 0)) throw ValidationError("pinn: horizon > 0 required");
    p.mode = TrainMode::ibvp;
    p.t_lo = 0.0;
    p.t_hi = horizon;
    return p;
}

CollocationSet sample_collocation(const PinnProblem& p, int n_residual, int n_bc, int n_ic, Rng& rng) {
    CollocationSet set;
    set.residual.reserve(static_cast<std::size_t>(n_residual));
    for (int i = 0; i < n_residual; ++i) {
        double t = rng.uniform(p.t_lo, p.t_hi);
        set.residual.push_back({rng.uniform(0.0, p.right_end(t)), t});
    }
    for (int i = 0; i < n_bc; ++i) {
        double t = rng.uniform(p.t_lo, p.t_hi);
        if (p.mode == TrainMode::trajectory) {
            set.boundary.push_back({0.0, t, p.left_value(t), Condition::value});
            if (p.left_flux_condition()) set.boundary.push_back({0.0, t, 0.0, Condition::flux});
        } else if (i % 2 == 0) {
            set.boundary.push_back({0.0, t, p.left_value(t), Condition::value});
        } else {
            set.boundary.push_back({p.right_end(t), t, 0.0, Condition::value});
        }
    }
    if (p.mode == TrainMode::ibvp) {
        for (int i = 0; i < n_ic; ++i) {
            double x = rng.uniform(0.0, p.right_end(p.t_lo));
            bool rate = p.pde_class == PdeClass::wave && i % 2 == 1;
            set.initial.push_back({x, p.t_lo, 0.0, rate ? Condition::rate : Condition::value});
        }
    }
    return set;
}

OutputAdjoint residual_operator(const PinnProblem& p) {
    switch (p.pde_class) {
        case PdeClass::diffusion:
        case PdeClass::stefan: return {0, 0, 1, -1, 0};
        case PdeClass::rad: return {-p.rad.reaction, -p.rad.advection, 1, -p.rad.epsilon, 0};
        case PdeClass::transport: return {0, -1, 1, 0, 0};
        case PdeClass::wave: return {0, 0, 0, -1, 1};
        case PdeClass::distributed_delay: break;
    }
    throw UnsupportedMethod("pinn: no residual operator for distributed_delay");
}

namespace {

double apply(const OutputAdjoint& c, const NetEval& e) {
    return c.u * e.u + c.u_x * e.u_x + c.u_t * e.u_t + c.u_xx * e.u_xx + c.u_tt * e.u_tt;
}

OutputAdjoint scaled(const OutputAdjoint& c, double k) {
    return {k * c.u, k * c.u_x, k * c.u_t, k * c.u_xx, k * c.u_tt};
}

OutputAdjoint selector(Condition kind) {
    switch (kind) {
        case Condition::value: return {1, 0, 0, 0, 0};
        case Condition::flux: return {0, 1, 0, 0, 0};
        case Condition::rate: return {0, 0, 1, 0, 0};
    }
    return {};
}

bool needs_second_order(const OutputAdjoint& c) { return c.u_xx != 0.0 || c.u_tt != 0.0; }

struct Accumulator {
    NetWorkspace* ws;
    std::vector<double>* grad;
    const Net* net;

    double residual_term(const std::vector<SpaceTimePoint>& pts, const OutputAdjoint& op, double weight) {
        if (pts.empty()) return 0.0;
        const double inv = 1.0 / static_cast<double>(pts.size());
        const bool second = needs_second_order(op);
        double acc = 0.0;
        for (const auto& q : pts) {
            NetEval e = ws->forward(*net, q.x, q.t, second);
            double r = apply(op, e);
            acc += r * r;
            if (grad) ws->backward(*net, scaled(op, 2.0 * weight * r * inv), *grad);
        }
        return acc * inv;
    }

    double target_term(const std::vector<TargetPoint>& pts, double weight) {
        if (pts.empty()) return 0.0;
        const double inv = 1.0 / static_cast<double>(pts.size());
        double acc = 0.0;
        for (const auto& q : pts) {
            const auto sel = selector(q.kind);
            NetEval e = ws->forward(*net, q.x, q.t, false);
            double r = apply(sel, e) - q.target;
            acc += r * r;
            if (grad) ws->backward(*net, scaled(sel, 2.0 * weight * r * inv), *grad);
        }
        return acc * inv;
    }
};

LossTerms assemble(const Net& net, const CollocationSet& pts, const PinnProblem& p, const LossWeights& w,
                   NetWorkspace& ws, std::vector<double>* grad) {
    if (pts.residual.empty()) throw ValidationError("loss: residual point set is empty");
    if (pts.boundary.empty()) throw ValidationError("loss: boundary point set is empty");
    if (grad) grad->assign(net.params.size(), 0.0);
    Accumulator acc{&ws, grad, &net};
    LossTerms t;
    t.pde = acc.residual_term(pts.residual, residual_operator(p), w.pde);
    t.bc = acc.target_term(pts.boundary, w.bc);
    t.ic = acc.target_term(pts.initial, w.ic);
    t.data = acc.target_term(pts.data, w.data);
    t.total = w.pde * t.pde + w.bc * t.bc + w.ic * t.ic + w.data * t.data;
    return t;
}

}  // namespace

LossTerms loss(const Net& net, const CollocationSet& pts, const PinnProblem& p, const LossWeights& w) {
    NetWorkspace ws(net);
    return assemble(net, pts, p, w, ws, nullptr);
}

LossTerms loss_and_gradient(const Net& net, const CollocationSet& pts, const PinnProblem& p, const LossWeights& w,
                            NetWorkspace& ws, std::vector<double>& grad) {
    return assemble(net, pts, p, w, ws, &grad);
}

// ---------------------------------------------------------------------------
// Adam

AdamState make_adam(const Net& net) {
    AdamState st;
    st.m.assign(net.params.size(), 0.0);
    st.v.assign(net.params.size(), 0.0);
    return st;
}

void adam_step(Net& net, const std::vector<double>& grad, AdamState& st, double lr) {
    if (grad.size() != net.params.size() || st.m.size() != net.params.size())
        throw ValidationError("adam: gradient shape does not match the network");
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw DivergenceError("adam: non-finite gradient at parameter " + std::to_string(i) + " (step " +
                                  std::to_string(st.step + 1) + ")");
    ++st.step;
    const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double g = grad[i];
        st.m[i] = st.beta1 * st.m[i] + (1 - st.beta1) * g;
        st.v[i] = st.beta2 * st.v[i] + (1 - st.beta2) * g * g;
        net.params[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + st.eps);
    }
}

// ---------------------------------------------------------------------------
// Training

TrainConfig TrainConfig::desk() { return {}; }

TrainConfig TrainConfig::paper() {
    TrainConfig c;
    c.hidden.assign(5, 100);
    c.learning_rate = 1e-3;
    c.iterations = 40000;
    c.n_residual = 10000;
    c.n_bc = 10000;
    c.n_ic = 10000;
    return c;
}

void validate(const TrainConfig& cfg) {
    auto check = [](bool ok, const char* msg) {
        if (!ok) throw ValidationError(msg);
    };
    check(!cfg.hidden.empty(), "train: at least one hidden layer required");
    for (int h : cfg.hidden) check(h >= 1, "train: hidden widths ≥ 1 required");
    check(cfg.learning_rate > 0 && std::isfinite(cfg.learning_rate), "train: learning rate η > 0 violated");
    check(cfg.iterations >= 1, "train: iterations ≥ 1 violated");
    check(cfg.batch >= 1, "train: batch ≥ 1 violated");
    check(cfg.n_residual >= 1 && cfg.n_bc >= 1 && cfg.n_ic >= 1, "train: point counts N, N_BC, N_IC ≥ 1 violated");
    check(cfg.n_data >= 0, "train: N_u ≥ 0 violated");
    check(cfg.time_margin >= 0, "train: time margin ≥ 0 violated");
    check(cfg.log_every >= 1, "train: log interval ≥ 1 violated");
}

namespace {

template <class T>
void draw_batch(const std::vector<T>& pool, int batch, Rng& rng, std::vector<T>& out) {
    out.clear();
    if (pool.empty()) return;
    for (int i = 0; i < batch; ++i) out.push_back(pool[rng.index(pool.size())]);
}

}  // namespace

TrainedNet train(const PinnProblem& p, const TrainConfig& cfg, const std::vector<TargetPoint>& data) {
    validate(cfg);
    std::vector<int> widths{2};
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(1);

    TrainedNet tn{make_net(widths, p.box(), p.output_scale(), cfg.seed), p, {}, {}};
    Rng pool_rng(cfg.seed, stream::collocation);
    CollocationSet pool = sample_collocation(p, cfg.n_residual, cfg.n_bc, cfg.n_ic, pool_rng);
    pool.data = data;

    Rng batch_rng(cfg.seed, stream::batch);
    NetWorkspace ws(tn.net);
    AdamState adam = make_adam(tn.net);
    std::vector<double> grad;
    CollocationSet batch;
    for (long step = 0; step < cfg.iterations; ++step) {
        draw_batch(pool.residual, cfg.batch, batch_rng, batch.residual);
        draw_batch(pool.boundary, cfg.batch, batch_rng, batch.boundary);
        draw_batch(pool.initial, cfg.batch, batch_rng, batch.initial);
        draw_batch(pool.data, cfg.batch, batch_rng, batch.data);
        LossTerms lt = loss_and_gradient(tn.net, batch, p, cfg.weights, ws, grad);
        if (!std::isfinite(lt.total) || lt.total > 1e6) {
            tn.history.push_back({step, lt});
            throw DivergenceError("training diverged at step " + std::to_string(step) + " (loss " + fmt17(lt.total) + ")");
        }
        if (step % cfg.log_every == 0) tn.history.push_back({step, lt});
        adam_step(tn.net, grad, adam, cfg.learning_rate);
    }
    tn.final_loss = assemble(tn.net, pool, p, cfg.weights, ws, nullptr);
    tn.history.push_back({cfg.iterations, tn.final_loss});
    if (!std::isfinite(tn.final_loss.total)) throw DivergenceError("training ended with a non-finite loss");
    return tn;
}

std::vector<double> evaluate_at(const TrainedNet& tn, double x, const std::vector<double>& t_grid) {
    NetWorkspace ws(tn.net);
    std::vector<double> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) out.push_back(ws.forward(tn.net, x, t, false).u);
    return out;
}

std::vector<double> extract_S(const TrainedNet& tn, const std::vector<double>& t_grid) {
    NetWorkspace ws(tn.net);
    std::vector<double> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) out.push_back(ws.forward(tn.net, tn.problem.right_end(t), t, false).u);
    return out;
}

double mse(const std::vector<double>& pred, const std::vector<double>& ref) {
    if (pred.size() != ref.size()) throw ValidationError("mse: length mismatch");
    if (pred.empty()) throw ValidationError("mse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - ref[i]) * (pred[i] - ref[i]);
    return acc / static_cast<double>(pred.size());
}

void write_history_csv(const TrainedNet& tn, std::ostream& out) {
    out << "step,total,pde,bc,ic,data\n";
    for (const auto& h : tn.history)
        out << h.step << ',' << fmt17(h.loss.total) << ',' << fmt17(h.loss.pde) << ',' << fmt17(h.loss.bc) << ','
            << fmt17(h.loss.ic) << ',' << fmt17(h.loss.data) << '\n';
}

}  // namespace pdes
