#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pdes {

// ---------------------------------------------------------------------------
// Errors. Each family maps to one CLI exit code.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Bad input: malformed document, violated invariant, unsupported combination.
struct ValidationError : Error {
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Non-finite state, domain collapse, truncation overflow.
struct NumericalError : Error {
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// PINN training blew up.
struct DivergenceError : Error {
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

/// Requested method has no well-posed construction for this class.
struct UnsupportedMethod : ValidationError {
    using ValidationError::ValidationError;
};

// ---------------------------------------------------------------------------
// Scenario

enum class PdeClass { diffusion, rad, transport, wave, stefan, distributed_delay };
enum class DitherMethod { analytic, numeric, pinn };
enum class MeasureKind { point_mass, uniform };
enum class DiffusionLaw { measured, full_state };
enum class WaveLaw { predictor, reduced };

std::string_view to_string(PdeClass c);
std::string_view to_string(DitherMethod m);
std::string_view to_string(MeasureKind m);
PdeClass parse_pde_class(std::string_view s);
DitherMethod parse_dither_method(std::string_view s);
MeasureKind parse_measure(std::string_view s);

struct MapParams {
    double hessian = -2.0;
    double optimizer = 2.0;
    double optimum = 5.0;
};

struct DitherParams {
    double amplitude = 0.2;
    double frequency = 10.0;
    double gamma = 1.0;       // distributed-delay normalization
    bool gamma_auto = false;  // gamma = |∫ e^{iωσ} dβ(σ)|²
    MeasureKind measure = MeasureKind::uniform;
    int rad_terms = 10;
    int stefan_terms = 6;
    /// Empty means the per-class default (see default_dither_method).
    std::string method;
};

struct ControllerParams {
    double filter_corner = 10.0;  // c
    double gain = 0.2;            // K
    double theta_hat0 = 0.0;
    double washout = 5.0;         // high-pass corner on y, 0 disables
    double hessian_filter = 1.0;  // low-pass corner on Ĥ, 0 disables
    double wave_damping = 1.0;    // boundary-velocity damping for the wave actuator
    DiffusionLaw diffusion_law = DiffusionLaw::measured;
    WaveLaw wave_law = WaveLaw::predictor;
    std::vector<double> wave_rho;  // sampled ρ(σ) on [0, D]; empty means ρ ≡ 0
};

struct RadParams {
    double epsilon = 1.0;
    double advection = 0.0;
    double reaction = 0.0;
};

struct StefanParams {
    double k_t = 1.0;
    double k_b = 0.005;
    double floor = 1e-3;  // smallest admissible s(t)
};

struct GridParams {
    int n_x = 128;
    double dt = 1e-3;
    double t_end = 100.0;
};

struct Scenario {
    PdeClass pde_class = PdeClass::diffusion;
    double domain_length = 1.0;
    MapParams map;
    DitherParams dither;
    ControllerParams controller;
    RadParams rad;
    StefanParams stefan;
    double delay = 0.0;  // measurement delay D_t
    GridParams grid;
    std::uint64_t seed = 42;
};

/// Throws ValidationError naming the first violated invariant.
void validate(const Scenario& s);

/// Parses a JSON document. Unknown keys are rejected at every level.
Scenario load_scenario(std::string_view text);
Scenario load_scenario_file(const std::string& path);
std::string scenario_to_json(const Scenario& s);

DitherMethod default_dither_method(PdeClass c);
DitherMethod dither_method(const Scenario& s);

/// Transport/distributed plants delay the actuation by D; the others by 0.
bool is_hyperbolic(PdeClass c);

/// Number of dt steps in a span, throwing if span/dt is not an integer.
long steps_in(double span, double dt, std::string_view what);

// ---------------------------------------------------------------------------
// Field and trace

struct Field {
    std::vector<double> values;
    double x0 = 0.0;
    double dx = 1.0;
    double t = 0.0;

    Field() = default;
    Field(int n_cells, double length, double value = 0.0, double time = 0.0)
        : values(static_cast<std::size_t>(n_cells) + 1, value), dx(length / n_cells), t(time) {}

    int n_cells() const { return static_cast<int>(values.size()) - 1; }
    double x(std::size_t j) const { return x0 + dx * static_cast<double>(j); }
    double length() const { return dx * n_cells(); }
    double& operator[](std::size_t j) { return values[j]; }
    double operator[](std::size_t j) const { return values[j]; }
};

/// Composite trapezoid over a uniform grid.
double trapezoid(const std::vector<double>& f, double h);
/// ∫₀^L k(x) f(x) dx on the field's grid.
template <class Kernel>
double kernel_integral(const Field& f, Kernel&& k) {
    const auto n = f.values.size();
    if (n < 2) throw NumericalError("quadrature needs at least 2 nodes");
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double w = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
        acc += w * k(f.x(j)) * f.values[j];
    }
    return acc * f.dx;
}

void require_finite(const Field& f, std::string_view who);

struct TraceRow {
    double t, theta, Theta, y, U, S, Hhat, G;
    bool operator==(const TraceRow&) const = default;
};

struct SimTrace {
    std::vector<TraceRow> rows;
    std::vector<Field> snapshots;
};

void write_trace_csv(const SimTrace& trace, std::ostream& out);
SimTrace parse_trace_csv(std::istream& in);
/// Header `x,t,value`, rows grouped by snapshot time.
void write_field_csv(const std::vector<Field>& snaps, std::ostream& out);

/// 17 significant digits: enough for bit-exact round trips.
std::string fmt17(double v);

// ---------------------------------------------------------------------------
// Counter-based RNG. Same (seed, stream, counter) → same draw on any thread.

namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t collocation = 2;
inline constexpr std::uint64_t batch = 3;
inline constexpr std::uint64_t test = 99;
}  // namespace stream

class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream_id) : key_(mix(seed ^ mix(stream_id + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
    std::uint64_t counter() const { return counter_; }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace pdes
