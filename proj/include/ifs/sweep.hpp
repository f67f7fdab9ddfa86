#pragma once

#include "ifs/dimension.hpp"
#include "ifs/measure.hpp"
#include "ifs/symbolic.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifs {

enum class SweepParameter { Lambda, Theta, Both };
enum class Quantity { Integral, BowenDimension, MeasureDimension, Pressure };
enum class Engine { Depth, Chaos };

const char* to_string(SweepParameter p);
const char* to_string(Quantity q);
const char* to_string(Engine e);
SweepParameter parse_sweep_parameter(std::string_view s);
Quantity parse_quantity(std::string_view s);

struct EngineConfig {
    Engine engine = Engine::Depth;
    std::size_t depth = 16;
    std::size_t samples = 1000000;
    std::size_t burn_in = 1000;
    std::uint64_t seed = 0;
    double x0 = 0.0;
    PressureMethod method = PressureMethod::Transfer;
    std::size_t pressure_depth = 8;
    double tol = 1e-10;
    std::size_t threads = 1;
};

struct Grid {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t points = 2;

    double at(std::size_t j) const;
};

struct SweepSpec {
    FamilySpec family;
    SweepParameter parameter = SweepParameter::Lambda;
    double fixed_lambda = 0.0;
    double fixed_theta = 0.0;
    Grid grid;
    Quantity quantity = Quantity::Integral;
    Piecewise integrand = Piecewise::single(Expr::x());
    Potential potential = Potential::weight_log();
    EngineConfig engine;
    /// Singular parameter of the family, if any (used as the default probe).
    std::optional<double> critical_point;

    /// Throws std::invalid_argument when the grid is malformed.
    void check() const;
    /// (lambda, theta) for parameter value v.
    std::pair<double, double> parameters_at(double v) const;
};

struct SweepRow {
    double param = 0.0;
    double value = 0.0;
    double err_estimate = 0.0;
    std::string engine;
    std::size_t depth_or_samples = 0;
    std::uint64_t seed = 0;
    std::string error;
};

/// One row per grid point in grid order; failures go to the error column.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

/// Row for a single parameter value (grid index only affects the seed).
SweepRow evaluate_point(const SweepSpec& spec, double v, std::size_t index);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// Grid supremum of |f'| over the pieces of f, ignoring jumps at breakpoints.
double integrand_lipschitz(const Piecewise& f, double p, std::size_t grid_n = kDefaultValidationGrid);

/// A-priori truncation bound for the depth-n integral of f:
/// L^n / (1 - L) * W1(delta_x0, S delta_x0) * Lip(f).
double depth_error_bound(const IFSInstance& inst, const ValidationReport& report, double lip_f, double x0,
                         std::size_t n);

enum class Verdict { Bounded, Diverging, Inconclusive };
const char* to_string(Verdict v);

struct QuotientRow {
    double h;
    double probe;
    double quotient;
};

struct SmoothnessDiagnostic {
    std::size_t order = 0;
    double probe = 0.0;
    double window = 0.0;
    std::vector<double> ladder;
    std::vector<QuotientRow> rows;
    std::vector<double> sup_quotient; // per ladder step, over probe points
    /// Per ladder step: bound on |quotient| explained by evaluation error and
    /// rounding alone.
    std::vector<double> uncertainty;
    /// False when every sup quotient is within its uncertainty; the quotients
    /// are then indistinguishable from zero and the verdict is bounded.
    bool resolved = true;
    double growth_exponent = 0.0;
    Verdict verdict = Verdict::Inconclusive;
    std::size_t depth = 0;
    double max_error = 0.0;
    double noise_threshold = 0.0;
    std::size_t evaluations = 0;
    /// Order 1 only: forward and backward quotients at the probe, per step.
    std::vector<std::pair<double, double>> one_sided;
};

class NoiseFloorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DiagnosticOptions {
    /// Half-width of the probe lattice around the probe; defaults to the
    /// largest ladder step.
    std::optional<double> window;
    /// Upper bound on the automatically chosen depth.
    std::size_t max_depth = 26;
    /// If set, use this depth instead of choosing one (still certified).
    std::optional<std::size_t> depth;
    std::size_t threads = 1;
};

/// Sample of the quantity: value and an error bound.
struct Sample {
    double value;
    double error;
};

/// Generic diagnostic over a quantity callback; quantity errors must stay
/// below 0.01 * min(h^d) or NoiseFloorError is thrown.
SmoothnessDiagnostic smoothness_diagnostic(const std::function<Sample(double)>& quantity, double probe,
                                           std::size_t order, const std::vector<double>& ladder,
                                           double window = 0.0);

/// Diagnostic of lambda -> int f d mu computed with the depth-n engine at a
/// depth certified against the noise floor.
SmoothnessDiagnostic smoothness_diagnostic(const SweepSpec& spec, double probe, std::size_t order,
                                           const std::vector<double>& ladder, const DiagnosticOptions& opts = {});

/// h in {2^-lo_exp, ..., 2^-hi_exp} * length.
std::vector<double> dyadic_ladder(double length, int lo_exp = 5, int hi_exp = 10);

Verdict classify_growth(double exponent);

void write_diagnostic_csv(std::ostream& os, const SmoothnessDiagnostic& d);

std::vector<std::string> preset_names();
/// Throws std::invalid_argument on an unknown name.
SweepSpec preset(std::string_view name);

} // namespace ifs
