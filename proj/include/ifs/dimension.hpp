#pragma once

#include "ifs/symbolic.hpp"

#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>

namespace ifs {

/// The instance does not satisfy the hypotheses an operation needs.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DimensionResult {
    static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

    double t_star = kNaN;
    double h = kNaN;
    double chi = kNaN;
    double hd_measure = kNaN;
    double bracket_lo = kNaN;
    double bracket_hi = kNaN;
    PressureMethod method = PressureMethod::Transfer;
    std::size_t depth = 0;
    std::size_t bisection_steps = 0;
};

inline constexpr double kBowenTmax = 2.0;

/// Root of t -> P(t log|dT|) on [0, 2] by bisection down to bracket width tol.
DimensionResult bowen_root(const IFSInstance& inst, PressureMethod method = PressureMethod::Transfer,
                           std::size_t depth = 8, double tol = 1e-10);

/// Pressure of t log|dT| with the chosen method.
double bowen_pressure(const IFSInstance& inst, double t, PressureMethod method, std::size_t depth);

/// Unique s with sum_i r_i^s = 1, to 1e-12.
double moran_dimension(std::span<const double> ratios);

/// Entropy over Lyapunov exponent of the Gibbs measure of the weight potential.
DimensionResult measure_dimension(const IFSInstance& inst, std::size_t n);

/// CSV header `lambda,theta,t_star,h,chi,hd_measure,bracket_lo,bracket_hi,depth,method`.
void write_dimension_header(std::ostream& os);
void write_dimension_row(std::ostream& os, double lambda, double theta, const DimensionResult& r);

} // namespace ifs
