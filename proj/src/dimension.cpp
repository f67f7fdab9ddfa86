#include "ifs/dimension.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace ifs {

double bowen_pressure(const IFSInstance& inst, double t, PressureMethod method, std::size_t depth)
{
    const Potential phi = Potential::scaled(t, Potential::derivative_log());
    return method == PressureMethod::Periodic ? pressure_periodic(inst, phi, depth).value
                                              : pressure_transfer(inst, phi, depth).value;
}

DimensionResult bowen_root(const IFSInstance& inst, PressureMethod method, std::size_t depth, double tol)
{
    if (!(tol > 0.0)) {
        throw std::invalid_argument("bowen_root: tol must be positive");
    }
    const ValidationReport report = validate(inst);
    if (!report.disjoint) {
        throw DomainError("bowen_root: images of the maps are not pairwise disjoint");
    }
    if (!report.derivative_bound_ok()) {
        throw DomainError("bowen_root: derivative lower bound is not positive");
    }
    double lo = 0.0;
    double hi = kBowenTmax;
    const double p_lo = bowen_pressure(inst, lo, method, depth);
    const double p_hi = bowen_pressure(inst, hi, method, depth);
    if (!(p_lo > 0.0 && p_hi < 0.0)) {
        throw DomainError("bowen_root: P(0) and P(t_max) do not bracket a sign change");
    }
    DimensionResult r;
    r.method = method;
    r.depth = depth;
    while (hi - lo > tol && r.bisection_steps < 200) {
        const double mid = 0.5 * (lo + hi);
        if (bowen_pressure(inst, mid, method, depth) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        ++r.bisection_steps;
    }
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    r.t_star = 0.5 * (lo + hi);
    return r;
}

double moran_dimension(std::span<const double> ratios)
{
    if (ratios.empty()) {
        throw std::invalid_argument("moran_dimension: empty ratio list");
    }
    for (double r : ratios) {
        if (!(r > 0.0 && r < 1.0)) {
            throw std::invalid_argument("moran_dimension: ratios must lie in (0,1)");
        }
    }
    auto excess = [&](double s) {
        double sum = 0.0;
        for (double r : ratios) {
            sum += std::pow(r, s);
        }
        return sum - 1.0;
    };
    double lo = 0.0;
    if (excess(lo) <= 0.0) {
        return 0.0;
    }
    double hi = 1.0;
    while (excess(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

DimensionResult measure_dimension(const IFSInstance& inst, std::size_t n)
{
    const ValidationReport report = validate(inst);
    if (!report.disjoint) {
        throw DomainError("measure_dimension: images of the maps are not pairwise disjoint");
    }
    if (!report.normalization_ok()) {
        throw DomainError("measure_dimension: weights do not sum to one");
    }
    if (!report.derivative_bound_ok()) {
        throw DomainError("measure_dimension: derivative lower bound is not positive");
    }
    const CylinderWeights nu = gibbs_cylinder(inst, n);
    DimensionResult r;
    r.depth = n;
    r.h = -cylinder_integral(inst, nu, Potential::weight_log());
    r.chi = -cylinder_integral(inst, nu, Potential::derivative_log());
    if (!(r.chi > 0.0)) {
        throw DomainError("measure_dimension: Lyapunov exponent is not positive");
    }
    r.hd_measure = r.h / r.chi;
    return r;
}

void write_dimension_header(std::ostream& os)
{
    os << "lambda,theta,t_star,h,chi,hd_measure,bracket_lo,bracket_hi,depth,method\n";
}

void write_dimension_row(std::ostream& os, double lambda, double theta, const DimensionResult& r)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%s\n", lambda, theta, r.t_star,
                  r.h, r.chi, r.hd_measure, r.bracket_lo, r.bracket_hi, r.depth, to_string(r.method));
    os << buf;
}

} // namespace ifs
