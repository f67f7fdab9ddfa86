#pragma once

#include "ifs/expr.hpp"

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifs {

/// Expression defined piece by piece on [0,1]. Piece j covers
/// [breakpoints[j-1], breakpoints[j]); the last piece is closed on the right,
/// so a point sitting exactly on a breakpoint takes the right-hand piece.
struct Piecewise {
    std::vector<double> breakpoints;
    std::vector<Expr> pieces;

    static Piecewise single(Expr e);
    static Piecewise parse(std::string_view source);

    bool is_single() const { return pieces.size() == 1; }
    std::size_t piece_index(double x) const;
    double eval(double x, double p) const;
    std::string str() const;
};

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool declared = false;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double midpoint() const;
};

/// Parameterized family: maps depend on p = lambda, weights on p = theta.
struct FamilySpec {
    std::string name;
    std::vector<Expr> maps;
    std::vector<Piecewise> weights;
    Interval lambda_range;
    Interval theta_range;
    double default_lambda = 0.0;
    double default_theta = 0.0;
    /// Weights share the map parameter (theta is always lambda).
    bool tied = false;

    std::size_t branches() const { return maps.size(); }
    /// Throws std::invalid_argument on a malformed family.
    void check() const;
};

class BindError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PiecewiseCompiled {
public:
    PiecewiseCompiled() = default;
    PiecewiseCompiled(const Piecewise& pw, double p);

    double operator()(double x) const
    {
        if (breakpoints_.empty()) {
            return pieces_[0](x);
        }
        std::size_t j = 0;
        while (j < breakpoints_.size() && x >= breakpoints_[j]) {
            ++j;
        }
        return pieces_[j](x);
    }

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<CompiledExpr>& pieces() const { return pieces_; }

private:
    std::vector<double> breakpoints_;
    std::vector<CompiledExpr> pieces_;
};

struct Branch {
    Expr map;         // bound at lambda
    Expr derivative;  // diff_x(map)
    Piecewise weight; // bound at theta
    CompiledExpr map_fn;
    CompiledExpr derivative_fn;
    PiecewiseCompiled weight_fn;
};

/// A member of the family at fixed (lambda, theta). Immutable.
class IFSInstance {
public:
    IFSInstance(std::vector<Branch> branches, double lambda, double theta);

    std::size_t k() const { return branches_.size(); }
    double lambda() const { return lambda_; }
    double theta() const { return theta_; }
    const Branch& branch(std::size_t i) const { return branches_[i]; }

    double map(std::size_t i, double x) const { return branches_[i].map_fn(x); }
    double derivative(std::size_t i, double x) const { return branches_[i].derivative_fn(x); }
    double weight(std::size_t i, double x) const { return branches_[i].weight_fn(x); }

    bool weights_piecewise() const;

private:
    std::vector<Branch> branches_;
    double lambda_;
    double theta_;
};

/// Realizes the family member at (lambda, theta). Throws BindError when a
/// parameter is outside its declared interval or an expression cannot be bound.
IFSInstance bind(const FamilySpec& spec, double lambda, double theta);

struct ValidationReport {
    std::size_t grid_n = 0;
    std::vector<double> lip;        // grid sup |dT_i|
    std::vector<double> weight_sup; // grid sup g_i
    std::vector<double> image_lo;
    std::vector<double> image_hi;
    double contraction = 0.0;       // L = sum_i sup g_i * lip_i
    double normalization_residual = 0.0;
    double derivative_lower_bound = 0.0; // rho_est
    double holder_exponent = 0.0;        // min(1, -log a / log 2)
    double max_ratio = 0.0;              // a = max_i lip_i
    double min_weight = 0.0;
    bool disjoint = false;
    bool maps_into_unit = false;
    bool equal_derivative = false;
    std::vector<std::string> warnings;

    double normalization_tol = 1e-9;

    bool contraction_ok() const { return contraction < 1.0; }
    bool normalization_ok() const { return normalization_residual <= normalization_tol; }
    bool weights_positive() const { return min_weight > 0.0; }
    bool derivative_bound_ok() const { return derivative_lower_bound > 0.0; }
    /// Gate for stationary-measure operations.
    bool valid() const
    {
        return contraction_ok() && normalization_ok() && weights_positive() && maps_into_unit;
    }
    /// Gate for dimension operations.
    bool dimension_ready() const { return valid() && disjoint && derivative_bound_ok(); }
};

class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& what, std::size_t branch, double x);
    std::size_t branch() const { return branch_; }
    double x() const { return x_; }

private:
    std::size_t branch_;
    double x_;
};

inline constexpr std::size_t kDefaultValidationGrid = 4096;

ValidationReport validate(const IFSInstance& inst, std::size_t grid_n = kDefaultValidationGrid);

} // namespace ifs
