#pragma once

#include "ifs/family.hpp"
#include "ifs/measure.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ifs {

/// Finite word over {0, ..., k-1} (printed 1-based). When `periodic` is set
/// the word stands for its infinite periodic extension.
struct SymbolWord {
    std::vector<std::uint8_t> symbols;
    bool periodic = false;

    static SymbolWord from_digits(std::string_view digits, bool periodic = false);
    /// Word number `index` among the k^n words of length n, lexicographic with
    /// the first symbol most significant.
    static SymbolWord from_index(std::size_t index, std::size_t k, std::size_t n, bool periodic = true);

    std::size_t length() const { return symbols.size(); }
    std::uint8_t at(std::size_t pos) const;
    std::string digits() const;
};

double shift_metric(const SymbolWord& x, const SymbolWord& y);

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kProjectTol = 1e-15;

/// Finite word: T_{w0} o ... o T_{w(m-1)}(0). Periodic word: fixed point of
/// the cycle composition. Throws ConvergenceError past the iteration cap.
double project(const IFSInstance& inst, const SymbolWord& w, double tol = kProjectTol);

/// Fixed point of T_{s0} o ... o T_{s(m-1)}.
double cycle_fixed_point(const IFSInstance& inst, std::span<const std::uint8_t> cycle, double tol = kProjectTol);

/// Potential on the full shift whose value at a sequence y depends on the
/// first symbol y0 and the projected tail point z = pi(sigma y).
class Potential {
public:
    enum class Kind { WeightLog, DerivativeLog, Constant, Scaled, Sum };

    static Potential weight_log();
    static Potential derivative_log();
    static Potential constant(double c);
    static Potential scaled(double t, const Potential& inner);
    static Potential sum(const Potential& a, const Potential& b);

    Kind kind() const { return node_->kind; }
    double value() const { return node_->value; }

    /// Throws EvalError when a weight is non-positive or a derivative vanishes.
    double at(const IFSInstance& inst, std::size_t symbol, double tail_point) const;

    /// True when the potential is exactly weight_log, whose transfer
    /// operator fixes the constants.
    bool is_normalized_weight_log() const { return kind() == Kind::WeightLog; }

    std::string str() const;

private:
    struct Node {
        Kind kind;
        double value = 0.0;
        std::shared_ptr<const Node> a;
        std::shared_ptr<const Node> b;
    };
    explicit Potential(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static double eval(const Node& n, const IFSInstance& inst, std::size_t symbol, double z);
    static std::string print(const Node& n);

    std::shared_ptr<const Node> node_;
};

/// Potential at the sequence coded by w: phi(w0, pi(sigma w)).
double eval_potential(const IFSInstance& inst, const Potential& phi, const SymbolWord& w, double tol = kProjectTol);

enum class PressureMethod { Periodic, Transfer };

const char* to_string(PressureMethod m);

struct PressureEstimate {
    double value = 0.0;
    PressureMethod method = PressureMethod::Transfer;
    std::size_t depth = 0;
    /// periodic: |P_n - P_(n-1)|; transfer: last two power iterates.
    double gap = 0.0;
    std::size_t iterations = 0;
};

inline constexpr std::size_t kWordBudget = std::size_t{1} << 24;

PressureEstimate pressure_periodic(const IFSInstance& inst, const Potential& phi, std::size_t n);

/// Leading eigendata of the depth-d transfer matrix. States are words u of
/// length d; the transition u -> (i, u0..u(d-2)) carries exp(phi(i . u-bar)).
struct TransferEigen {
    std::size_t k = 0;
    std::size_t depth = 0;
    double log_rho = 0.0;
    double gap = 0.0;
    std::size_t iterations = 0;
    std::vector<double> right;       // right eigenvector, max-normalized
    std::vector<double> tail_points; // pi(u-bar) per state
    std::vector<double> log_entry;   // phi(i . u-bar) at [u * k + i]

    std::size_t states() const { return right.size(); }
    std::size_t successor(std::size_t state, std::size_t symbol) const;
};

TransferEigen transfer_eigen(const IFSInstance& inst, const Potential& phi, std::size_t depth,
                             std::size_t iters = 100000, double tol = 1e-13);

PressureEstimate pressure_transfer(const IFSInstance& inst, const Potential& phi, std::size_t depth,
                                   std::size_t iters = 100000, double tol = 1e-13);

/// Probability weights on the k^n cylinders of length n, lexicographic order.
struct CylinderWeights {
    std::size_t k = 0;
    std::size_t n = 0;
    std::vector<double> weights;
    /// Probability of the transition that prepended the first symbol; set
    /// only for the transfer-matrix construction.
    std::vector<double> first_transition;
};

/// Default reference point: pi of the periodic word (1, 2, ..., k).
double reference_point(const IFSInstance& inst);

/// Cylinder weights g_{i1}(T_{i2}...T_{in} x0) ... g_{in}(x0) of the Gibbs
/// measure for the normalized weight potential.
CylinderWeights gibbs_cylinder(const IFSInstance& inst, std::size_t n, std::optional<double> x0 = std::nullopt);

/// Gibbs measure of an arbitrary potential from the depth-d transfer
/// eigendata, grown backwards from the reference tail state.
CylinderWeights gibbs_from_transfer(const IFSInstance& inst, const Potential& phi, std::size_t n, std::size_t depth);

/// Sum over words of weight * phi(periodic extension of the word).
double cylinder_integral(const IFSInstance& inst, const CylinderWeights& nu, const Potential& phi);

/// Integral of phi against the Gibbs measure of the weight potential.
double gibbs_integral(const IFSInstance& inst, const Potential& phi, std::size_t n);

/// Sum over words of weight * f(pi(periodic extension)).
double cylinder_pushforward(const IFSInstance& inst, const CylinderWeights& nu, const std::function<double(double)>& f);

/// -sum nu[w] log P(first transition); requires first_transition.
double cylinder_entropy(const CylinderWeights& nu);

struct DerivativeCheck {
    double fd = 0.0;
    double gibbs = 0.0;
};

/// Central difference of t -> P(phi + t psi) at 0 against int psi d mu_phi.
DerivativeCheck pressure_derivative_check(const IFSInstance& inst, const Potential& phi, const Potential& psi,
                                          double h, std::size_t n);

void write_cylinder_csv(std::ostream& os, const CylinderWeights& nu);

} // namespace ifs
