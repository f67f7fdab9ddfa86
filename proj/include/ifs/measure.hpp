#pragma once

#include "ifs/family.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace ifs {

struct Atom {
    double position;
    double weight;
};

/// Finitely supported probability measure on [0,1]: atoms sorted by
/// strictly increasing position, positive weights summing to one.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    /// Sorts, merges coincident positions and normalizes. Throws
    /// std::invalid_argument on empty input, non-positive total mass or a
    /// position outside [0,1].
    explicit DiscreteMeasure(std::vector<Atom> atoms);

    static DiscreteMeasure dirac(double x);

    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }
    const Atom& operator[](std::size_t i) const { return atoms_[i]; }

    /// Total mass before normalization.
    double raw_mass() const { return raw_mass_; }

private:
    std::vector<Atom> atoms_;
    double raw_mass_ = 0.0;
};

struct EvolveConfig {
    double prune_eps = 0.0;
    double merge_tol = 0.0;
    /// Upper bound on atoms created before merging.
    std::size_t atom_budget = std::size_t{1} << 24;
};

class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ScalarFn = std::function<double(double)>;

/// Applies merge_tol clustering and prune_eps, then renormalizes.
DiscreteMeasure consolidate(std::vector<Atom> atoms, const EvolveConfig& cfg);

/// One application of the weighted Markov operator.
DiscreteMeasure markov_step(const IFSInstance& inst, const DiscreteMeasure& nu, const EvolveConfig& cfg = {});

/// Raw (unsorted, unmerged) image of nu under the Markov operator.
std::vector<Atom> markov_image(const IFSInstance& inst, const DiscreteMeasure& nu);

/// Sum over all k^n words of g-products times the Dirac mass at
/// T_{i1} o ... o T_{in}(x0).
DiscreteMeasure depth_n_measure(const IFSInstance& inst, double x0, std::size_t n, const EvolveConfig& cfg = {});

/// Empirical measure of the place-dependent random walk x <- T_I(x),
/// P(I = i | x) = g_i(x), after burn_in discarded steps.
DiscreteMeasure chaos_game(const IFSInstance& inst, double x0, std::size_t burn_in, std::size_t samples,
                           std::uint64_t seed);

double integrate(const DiscreteMeasure& nu, const ScalarFn& f);

/// Integral of f against the depth-n measure from x0 without building it:
/// V_0 = f, V_m(x) = sum_i g_i(x) V_{m-1}(T_i x), result V_n(x0).
double integrate_depth(const IFSInstance& inst, const PiecewiseCompiled& f, double x0, std::size_t n);

/// Exact Wasserstein-1 distance on the line (area between the CDFs).
double w1_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// max_f | int f dnu - sum_i int g_i (f o T_i) dnu |.
double stationarity_residual(const IFSInstance& inst, const DiscreteMeasure& nu, std::span<const ScalarFn> test_fns);

/// CSV dump: header `position,weight`, 17 significant digits.
void write_measure_csv(std::ostream& os, const DiscreteMeasure& nu);

} // namespace ifs
