#include "ifs/measure.hpp"

#include "ifs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <cstdio>
#include <ostream>

namespace ifs {

namespace {

// Neumaier compensated sum.
class Accumulator {
public:
    void add(double v)
    {
        const double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

void sort_atoms(std::vector<Atom>& atoms)
{
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
        return a.position < b.position || (a.position == b.position && a.weight < b.weight);
    });
}

double checked_weight(const IFSInstance& inst, std::size_t i, double x)
{
    const double g = inst.weight(i, x);
    if (!(g > 0.0)) {
        throw EvalError("weight g_" + std::to_string(i + 1) + " is non-positive at x=" + std::to_string(x));
    }
    return g;
}

} // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms)
{
    if (atoms.empty()) {
        throw std::invalid_argument("DiscreteMeasure: no atoms");
    }
    for (const Atom& a : atoms) {
        if (!(a.position >= 0.0 && a.position <= 1.0)) {
            throw std::invalid_argument("DiscreteMeasure: position " + std::to_string(a.position) + " outside [0,1]");
        }
        if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) {
            throw std::invalid_argument("DiscreteMeasure: invalid weight");
        }
    }
    sort_atoms(atoms);
    std::vector<Atom> merged;
    merged.reserve(atoms.size());
    Accumulator total;
    for (const Atom& a : atoms) {
        if (a.weight == 0.0) {
            continue;
        }
        total.add(a.weight);
        if (!merged.empty() && merged.back().position == a.position) {
            merged.back().weight += a.weight;
        } else {
            merged.push_back(a);
        }
    }
    raw_mass_ = total.value();
    if (!(raw_mass_ > 0.0)) {
        throw std::invalid_argument("DiscreteMeasure: total mass is zero");
    }
    for (Atom& a : merged) {
        a.weight /= raw_mass_;
    }
    atoms_ = std::move(merged);
}

DiscreteMeasure DiscreteMeasure::dirac(double x) { return DiscreteMeasure({{x, 1.0}}); }

DiscreteMeasure consolidate(std::vector<Atom> atoms, const EvolveConfig& cfg)
{
    if (cfg.prune_eps < 0.0 || cfg.merge_tol < 0.0) {
        throw std::invalid_argument("EvolveConfig: prune_eps and merge_tol must be >= 0");
    }
    if (cfg.merge_tol > 0.0 && !atoms.empty()) {
        sort_atoms(atoms);
        std::vector<Atom> clustered;
        std::size_t start = 0;
        while (start < atoms.size()) {
            std::size_t end = start;
            double mass = 0.0;
            double moment = 0.0;
            while (end < atoms.size() && atoms[end].position - atoms[start].position < cfg.merge_tol) {
                mass += atoms[end].weight;
                moment += atoms[end].weight * atoms[end].position;
                ++end;
            }
            double pos = mass > 0.0 ? moment / mass : atoms[start].position;
            pos = std::clamp(pos, atoms[start].position, atoms[end - 1].position);
            clustered.push_back({pos, mass});
            start = end;
        }
        atoms = std::move(clustered);
    }
    if (cfg.prune_eps > 0.0) {
        double total = 0.0;
        for (const Atom& a : atoms) {
            total += a.weight;
        }
        std::erase_if(atoms, [&](const Atom& a) { return a.weight / total < cfg.prune_eps; });
    }
    return DiscreteMeasure(std::move(atoms));
}

std::vector<Atom> markov_image(const IFSInstance& inst, const DiscreteMeasure& nu)
{
    std::vector<Atom> out;
    out.reserve(nu.size() * inst.k());
    for (const Atom& a : nu.atoms()) {
        for (std::size_t i = 0; i < inst.k(); ++i) {
            out.push_back({inst.map(i, a.position), a.weight * checked_weight(inst, i, a.position)});
        }
    }
    return out;
}

DiscreteMeasure markov_step(const IFSInstance& inst, const DiscreteMeasure& nu, const EvolveConfig& cfg)
{
    if (nu.size() * inst.k() > cfg.atom_budget) {
        throw BudgetError("markov_step: atom budget exceeded");
    }
    return consolidate(markov_image(inst, nu), cfg);
}

DiscreteMeasure depth_n_measure(const IFSInstance& inst, double x0, std::size_t n, const EvolveConfig& cfg)
{
    if (n < 1) {
        throw std::invalid_argument("depth_n_measure: n must be >= 1");
    }
    if (!(x0 >= 0.0 && x0 <= 1.0)) {
        throw std::invalid_argument("depth_n_measure: x0 outside [0,1]");
    }
    const double count = std::pow(static_cast<double>(inst.k()), static_cast<double>(n));
    if (count > static_cast<double>(cfg.atom_budget)) {
        throw BudgetError("depth_n_measure: k^n = " + std::to_string(count) + " exceeds atom budget");
    }
    // Word (i1..in) lands at T_{i1} o ... o T_{in}(x0); build by applying the
    // innermost map first and carrying the partial weight product.
    std::vector<Atom> level{{x0, 1.0}};
    for (std::size_t depth = 0; depth < n; ++depth) {
        std::vector<Atom> next;
        next.reserve(level.size() * inst.k());
        for (std::size_t i = 0; i < inst.k(); ++i) {
            for (const Atom& a : level) {
                next.push_back({inst.map(i, a.position), a.weight * checked_weight(inst, i, a.position)});
            }
        }
        level = std::move(next);
    }
    return consolidate(std::move(level), cfg);
}

DiscreteMeasure chaos_game(const IFSInstance& inst, double x0, std::size_t burn_in, std::size_t samples,
                           std::uint64_t seed)
{
    if (samples < 1) {
        throw std::invalid_argument("chaos_game: samples must be >= 1");
    }
    Xoshiro256 rng(seed);
    const std::size_t k = inst.k();
    std::vector<double> cumulative(k);
    double x = x0;
    auto step = [&] {
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            total += checked_weight(inst, i, x);
            cumulative[i] = total;
        }
        const double u = rng.uniform() * total;
        std::size_t pick = k - 1;
        for (std::size_t i = 0; i < k; ++i) {
            if (u < cumulative[i]) {
                pick = i;
                break;
            }
        }
        x = inst.map(pick, x);
    };
    for (std::size_t s = 0; s < burn_in; ++s) {
        step();
    }
    std::vector<Atom> atoms;
    atoms.reserve(samples);
    const double w = 1.0 / static_cast<double>(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        step();
        atoms.push_back({x, w});
    }
    return DiscreteMeasure(std::move(atoms));
}

double integrate(const DiscreteMeasure& nu, const ScalarFn& f)
{
    Accumulator acc;
    for (const Atom& a : nu.atoms()) {
        acc.add(a.weight * f(a.position));
    }
    return acc.value();
}

namespace {

double integrate_depth_rec(const IFSInstance& inst, const PiecewiseCompiled& f, double x, std::size_t n)
{
    if (n == 0) {
        return f(x);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < inst.k(); ++i) {
        const double g = inst.weight(i, x);
        if (!(g > 0.0)) {
            throw EvalError("weight g_" + std::to_string(i + 1) + " is non-positive at x=" + std::to_string(x));
        }
        sum += g * integrate_depth_rec(inst, f, inst.map(i, x), n - 1);
    }
    return sum;
}

// Affine maps with piecewise-constant weights: weights tabulated per region
// between the merged breakpoints.
struct AffineTable {
    std::size_t k = 0;
    std::vector<double> slope;
    std::vector<double> intercept;
    std::vector<double> cuts;
    std::vector<double> weight; // [region * k + i]

    const double* weights_at(double x) const
    {
        std::size_t r = 0;
        while (r < cuts.size() && x >= cuts[r]) {
            ++r;
        }
        return &weight[r * k];
    }
};

std::optional<AffineTable> affine_table(const IFSInstance& inst)
{
    AffineTable t;
    t.k = inst.k();
    for (std::size_t i = 0; i < t.k; ++i) {
        const Branch& b = inst.branch(i);
        if (!b.map_fn.is_affine()) {
            return std::nullopt;
        }
        t.slope.push_back(b.map_fn.slope());
        t.intercept.push_back(b.map_fn.intercept());
        for (const CompiledExpr& piece : b.weight_fn.pieces()) {
            if (!piece.is_affine() || piece.slope() != 0.0) {
                return std::nullopt;
            }
        }
        const auto& bp = b.weight_fn.breakpoints();
        t.cuts.insert(t.cuts.end(), bp.begin(), bp.end());
    }
    std::sort(t.cuts.begin(), t.cuts.end());
    t.cuts.erase(std::unique(t.cuts.begin(), t.cuts.end()), t.cuts.end());
    for (std::size_t r = 0; r <= t.cuts.size(); ++r) {
        const double rep = t.cuts.empty() ? 0.0 : (r == 0 ? t.cuts[0] - 1.0 : t.cuts[r - 1]);
        for (std::size_t i = 0; i < t.k; ++i) {
            const double g = inst.weight(i, rep);
            if (!(g > 0.0)) {
                return std::nullopt;
            }
            t.weight.push_back(g);
        }
    }
    return t;
}

// Expands the last levels breadth-first in flat buffers.
class AffineIntegrator {
public:
    AffineIntegrator(const AffineTable& t, const PiecewiseCompiled& f) : t_(t), f_(f)
    {
        std::size_t width = 1;
        while (block_ < 16 && width * t.k <= 4096) {
            width *= t.k;
            ++block_;
        }
        xs_.resize(width);
        ws_.resize(width);
        nx_.resize(width);
        nw_.resize(width);
    }

    double run(double x, std::size_t n)
    {
        if (n <= block_) {
            return expand(x, n);
        }
        const double* g = t_.weights_at(x);
        double sum = 0.0;
        for (std::size_t i = 0; i < t_.k; ++i) {
            sum += g[i] * run(t_.slope[i] * x + t_.intercept[i], n - 1);
        }
        return sum;
    }

private:
    double expand(double x, std::size_t n)
    {
        std::size_t size = 1;
        xs_[0] = x;
        ws_[0] = 1.0;
        for (std::size_t level = 0; level < n; ++level) {
            std::size_t out = 0;
            for (std::size_t j = 0; j < size; ++j) {
                const double* g = t_.weights_at(xs_[j]);
                for (std::size_t i = 0; i < t_.k; ++i) {
                    nx_[out] = t_.slope[i] * xs_[j] + t_.intercept[i];
                    nw_[out] = ws_[j] * g[i];
                    ++out;
                }
            }
            std::swap(xs_, nx_);
            std::swap(ws_, nw_);
            size = out;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < size; ++j) {
            sum += ws_[j] * f_(xs_[j]);
        }
        return sum;
    }

    const AffineTable& t_;
    const PiecewiseCompiled& f_;
    std::size_t block_ = 0;
    std::vector<double> xs_, ws_, nx_, nw_;
};

} // namespace

double integrate_depth(const IFSInstance& inst, const PiecewiseCompiled& f, double x0, std::size_t n)
{
    if (n > 0) {
        if (const auto table = affine_table(inst)) {
            return AffineIntegrator(*table, f).run(x0, n);
        }
    }
    return integrate_depth_rec(inst, f, x0, n);
}

double w1_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu)
{
    const auto a = mu.atoms();
    const auto b = nu.atoms();
    std::size_t i = 0;
    std::size_t j = 0;
    double cdf_a = 0.0;
    double cdf_b = 0.0;
    double prev = 0.0;
    Accumulator area;
    while (i < a.size() || j < b.size()) {
        const double next = std::min(i < a.size() ? a[i].position : 2.0, j < b.size() ? b[j].position : 2.0);
        area.add(std::fabs(cdf_a - cdf_b) * (next - prev));
        while (i < a.size() && a[i].position == next) {
            cdf_a += a[i++].weight;
        }
        while (j < b.size() && b[j].position == next) {
            cdf_b += b[j++].weight;
        }
        prev = next;
    }
    return area.value();
}

double stationarity_residual(const IFSInstance& inst, const DiscreteMeasure& nu, std::span<const ScalarFn> test_fns)
{
    double worst = 0.0;
    for (const ScalarFn& f : test_fns) {
        Accumulator lhs;
        Accumulator rhs;
        for (const Atom& a : nu.atoms()) {
            lhs.add(a.weight * f(a.position));
            for (std::size_t i = 0; i < inst.k(); ++i) {
                rhs.add(a.weight * inst.weight(i, a.position) * f(inst.map(i, a.position)));
            }
        }
        worst = std::max(worst, std::fabs(lhs.value() - rhs.value()));
    }
    return worst;
}

void write_measure_csv(std::ostream& os, const DiscreteMeasure& nu)
{
    os << "position,weight\n";
    char buf[64];
    for (const Atom& a : nu.atoms()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", a.position, a.weight);
        os << buf;
    }
}

} // namespace ifs
