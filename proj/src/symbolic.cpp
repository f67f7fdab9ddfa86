#include "ifs/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace ifs {

namespace {

std::size_t checked_word_count(std::size_t k, std::size_t n)
{
    double count = std::pow(static_cast<double>(k), static_cast<double>(n));
    if (count > static_cast<double>(kWordBudget)) {
        throw BudgetError("k^n = " + std::to_string(count) + " words exceeds the enumeration budget");
    }
    return static_cast<std::size_t>(count);
}

void index_to_symbols(std::size_t index, std::size_t k, std::vector<std::uint8_t>& out)
{
    for (std::size_t pos = out.size(); pos-- > 0;) {
        out[pos] = static_cast<std::uint8_t>(index % k);
        index /= k;
    }
}

double log_sum_exp(const std::vector<double>& values)
{
    double top = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        top = std::max(top, v);
    }
    double sum = 0.0;
    double comp = 0.0;
    for (double v : values) {
        const double term = std::exp(v - top);
        const double t = sum + term;
        comp += (sum >= term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return top + std::log(sum + comp);
}

double periodic_pressure_at(const IFSInstance& inst, const Potential& phi, std::size_t n)
{
    const std::size_t k = inst.k();
    const std::size_t count = checked_word_count(k, n);
    std::vector<double> sums(count);
    std::vector<std::uint8_t> w(n);
    for (std::size_t idx = 0; idx < count; ++idx) {
        index_to_symbols(idx, k, w);
        double q = cycle_fixed_point(inst, w);
        double s = 0.0;
        // Walk the cycle backwards: pi(sigma^j w) = T_{w_j}(pi(sigma^{j+1} w)).
        for (std::size_t j = n; j-- > 0;) {
            s += phi.at(inst, w[j], q);
            q = inst.map(w[j], q);
        }
        sums[idx] = s;
    }
    return log_sum_exp(sums) / static_cast<double>(n);
}

} // namespace

// ---------------------------------------------------------------- words

SymbolWord SymbolWord::from_digits(std::string_view digits, bool periodic)
{
    SymbolWord w;
    w.periodic = periodic;
    for (char c : digits) {
        if (c < '1' || c > '9') {
            throw std::invalid_argument("SymbolWord: symbols are digits 1-9");
        }
        w.symbols.push_back(static_cast<std::uint8_t>(c - '1'));
    }
    if (w.symbols.empty()) {
        throw std::invalid_argument("SymbolWord: empty word");
    }
    return w;
}

SymbolWord SymbolWord::from_index(std::size_t index, std::size_t k, std::size_t n, bool periodic)
{
    SymbolWord w;
    w.periodic = periodic;
    w.symbols.resize(n);
    index_to_symbols(index, k, w.symbols);
    return w;
}

std::uint8_t SymbolWord::at(std::size_t pos) const
{
    if (pos < symbols.size()) {
        return symbols[pos];
    }
    if (!periodic) {
        throw std::out_of_range("SymbolWord: index past a finite word");
    }
    return symbols[pos % symbols.size()];
}

std::string SymbolWord::digits() const
{
    std::string s;
    for (auto c : symbols) {
        s += static_cast<char>('1' + c);
    }
    return s;
}

double shift_metric(const SymbolWord& x, const SymbolWord& y)
{
    if (x.symbols.empty() || y.symbols.empty()) {
        throw std::invalid_argument("shift_metric: empty word");
    }
    if (x.periodic && y.periodic) {
        // Exact value of the infinite series: one full joint period, summed geometrically.
        const std::size_t period = std::lcm(x.length(), y.length());
        double s = 0.0;
        for (std::size_t n = 0; n < period; ++n) {
            if (x.at(n) != y.at(n)) {
                s += std::ldexp(1.0, -static_cast<int>(n));
            }
        }
        return s / (1.0 - std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(period, 1074))));
    }
    std::size_t len;
    if (x.periodic) {
        len = y.length();
    } else if (y.periodic) {
        len = x.length();
    } else {
        if (x.length() != y.length()) {
            throw std::invalid_argument("shift_metric: finite words of different length");
        }
        len = x.length();
    }
    double s = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
        if (x.at(n) != y.at(n)) {
            s += std::ldexp(1.0, -static_cast<int>(n));
        }
    }
    return s;
}

double cycle_fixed_point(const IFSInstance& inst, std::span<const std::uint8_t> cycle, double tol)
{
    constexpr int kCap = 100000;
    double x = 0.0;
    for (int it = 0; it < kCap; ++it) {
        double y = x;
        for (std::size_t j = cycle.size(); j-- > 0;) {
            y = inst.map(cycle[j], y);
        }
        if (std::fabs(y - x) <= tol) {
            return y;
        }
        x = y;
    }
    throw ConvergenceError("project: cycle iteration did not converge; the maps may not contract");
}

double project(const IFSInstance& inst, const SymbolWord& w, double tol)
{
    if (w.symbols.empty()) {
        throw std::invalid_argument("project: empty word");
    }
    for (auto s : w.symbols) {
        if (s >= inst.k()) {
            throw std::invalid_argument("project: symbol out of range");
        }
    }
    if (w.periodic) {
        return cycle_fixed_point(inst, w.symbols, tol);
    }
    double x = 0.0;
    for (std::size_t j = w.length(); j-- > 0;) {
        x = inst.map(w.symbols[j], x);
    }
    return x;
}

// ---------------------------------------------------------------- potentials

Potential Potential::weight_log() { return Potential(std::make_shared<Node>(Node{Kind::WeightLog, 0.0, nullptr, nullptr})); }
Potential Potential::derivative_log() { return Potential(std::make_shared<Node>(Node{Kind::DerivativeLog, 0.0, nullptr, nullptr})); }

Potential Potential::constant(double c)
{
    if (!std::isfinite(c)) {
        throw std::invalid_argument("Potential: constant must be finite");
    }
    return Potential(std::make_shared<Node>(Node{Kind::Constant, c, nullptr, nullptr}));
}

Potential Potential::scaled(double t, const Potential& inner)
{
    if (!std::isfinite(t)) {
        throw std::invalid_argument("Potential: scale must be finite");
    }
    return Potential(std::make_shared<Node>(Node{Kind::Scaled, t, inner.node_, nullptr}));
}

Potential Potential::sum(const Potential& a, const Potential& b)
{
    return Potential(std::make_shared<Node>(Node{Kind::Sum, 0.0, a.node_, b.node_}));
}

double Potential::eval(const Node& n, const IFSInstance& inst, std::size_t symbol, double z)
{
    switch (n.kind) {
    case Kind::WeightLog: {
        const double g = inst.weight(symbol, z);
        if (!(g > 0.0)) {
            throw EvalError("weight_log: non-positive weight at z=" + std::to_string(z));
        }
        return std::log(g);
    }
    case Kind::DerivativeLog: {
        const double d = std::fabs(inst.derivative(symbol, z));
        if (!(d > 0.0)) {
            throw EvalError("derivative_log: vanishing derivative at z=" + std::to_string(z));
        }
        return std::log(d);
    }
    case Kind::Constant: return n.value;
    case Kind::Scaled: return n.value * eval(*n.a, inst, symbol, z);
    case Kind::Sum: return eval(*n.a, inst, symbol, z) + eval(*n.b, inst, symbol, z);
    }
    return 0.0;
}

double Potential::at(const IFSInstance& inst, std::size_t symbol, double tail_point) const
{
    return eval(*node_, inst, symbol, tail_point);
}

std::string Potential::print(const Node& n)
{
    switch (n.kind) {
    case Kind::WeightLog: return "weight_log";
    case Kind::DerivativeLog: return "derivative_log";
    case Kind::Constant: return "constant(" + shortest_repr(n.value) + ")";
    case Kind::Scaled: return "scaled(" + shortest_repr(n.value) + ", " + print(*n.a) + ")";
    case Kind::Sum: return "sum(" + print(*n.a) + ", " + print(*n.b) + ")";
    }
    return "?";
}

std::string Potential::str() const { return print(*node_); }

double eval_potential(const IFSInstance& inst, const Potential& phi, const SymbolWord& w, double tol)
{
    if (w.symbols.empty()) {
        throw std::invalid_argument("eval_potential: empty word");
    }
    double tail;
    if (w.periodic) {
        std::vector<std::uint8_t> rotated(w.symbols.begin() + 1, w.symbols.end());
        rotated.push_back(w.symbols.front());
        tail = cycle_fixed_point(inst, rotated, tol);
    } else if (w.length() == 1) {
        tail = 0.0;
    } else {
        SymbolWord rest{{w.symbols.begin() + 1, w.symbols.end()}, false};
        tail = project(inst, rest, tol);
    }
    return phi.at(inst, w.symbols.front(), tail);
}

// ---------------------------------------------------------------- pressure

const char* to_string(PressureMethod m) { return m == PressureMethod::Periodic ? "periodic" : "transfer"; }

PressureEstimate pressure_periodic(const IFSInstance& inst, const Potential& phi, std::size_t n)
{
    if (n < 1) {
        throw std::invalid_argument("pressure_periodic: n must be >= 1");
    }
    PressureEstimate est;
    est.method = PressureMethod::Periodic;
    est.depth = n;
    est.value = periodic_pressure_at(inst, phi, n);
    est.gap = n >= 2 ? std::fabs(est.value - periodic_pressure_at(inst, phi, n - 1)) : 0.0;
    return est;
}

std::size_t TransferEigen::successor(std::size_t state, std::size_t symbol) const
{
    const std::size_t top = states() / k;
    return symbol * top + state / k;
}

TransferEigen transfer_eigen(const IFSInstance& inst, const Potential& phi, std::size_t depth, std::size_t iters,
                             double tol)
{
    if (depth < 1) {
        throw std::invalid_argument("pressure_transfer: depth must be >= 1");
    }
    TransferEigen eig;
    eig.k = inst.k();
    eig.depth = depth;
    const std::size_t k = eig.k;
    const std::size_t states = checked_word_count(k, depth);
    eig.tail_points.resize(states);
    eig.log_entry.resize(states * k);
    std::vector<std::uint8_t> u(depth);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < states; ++s) {
        index_to_symbols(s, k, u);
        eig.tail_points[s] = cycle_fixed_point(inst, u);
        for (std::size_t i = 0; i < k; ++i) {
            const double v = phi.at(inst, i, eig.tail_points[s]);
            eig.log_entry[s * k + i] = v;
            top = std::max(top, v);
        }
    }
    // Scale entries by exp(-top) to stay in range; the shift is added back to log rho.
    std::vector<double> entry(states * k);
    for (std::size_t j = 0; j < entry.size(); ++j) {
        entry[j] = std::exp(eig.log_entry[j] - top);
    }
    const std::size_t block = states / k;
    std::vector<double> v(states, 1.0);
    std::vector<double> w(states);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t it = 1; it <= iters; ++it) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        double wmax = 0.0;
        for (std::size_t s = 0; s < states; ++s) {
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                acc += entry[s * k + i] * v[i * block + s / k];
            }
            w[s] = acc;
            const double ratio = acc / v[s];
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            wmax = std::max(wmax, acc);
        }
        // Collatz-Wielandt: lo <= rho <= hi.
        const double estimate = std::log(0.5 * (lo + hi)) + top;
        for (std::size_t s = 0; s < states; ++s) {
            v[s] = w[s] / wmax;
        }
        eig.gap = std::isnan(prev) ? std::fabs(std::log(hi) - std::log(lo)) : std::fabs(estimate - prev);
        eig.log_rho = estimate;
        eig.iterations = it;
        if (hi - lo <= tol * hi) {
            eig.right = v;
            return eig;
        }
        prev = estimate;
    }
    throw ConvergenceError("pressure_transfer: power iteration did not converge in " + std::to_string(iters) +
                           " iterations");
}

PressureEstimate pressure_transfer(const IFSInstance& inst, const Potential& phi, std::size_t depth,
                                   std::size_t iters, double tol)
{
    const TransferEigen eig = transfer_eigen(inst, phi, depth, iters, tol);
    PressureEstimate est;
    est.method = PressureMethod::Transfer;
    est.depth = depth;
    est.value = eig.log_rho;
    est.gap = eig.gap;
    est.iterations = eig.iterations;
    return est;
}

// ---------------------------------------------------------------- Gibbs

double reference_point(const IFSInstance& inst)
{
    std::vector<std::uint8_t> cycle(inst.k());
    std::iota(cycle.begin(), cycle.end(), std::uint8_t{0});
    return cycle_fixed_point(inst, cycle);
}

CylinderWeights gibbs_cylinder(const IFSInstance& inst, std::size_t n, std::optional<double> x0)
{
    if (n < 1) {
        throw std::invalid_argument("gibbs_cylinder: n must be >= 1");
    }
    const std::size_t k = inst.k();
    const std::size_t count = checked_word_count(k, n);
    const double start = x0 ? *x0 : reference_point(inst);

    // Suffix words of growing length; prepending symbol i to a suffix of
    // length m puts it at index i * k^m + old.
    std::vector<double> point{start};
    std::vector<double> weight{1.0};
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t size = point.size();
        std::vector<double> next_point(size * k);
        std::vector<double> next_weight(size * k);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t s = 0; s < size; ++s) {
                const double g = inst.weight(i, point[s]);
                if (!(g > 0.0)) {
                    throw EvalError("gibbs_cylinder: non-positive weight");
                }
                next_point[i * size + s] = inst.map(i, point[s]);
                next_weight[i * size + s] = weight[s] * g;
            }
        }
        point = std::move(next_point);
        weight = std::move(next_weight);
    }
    CylinderWeights out;
    out.k = k;
    out.n = n;
    out.weights = std::move(weight);
    (void)count;
    return out;
}

CylinderWeights gibbs_from_transfer(const IFSInstance& inst, const Potential& phi, std::size_t n, std::size_t depth)
{
    if (n < 1) {
        throw std::invalid_argument("gibbs_from_transfer: n must be >= 1");
    }
    const std::size_t k = inst.k();
    checked_word_count(k, n);
    const TransferEigen eig = transfer_eigen(inst, phi, depth);
    const std::size_t states = eig.states();

    // Row-normalized transition probabilities P(u -> successor(u, i)).
    std::vector<double> prob(states * k);
    for (std::size_t s = 0; s < states; ++s) {
        double row = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double v = std::exp(eig.log_entry[s * k + i] - eig.log_rho) * eig.right[eig.successor(s, i)];
            prob[s * k + i] = v;
            row += v;
        }
        for (std::size_t i = 0; i < k; ++i) {
            prob[s * k + i] /= row;
        }
    }

    std::size_t tail = 0;
    for (std::size_t j = 0; j < depth; ++j) {
        tail = tail * k + (j % k);
    }
    std::vector<std::size_t> state{tail};
    std::vector<double> weight{1.0};
    std::vector<double> last(1, 1.0);
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t size = state.size();
        std::vector<std::size_t> next_state(size * k);
        std::vector<double> next_weight(size * k);
        std::vector<double> next_last(size * k);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t s = 0; s < size; ++s) {
                const double p = prob[state[s] * k + i];
                next_state[i * size + s] = eig.successor(state[s], i);
                next_weight[i * size + s] = weight[s] * p;
                next_last[i * size + s] = p;
            }
        }
        state = std::move(next_state);
        weight = std::move(next_weight);
        last = std::move(next_last);
    }
    CylinderWeights out;
    out.k = k;
    out.n = n;
    out.weights = std::move(weight);
    out.first_transition = std::move(last);
    return out;
}

double cylinder_integral(const IFSInstance& inst, const CylinderWeights& nu, const Potential& phi)
{
    std::vector<std::uint8_t> w(nu.n);
    std::vector<std::uint8_t> rotated(nu.n);
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t idx = 0; idx < nu.weights.size(); ++idx) {
        if (nu.weights[idx] == 0.0) {
            continue;
        }
        index_to_symbols(idx, nu.k, w);
        std::rotate_copy(w.begin(), w.begin() + 1, w.end(), rotated.begin());
        const double z = cycle_fixed_point(inst, rotated);
        const double term = nu.weights[idx] * phi.at(inst, w[0], z);
        const double t = sum + term;
        comp += std::fabs(sum) >= std::fabs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return sum + comp;
}

double gibbs_integral(const IFSInstance& inst, const Potential& phi, std::size_t n)
{
    return cylinder_integral(inst, gibbs_cylinder(inst, n), phi);
}

double cylinder_pushforward(const IFSInstance& inst, const CylinderWeights& nu, const std::function<double(double)>& f)
{
    std::vector<std::uint8_t> w(nu.n);
    double sum = 0.0;
    for (std::size_t idx = 0; idx < nu.weights.size(); ++idx) {
        index_to_symbols(idx, nu.k, w);
        sum += nu.weights[idx] * f(cycle_fixed_point(inst, w));
    }
    return sum;
}

double cylinder_entropy(const CylinderWeights& nu)
{
    if (nu.first_transition.size() != nu.weights.size()) {
        throw std::invalid_argument("cylinder_entropy: transition probabilities not recorded");
    }
    double h = 0.0;
    for (std::size_t idx = 0; idx < nu.weights.size(); ++idx) {
        if (nu.weights[idx] > 0.0) {
            h -= nu.weights[idx] * std::log(nu.first_transition[idx]);
        }
    }
    return h;
}

DerivativeCheck pressure_derivative_check(const IFSInstance& inst, const Potential& phi, const Potential& psi,
                                          double h, std::size_t n)
{
    if (!(h > 0.0)) {
        throw std::invalid_argument("pressure_derivative_check: h must be positive");
    }
    DerivativeCheck out;
    const double up = pressure_transfer(inst, Potential::sum(phi, Potential::scaled(h, psi)), n).value;
    const double down = pressure_transfer(inst, Potential::sum(phi, Potential::scaled(-h, psi)), n).value;
    out.fd = (up - down) / (2.0 * h);
    const CylinderWeights nu =
        phi.is_normalized_weight_log() ? gibbs_cylinder(inst, n) : gibbs_from_transfer(inst, phi, n, n);
    out.gibbs = cylinder_integral(inst, nu, psi);
    return out;
}

void write_cylinder_csv(std::ostream& os, const CylinderWeights& nu)
{
    os << "word,weight\n";
    char buf[64];
    for (std::size_t idx = 0; idx < nu.weights.size(); ++idx) {
        const SymbolWord w = SymbolWord::from_index(idx, nu.k, nu.n);
        std::snprintf(buf, sizeof buf, ",%.17g\n", nu.weights[idx]);
        os << w.digits() << buf;
    }
}

} // namespace ifs
