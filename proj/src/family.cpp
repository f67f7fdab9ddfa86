#include "ifs/family.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ifs {

Piecewise Piecewise::single(Expr e)
{
    Piecewise pw;
    pw.pieces.push_back(std::move(e));
    return pw;
}

Piecewise Piecewise::parse(std::string_view source)
{
    std::string_view body = source;
    std::size_t base = 0;
    const auto first = body.find_first_not_of(" \t");
    if (first != std::string_view::npos && body.substr(first).starts_with("piecewise[")) {
        const auto close = body.find_last_of(']');
        if (close == std::string_view::npos || close < first + 10) {
            throw ParseError("piecewise: missing ']'", source.size());
        }
        base = first + 10;
        body = body.substr(base, close - base);
    }
    if (body.find('|') == std::string_view::npos) {
        return single(parse_expr(source));
    }
    std::vector<std::pair<std::string_view, std::size_t>> parts;
    std::size_t start = 0;
    while (true) {
        const auto bar = body.find('|', start);
        parts.emplace_back(body.substr(start, bar == std::string_view::npos ? bar : bar - start), base + start);
        if (bar == std::string_view::npos) {
            break;
        }
        start = bar + 1;
    }
    if (parts.size() % 2 == 0) {
        throw ParseError("piecewise: expected 'expr | breakpoint | expr ...'", source.size());
    }
    Piecewise pw;
    for (std::size_t j = 0; j < parts.size(); ++j) {
        const auto [text, offset] = parts[j];
        try {
            if (j % 2 == 0) {
                pw.pieces.push_back(parse_expr(text));
            } else {
                const Expr b = parse_expr(text);
                if (b.depends_on_x() || b.depends_on_p()) {
                    throw ParseError("piecewise: breakpoint must be a number", 0);
                }
                pw.breakpoints.push_back(b.eval(0.0, 0.0));
            }
        } catch (const ParseError& e) {
            throw ParseError(e.message(), offset + e.offset());
        }
    }
    for (std::size_t j = 0; j < pw.breakpoints.size(); ++j) {
        const double b = pw.breakpoints[j];
        if (!(b > 0.0 && b < 1.0) || (j > 0 && !(b > pw.breakpoints[j - 1]))) {
            throw ParseError("piecewise: breakpoints must increase strictly inside (0,1)", base);
        }
    }
    return pw;
}

std::size_t Piecewise::piece_index(double x) const
{
    std::size_t j = 0;
    while (j < breakpoints.size() && x >= breakpoints[j]) {
        ++j;
    }
    return j;
}

double Piecewise::eval(double x, double p) const { return pieces[piece_index(x)].eval(x, p); }

std::string Piecewise::str() const
{
    if (is_single()) {
        return pieces[0].str();
    }
    std::ostringstream os;
    os << "piecewise[";
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        if (j > 0) {
            os << " | " << shortest_repr(breakpoints[j - 1]) << " | ";
        }
        os << pieces[j].str();
    }
    os << "]";
    return os.str();
}

double Interval::midpoint() const
{
    if (!declared) {
        return 0.0;
    }
    return 0.5 * (lo + hi);
}

void FamilySpec::check() const
{
    if (maps.size() < 2) {
        throw std::invalid_argument("family needs at least 2 branches");
    }
    if (weights.size() != maps.size()) {
        throw std::invalid_argument("every branch needs exactly one map and one weight");
    }
    for (const Piecewise& w : weights) {
        if (w.pieces.empty() || w.pieces.size() != w.breakpoints.size() + 1) {
            throw std::invalid_argument("piecewise weight needs one more piece than breakpoints");
        }
        if (!std::is_sorted(w.breakpoints.begin(), w.breakpoints.end()) ||
            std::adjacent_find(w.breakpoints.begin(), w.breakpoints.end()) != w.breakpoints.end()) {
            throw std::invalid_argument("breakpoints must be strictly increasing");
        }
    }
    for (const Interval* iv : {&lambda_range, &theta_range}) {
        if (iv->declared && !(iv->lo <= iv->hi)) {
            throw std::invalid_argument("parameter interval has lo > hi");
        }
    }
}

PiecewiseCompiled::PiecewiseCompiled(const Piecewise& pw, double p) : breakpoints_(pw.breakpoints)
{
    for (const Expr& e : pw.pieces) {
        pieces_.emplace_back(e, p);
    }
}

IFSInstance::IFSInstance(std::vector<Branch> branches, double lambda, double theta)
    : branches_(std::move(branches)), lambda_(lambda), theta_(theta)
{
}

bool IFSInstance::weights_piecewise() const
{
    return std::any_of(branches_.begin(), branches_.end(),
                       [](const Branch& b) { return !b.weight.is_single(); });
}

IFSInstance bind(const FamilySpec& spec, double lambda, double theta)
{
    spec.check();
    if (spec.tied) {
        theta = lambda;
    }
    if (!spec.lambda_range.contains(lambda)) {
        throw BindError("lambda=" + std::to_string(lambda) + " outside declared interval");
    }
    if (!spec.theta_range.contains(theta)) {
        throw BindError("theta=" + std::to_string(theta) + " outside declared interval");
    }
    std::vector<Branch> branches;
    branches.reserve(spec.branches());
    for (std::size_t i = 0; i < spec.branches(); ++i) {
        Branch b;
        b.map = spec.maps[i].bind_p(lambda);
        b.derivative = diff_x(b.map);
        b.weight.breakpoints = spec.weights[i].breakpoints;
        for (const Expr& piece : spec.weights[i].pieces) {
            b.weight.pieces.push_back(piece.bind_p(theta));
        }
        b.map_fn = CompiledExpr(b.map, lambda);
        b.derivative_fn = CompiledExpr(b.derivative, lambda);
        b.weight_fn = PiecewiseCompiled(b.weight, theta);
        branches.push_back(std::move(b));
    }
    return IFSInstance(std::move(branches), lambda, theta);
}

ValidationError::ValidationError(const std::string& what, std::size_t branch, double x)
    : std::runtime_error(what + " (branch " + std::to_string(branch + 1) + ", x=" + std::to_string(x) + ")"),
      branch_(branch), x_(x)
{
}

ValidationReport validate(const IFSInstance& inst, std::size_t grid_n)
{
    if (grid_n < 2) {
        throw std::invalid_argument("validate: grid_n must be >= 2");
    }
    const std::size_t k = inst.k();
    ValidationReport r;
    r.grid_n = grid_n;
    r.lip.assign(k, 0.0);
    r.weight_sup.assign(k, -std::numeric_limits<double>::infinity());
    r.image_lo.assign(k, std::numeric_limits<double>::infinity());
    r.image_hi.assign(k, -std::numeric_limits<double>::infinity());
    r.derivative_lower_bound = std::numeric_limits<double>::infinity();
    r.min_weight = std::numeric_limits<double>::infinity();
    r.equal_derivative = true;

    for (std::size_t j = 0; j <= grid_n; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(grid_n);
        double weight_sum = 0.0;
        double first_derivative = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double t, dt, g;
            try {
                t = inst.map(i, x);
                dt = inst.derivative(i, x);
                g = inst.weight(i, x);
            } catch (const EvalError& e) {
                throw ValidationError(e.what(), i, x);
            }
            r.image_lo[i] = std::min(r.image_lo[i], t);
            r.image_hi[i] = std::max(r.image_hi[i], t);
            r.lip[i] = std::max(r.lip[i], std::fabs(dt));
            r.derivative_lower_bound = std::min(r.derivative_lower_bound, std::fabs(dt));
            r.weight_sup[i] = std::max(r.weight_sup[i], g);
            r.min_weight = std::min(r.min_weight, g);
            weight_sum += g;
            if (i == 0) {
                first_derivative = dt;
            } else if (std::fabs(dt - first_derivative) > 1e-12 * (1.0 + std::fabs(first_derivative))) {
                r.equal_derivative = false;
            }
        }
        r.normalization_residual = std::max(r.normalization_residual, std::fabs(weight_sum - 1.0));
    }

    r.contraction = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        r.contraction += r.weight_sup[i] * r.lip[i];
    }
    r.max_ratio = *std::max_element(r.lip.begin(), r.lip.end());
    if (r.max_ratio > 0.0 && r.max_ratio < 1.0) {
        r.holder_exponent = std::min(1.0, -std::log(r.max_ratio) / std::log(2.0));
    } else if (r.max_ratio == 0.0) {
        r.holder_exponent = 1.0;
    } else {
        r.holder_exponent = 0.0;
    }

    r.maps_into_unit = true;
    for (std::size_t i = 0; i < k; ++i) {
        if (r.image_lo[i] < 0.0 || r.image_hi[i] > 1.0) {
            r.maps_into_unit = false;
        }
    }

    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.image_lo[a] < r.image_lo[b]; });
    r.disjoint = true;
    for (std::size_t j = 1; j < k; ++j) {
        // closed images: touching endpoints intersect
        if (r.image_lo[order[j]] <= r.image_hi[order[j - 1]]) {
            r.disjoint = false;
        }
    }

    if (inst.weights_piecewise()) {
        r.warnings.emplace_back("weights discontinuous at breakpoints");
    }
    return r;
}

} // namespace ifs
