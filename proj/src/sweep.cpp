#include "ifs/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

namespace ifs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn)
{
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                fn(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

std::string validation_failure(const ValidationReport& r)
{
    std::string msg;
    auto add = [&](const std::string& s) { msg += (msg.empty() ? "validation: " : "; ") + s; };
    char buf[96];
    if (!r.contraction_ok()) {
        std::snprintf(buf, sizeof buf, "contraction L=%.6g", r.contraction);
        add(buf);
    }
    if (!r.normalization_ok()) {
        std::snprintf(buf, sizeof buf, "normalization residual %.3g", r.normalization_residual);
        add(buf);
    }
    if (!r.weights_positive()) {
        add("non-positive weight");
    }
    if (!r.maps_into_unit) {
        add("maps leave [0,1]");
    }
    return msg;
}

double piecewise_integrand(const PiecewiseCompiled& f, const DiscreteMeasure& nu, double* second_moment)
{
    double s1 = 0.0;
    double s2 = 0.0;
    for (const Atom& a : nu.atoms()) {
        const double v = f(a.position);
        s1 += a.weight * v;
        s2 += a.weight * v * v;
    }
    *second_moment = s2;
    return s1;
}

} // namespace

const char* to_string(SweepParameter p)
{
    switch (p) {
    case SweepParameter::Lambda: return "lambda";
    case SweepParameter::Theta: return "theta";
    case SweepParameter::Both: return "both";
    }
    return "?";
}

const char* to_string(Quantity q)
{
    switch (q) {
    case Quantity::Integral: return "integral";
    case Quantity::BowenDimension: return "bowen_dimension";
    case Quantity::MeasureDimension: return "measure_dimension";
    case Quantity::Pressure: return "pressure";
    }
    return "?";
}

const char* to_string(Engine e) { return e == Engine::Chaos ? "chaos" : "depth"; }

const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Bounded: return "bounded";
    case Verdict::Diverging: return "diverging";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

SweepParameter parse_sweep_parameter(std::string_view s)
{
    if (s == "lambda") {
        return SweepParameter::Lambda;
    }
    if (s == "theta") {
        return SweepParameter::Theta;
    }
    if (s == "both") {
        return SweepParameter::Both;
    }
    throw std::invalid_argument("unknown sweep parameter '" + std::string(s) + "'");
}

Quantity parse_quantity(std::string_view s)
{
    for (Quantity q : {Quantity::Integral, Quantity::BowenDimension, Quantity::MeasureDimension, Quantity::Pressure}) {
        if (s == to_string(q)) {
            return q;
        }
    }
    throw std::invalid_argument("unknown quantity '" + std::string(s) + "'");
}

double Grid::at(std::size_t j) const
{
    if (j + 1 == points) {
        return hi;
    }
    return lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(points - 1);
}

void SweepSpec::check() const
{
    family.check();
    if (!(grid.lo < grid.hi)) {
        throw std::invalid_argument("sweep grid needs lo < hi");
    }
    if (grid.points < 2) {
        throw std::invalid_argument("sweep grid needs at least 2 points");
    }
    auto inside = [&](const Interval& iv, const char* name) {
        if (iv.declared && !(iv.contains(grid.lo) && iv.contains(grid.hi))) {
            throw std::invalid_argument(std::string("sweep grid leaves the declared ") + name + " interval");
        }
    };
    if (parameter != SweepParameter::Theta) {
        inside(family.lambda_range, "lambda");
    }
    if (parameter != SweepParameter::Lambda || family.tied) {
        inside(family.tied ? family.lambda_range : family.theta_range, "theta");
    }
}

std::pair<double, double> SweepSpec::parameters_at(double v) const
{
    switch (parameter) {
    case SweepParameter::Lambda: return {v, family.tied ? v : fixed_theta};
    case SweepParameter::Theta: return {family.tied ? v : fixed_lambda, v};
    case SweepParameter::Both: return {v, v};
    }
    return {v, v};
}

double integrand_lipschitz(const Piecewise& f, double p, std::size_t grid_n)
{
    double lip = 0.0;
    for (std::size_t j = 0; j < f.pieces.size(); ++j) {
        const CompiledExpr d(diff_x(f.pieces[j]), p);
        const double a = j == 0 ? 0.0 : f.breakpoints[j - 1];
        const double b = j == f.breakpoints.size() ? 1.0 : f.breakpoints[j];
        for (std::size_t m = 0; m <= grid_n; ++m) {
            const double x = a + (b - a) * static_cast<double>(m) / static_cast<double>(grid_n);
            lip = std::max(lip, std::fabs(d(x)));
        }
    }
    return lip;
}

double depth_error_bound(const IFSInstance& inst, const ValidationReport& report, double lip_f, double x0,
                         std::size_t n)
{
    const double L = report.contraction;
    if (!(L < 1.0)) {
        return std::numeric_limits<double>::infinity();
    }
    const double w1 = w1_distance(DiscreteMeasure::dirac(x0), markov_step(inst, DiscreteMeasure::dirac(x0)));
    return std::pow(L, static_cast<double>(n)) / (1.0 - L) * w1 * lip_f;
}

SweepRow evaluate_point(const SweepSpec& spec, double v, std::size_t index)
{
    const EngineConfig& e = spec.engine;
    SweepRow row;
    row.param = v;
    row.value = kNaN;
    row.err_estimate = kNaN;
    row.seed = e.seed;
    switch (spec.quantity) {
    case Quantity::Integral:
        row.engine = to_string(e.engine);
        row.depth_or_samples = e.engine == Engine::Chaos ? e.samples : e.depth;
        if (e.engine == Engine::Chaos) {
            row.seed = e.seed + index;
        }
        break;
    case Quantity::BowenDimension:
    case Quantity::Pressure:
        row.engine = to_string(e.method);
        row.depth_or_samples = e.pressure_depth;
        break;
    case Quantity::MeasureDimension:
        row.engine = "gibbs";
        row.depth_or_samples = e.depth;
        break;
    }
    try {
        const auto [lambda, theta] = spec.parameters_at(v);
        const IFSInstance inst = bind(spec.family, lambda, theta);
        const ValidationReport report = validate(inst);
        if (!report.valid()) {
            row.error = validation_failure(report);
            return row;
        }
        switch (spec.quantity) {
        case Quantity::Integral: {
            const PiecewiseCompiled f(spec.integrand, v);
            if (e.engine == Engine::Chaos) {
                const DiscreteMeasure nu = chaos_game(inst, e.x0, e.burn_in, e.samples, row.seed);
                double m2 = 0.0;
                row.value = piecewise_integrand(f, nu, &m2);
                const double var = std::max(0.0, m2 - row.value * row.value);
                row.err_estimate = std::sqrt(var / static_cast<double>(e.samples));
            } else {
                row.value = integrate_depth(inst, f, e.x0, e.depth);
                row.err_estimate =
                    depth_error_bound(inst, report, integrand_lipschitz(spec.integrand, v), e.x0, e.depth);
            }
            break;
        }
        case Quantity::BowenDimension: {
            const DimensionResult r = bowen_root(inst, e.method, e.pressure_depth, e.tol);
            row.value = r.t_star;
            row.err_estimate = 0.5 * (r.bracket_hi - r.bracket_lo);
            break;
        }
        case Quantity::MeasureDimension: {
            const DimensionResult r = measure_dimension(inst, e.depth);
            row.value = r.hd_measure;
            row.err_estimate = e.depth > 1 ? std::fabs(r.hd_measure - measure_dimension(inst, e.depth - 1).hd_measure)
                                           : kNaN;
            break;
        }
        case Quantity::Pressure: {
            const PressureEstimate p = e.method == PressureMethod::Periodic
                                           ? pressure_periodic(inst, spec.potential, e.pressure_depth)
                                           : pressure_transfer(inst, spec.potential, e.pressure_depth);
            row.value = p.value;
            row.err_estimate = p.gap;
            break;
        }
        }
    } catch (const std::exception& ex) {
        row.value = kNaN;
        row.err_estimate = kNaN;
        row.error = ex.what();
    }
    return row;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec)
{
    spec.check();
    std::vector<SweepRow> rows(spec.grid.points);
    parallel_for(rows.size(), spec.engine.threads,
                 [&](std::size_t j) { rows[j] = evaluate_point(spec, spec.grid.at(j), j); });
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    os << "param,value,err_estimate,engine,depth_or_samples,seed,error\n";
    char buf[256];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s,%zu,%llu,", r.param, r.value, r.err_estimate,
                      r.engine.c_str(), r.depth_or_samples, static_cast<unsigned long long>(r.seed));
        os << buf;
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << err << '\n';
    }
}

std::vector<double> dyadic_ladder(double length, int lo_exp, int hi_exp)
{
    std::vector<double> h;
    for (int e = lo_exp; e <= hi_exp; ++e) {
        h.push_back(std::ldexp(length, -e));
    }
    return h;
}

Verdict classify_growth(double exponent)
{
    if (exponent >= -0.1) {
        return Verdict::Bounded;
    }
    if (exponent <= -0.5) {
        return Verdict::Diverging;
    }
    return Verdict::Inconclusive;
}

namespace {

// Central stencils: offsets in units of h and coefficients; divide by h^d.
struct Stencil {
    std::vector<int> offsets;
    std::vector<double> coeffs;
    double scale; // extra divisor
};

Stencil central_stencil(std::size_t order)
{
    switch (order) {
    case 1: return {{-1, 1}, {-1.0, 1.0}, 2.0};
    case 2: return {{-1, 0, 1}, {1.0, -2.0, 1.0}, 1.0};
    case 3: return {{-2, -1, 1, 2}, {-1.0, 2.0, -2.0, 1.0}, 2.0};
    default: throw std::invalid_argument("difference order must be 1, 2 or 3");
    }
}

struct Lattice {
    double probe;
    double unit;
    std::vector<long> probe_steps; // probe points as multiples of unit
    std::vector<long> ratios;      // h / unit per ladder step
};

Lattice make_lattice(double probe, const std::vector<double>& ladder, double window)
{
    Lattice lat;
    lat.probe = probe;
    lat.unit = *std::min_element(ladder.begin(), ladder.end());
    for (double h : ladder) {
        const double r = h / lat.unit;
        const long ri = std::lround(r);
        if (std::fabs(r - static_cast<double>(ri)) > 1e-9 * r) {
            throw std::invalid_argument("ladder steps must be integer multiples of the smallest step");
        }
        lat.ratios.push_back(ri);
    }
    const long half = static_cast<long>(std::floor(window / lat.unit + 1e-9));
    for (long j = -half; j <= half; ++j) {
        lat.probe_steps.push_back(j);
    }
    return lat;
}

void check_ladder(std::size_t order, const std::vector<double>& ladder)
{
    central_stencil(order);
    if (ladder.size() < 4) {
        throw std::invalid_argument("ladder needs at least 4 steps");
    }
    for (double h : ladder) {
        if (!(h > 0.0)) {
            throw std::invalid_argument("ladder steps must be positive");
        }
    }
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

// Distinct lattice offsets (in units) needed by every probe and step.
std::vector<long> needed_offsets(const Lattice& lat, const Stencil& st)
{
    std::vector<long> out;
    for (long c : lat.probe_steps) {
        for (long r : lat.ratios) {
            for (int o : st.offsets) {
                out.push_back(c + o * r);
            }
        }
    }
    if (st.offsets.size() == 2) {
        out.push_back(0); // one-sided order-1 quotients use the probe itself
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

SmoothnessDiagnostic assemble(const Lattice& lat, const Stencil& st, std::size_t order,
                              const std::vector<double>& ladder, double window, const std::map<long, double>& values,
                              double value_error)
{
    SmoothnessDiagnostic d;
    d.order = order;
    d.probe = lat.probe;
    d.window = window;
    d.ladder = ladder;
    d.evaluations = values.size();
    double max_abs = 0.0;
    for (const auto& [j, v] : values) {
        max_abs = std::max(max_abs, std::fabs(v));
    }
    const double per_value = value_error + 8.0 * std::numeric_limits<double>::epsilon() * max_abs;
    double coeff_sum = 0.0;
    for (double c : st.coeffs) {
        coeff_sum += std::fabs(c);
    }
    bool resolved = false;
    std::vector<double> log_h;
    std::vector<double> log_q;
    for (std::size_t s = 0; s < ladder.size(); ++s) {
        const double h = ladder[s];
        const double hd = std::pow(h, static_cast<double>(order));
        double sup = 0.0;
        for (long c : lat.probe_steps) {
            double acc = 0.0;
            for (std::size_t m = 0; m < st.offsets.size(); ++m) {
                acc += st.coeffs[m] * values.at(c + st.offsets[m] * lat.ratios[s]);
            }
            const double q = acc / (st.scale * hd);
            d.rows.push_back({h, lat.probe + static_cast<double>(c) * lat.unit, q});
            sup = std::max(sup, std::fabs(q));
        }
        d.sup_quotient.push_back(sup);
        d.uncertainty.push_back(coeff_sum * per_value / (st.scale * hd));
        resolved = resolved || sup > d.uncertainty.back();
        if (order == 1) {
            const double f0 = values.at(0);
            d.one_sided.emplace_back((values.at(lat.ratios[s]) - f0) / h, (f0 - values.at(-lat.ratios[s])) / h);
        }
        log_h.push_back(std::log(h));
        log_q.push_back(std::log(std::max(sup, std::numeric_limits<double>::min())));
    }
    d.resolved = resolved;
    d.growth_exponent = resolved ? least_squares_slope(log_h, log_q) : 0.0;
    d.verdict = classify_growth(d.growth_exponent);
    return d;
}

double noise_threshold(std::size_t order, const std::vector<double>& ladder)
{
    const double hmin = *std::min_element(ladder.begin(), ladder.end());
    return 0.01 * std::pow(hmin, static_cast<double>(order));
}

} // namespace

SmoothnessDiagnostic smoothness_diagnostic(const std::function<Sample(double)>& quantity, double probe,
                                           std::size_t order, const std::vector<double>& ladder, double window)
{
    check_ladder(order, ladder);
    const Stencil st = central_stencil(order);
    const Lattice lat = make_lattice(probe, ladder, window);
    const double threshold = noise_threshold(order, ladder);
    std::map<long, double> values;
    double max_err = 0.0;
    for (long j : needed_offsets(lat, st)) {
        const Sample s = quantity(probe + static_cast<double>(j) * lat.unit);
        max_err = std::max(max_err, s.error);
        values[j] = s.value;
    }
    if (!(max_err < threshold)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "noise floor violated: error %.3g is not below 0.01*min(h^d) = %.3g", max_err,
                      threshold);
        throw NoiseFloorError(buf);
    }
    SmoothnessDiagnostic d = assemble(lat, st, order, ladder, window, values, max_err);
    d.max_error = max_err;
    d.noise_threshold = threshold;
    return d;
}

SmoothnessDiagnostic smoothness_diagnostic(const SweepSpec& spec, double probe, std::size_t order,
                                           const std::vector<double>& ladder, const DiagnosticOptions& opts)
{
    if (spec.quantity != Quantity::Integral) {
        throw std::invalid_argument("diagnostics support the integral quantity only");
    }
    spec.check();
    check_ladder(order, ladder);
    const Stencil st = central_stencil(order);
    const double window = opts.window.value_or(*std::max_element(ladder.begin(), ladder.end()));
    const Lattice lat = make_lattice(probe, ladder, window);
    const std::vector<long> offsets = needed_offsets(lat, st);

    const double reach = static_cast<double>(std::max(std::abs(offsets.front()), std::abs(offsets.back()))) * lat.unit;
    if (probe - reach < spec.grid.lo - 1e-12 || probe + reach > spec.grid.hi + 1e-12) {
        throw std::invalid_argument("probe window and stencil leave the grid interval");
    }

    std::vector<double> contraction(offsets.size());
    std::vector<std::string> failures(offsets.size());
    parallel_for(offsets.size(), opts.threads, [&](std::size_t i) {
        const double v = probe + static_cast<double>(offsets[i]) * lat.unit;
        const auto [lambda, theta] = spec.parameters_at(v);
        const ValidationReport r = validate(bind(spec.family, lambda, theta));
        contraction[i] = r.contraction;
        if (!r.valid()) {
            failures[i] = validation_failure(r);
        }
    });
    for (const std::string& f : failures) {
        if (!f.empty()) {
            throw DomainError("diagnostic: " + f);
        }
    }
    const double L = *std::max_element(contraction.begin(), contraction.end());
    const double threshold = noise_threshold(order, ladder);

    std::size_t n = 0;
    if (opts.depth) {
        n = *opts.depth;
    } else {
        n = 1;
        while (std::pow(L, static_cast<double>(n)) >= threshold && n < opts.max_depth) {
            ++n;
        }
    }
    const double err = std::pow(L, static_cast<double>(n));
    if (!(err < threshold)) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "noise floor not certifiable: L^n = %.3g at depth %zu is not below 0.01*min(h^d) = %.3g", err, n,
                      threshold);
        throw NoiseFloorError(buf);
    }

    std::vector<double> values(offsets.size());
    parallel_for(offsets.size(), opts.threads, [&](std::size_t i) {
        const double v = probe + static_cast<double>(offsets[i]) * lat.unit;
        const auto [lambda, theta] = spec.parameters_at(v);
        const IFSInstance inst = bind(spec.family, lambda, theta);
        values[i] = integrate_depth(inst, PiecewiseCompiled(spec.integrand, v), spec.engine.x0, n);
    });
    std::map<long, double> table;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        table[offsets[i]] = values[i];
    }
    SmoothnessDiagnostic d = assemble(lat, st, order, ladder, window, table, err);
    d.depth = n;
    d.max_error = err;
    d.noise_threshold = threshold;
    return d;
}

void write_diagnostic_csv(std::ostream& os, const SmoothnessDiagnostic& d)
{
    os << "h,quotient,order,probe\n";
    char buf[160];
    for (const QuotientRow& r : d.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,%.17g\n", r.h, r.quotient, d.order, r.probe);
        os << buf;
    }
}

std::vector<std::string> preset_names() { return {"simple_4_1", "cantor", "ex_4_3", "ex_4_4"}; }

namespace {

Piecewise step_weight(const char* left, const char* right)
{
    Piecewise pw;
    pw.breakpoints = {0.5};
    pw.pieces = {parse_expr(left), parse_expr(right)};
    return pw;
}

SweepSpec example_preset(const std::string& name, int n)
{
    const std::string phi = "phi(p - 0.25, " + std::to_string(n) + ")";
    SweepSpec s;
    s.family.name = name;
    s.family.maps = {parse_expr("p*x + " + phi + " + 0.01"), parse_expr("p*x + 2/3 + " + phi)};
    s.family.weights = {step_weight("p", "1 - p"), step_weight("1 - p", "p")};
    s.family.lambda_range = {1.0 / 6.0, 1.0 / 3.0, true};
    s.family.theta_range = s.family.lambda_range;
    s.family.default_lambda = 0.25;
    s.family.default_theta = 0.25;
    s.family.tied = true;
    s.parameter = SweepParameter::Lambda;
    s.fixed_lambda = 0.25;
    s.fixed_theta = 0.25;
    s.grid = {1.0 / 6.0, 1.0 / 3.0, 161};
    s.quantity = Quantity::Integral;
    s.integrand = step_weight("-x", "x*x");
    s.critical_point = 0.25;
    return s;
}

} // namespace

SweepSpec preset(std::string_view name)
{
    if (name == "simple_4_1") {
        SweepSpec s;
        s.family.name = "simple_4_1";
        s.family.maps = {parse_expr("p*x"), parse_expr("p*x + p")};
        s.family.weights = {Piecewise::single(parse_expr("p")), Piecewise::single(parse_expr("1 - p"))};
        s.family.lambda_range = {0.01, 0.5, true};
        s.family.theta_range = {0.01, 0.99, true};
        s.family.default_lambda = 0.5;
        s.family.default_theta = 0.5;
        s.parameter = SweepParameter::Theta;
        s.fixed_lambda = 0.5;
        s.fixed_theta = 0.5;
        s.grid = {0.1, 0.9, 9};
        return s;
    }
    if (name == "cantor") {
        SweepSpec s;
        s.family.name = "cantor";
        s.family.maps = {parse_expr("(1/3 + p)*x"), parse_expr("(1/3 + p)*x + 2/3 - p")};
        s.family.weights = {Piecewise::single(parse_expr("p")), Piecewise::single(parse_expr("1 - p"))};
        s.family.lambda_range = {0.2 - 1.0 / 3.0, 0.45 - 1.0 / 3.0, true};
        s.family.theta_range = {0.01, 0.99, true};
        s.family.default_lambda = 0.0;
        s.family.default_theta = 0.5;
        s.parameter = SweepParameter::Lambda;
        s.fixed_lambda = 0.0;
        s.fixed_theta = 0.5;
        s.grid = {s.family.lambda_range.lo, s.family.lambda_range.hi, 16};
        s.quantity = Quantity::BowenDimension;
        return s;
    }
    if (name == "ex_4_3") {
        return example_preset("ex_4_3", 3);
    }
    if (name == "ex_4_4") {
        return example_preset("ex_4_4", 1);
    }
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

} // namespace ifs
