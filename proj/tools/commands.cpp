#include "commands.hpp"

#include "ifs/config.hpp"
#include "ifs/rng.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace ifs::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string preset;
    double lambda = 0.0;
    double theta = 0.0;
    std::uint64_t seed = 0;
    std::size_t depth = 0;
    std::size_t samples = 0;
    std::string method;
    std::string engine;
    double tol = 0.0;
    std::string out;
    std::size_t threads = 1;
    bool emit_config = false;

    double x0 = 0.0;
    std::size_t burn_in = 0;
    double merge_tol = 0.0;
    double prune_eps = 0.0;
    std::string f;
    std::string potential;
    std::string parameter;
    std::string quantity;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t points = 0;
    double probe = 0.0;
    std::size_t order = 0;
    double window = 0.0;
    std::string ladder;
    std::string ladder_exps;
    std::size_t max_depth = 26;
};

std::string num(double v) { return shortest_repr(v); }

std::string timestamp()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Runner {
public:
    Runner(const CLI::App& sub, Options& o, std::ostream& out) : sub_(sub), o_(o), stdout_(out) {}

    bool given(const char* flag) const
    {
        const CLI::Option* opt = sub_.get_option_no_throw(flag);
        return opt != nullptr && opt->count() > 0;
    }

    ConfigDocument load() const
    {
        ConfigDocument doc;
        if (given("--config")) {
            doc = load_config(o_.config);
        } else if (given("--preset")) {
            try {
                doc = preset_document(o_.preset);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        } else {
            throw UsageError("one of --config or --preset is required");
        }
        apply_overrides(doc);
        return doc;
    }

    void apply_overrides(ConfigDocument& doc) const
    {
        SweepSpec& s = doc.spec;
        EngineConfig& e = s.engine;
        if (given("--seed")) e.seed = o_.seed;
        if (given("--depth")) {
            e.depth = o_.depth;
            e.pressure_depth = o_.depth;
        }
        if (given("--samples")) e.samples = o_.samples;
        if (given("--tol")) e.tol = o_.tol;
        if (given("--threads")) e.threads = std::max<std::size_t>(1, o_.threads);
        if (given("--x0")) e.x0 = o_.x0;
        if (given("--burn-in")) e.burn_in = o_.burn_in;
        for (const char* flag : {"--engine", "--method"}) {
            if (!given(flag)) {
                continue;
            }
            const std::string& m = std::string(flag) == "--engine" ? o_.engine : o_.method;
            if (m == "depth") {
                e.engine = Engine::Depth;
            } else if (m == "chaos") {
                e.engine = Engine::Chaos;
            } else if (m == "transfer") {
                e.method = PressureMethod::Transfer;
            } else if (m == "periodic") {
                e.method = PressureMethod::Periodic;
            } else {
                throw UsageError(std::string(flag) + " must be one of depth, chaos, transfer, periodic");
            }
        }
        if (given("--f")) s.integrand = Piecewise::parse(o_.f);
        if (given("--potential")) s.potential = parse_potential(o_.potential);
        if (given("--parameter")) s.parameter = parse_sweep_parameter(o_.parameter);
        if (given("--quantity")) s.quantity = parse_quantity(o_.quantity);
        if (given("--lo")) s.grid.lo = o_.lo;
        if (given("--hi")) s.grid.hi = o_.hi;
        if (given("--points")) s.grid.points = o_.points;
        if (given("--lambda")) s.fixed_lambda = o_.lambda;
        if (given("--theta")) s.fixed_theta = o_.theta;
        if (given("--out")) doc.output = o_.out;
    }

    std::pair<double, double> parameters(const ConfigDocument& doc) const
    {
        const FamilySpec& fam = doc.spec.family;
        const double lambda = given("--lambda") ? o_.lambda : fam.default_lambda;
        const double theta = fam.tied ? lambda : (given("--theta") ? o_.theta : fam.default_theta);
        return {lambda, theta};
    }

    std::ostream& open(const ConfigDocument& doc)
    {
        if (doc.output == "-" || doc.output.empty()) {
            return stdout_;
        }
        file_.open(doc.output);
        if (!file_) {
            throw UsageError("cannot open output '" + doc.output + "'");
        }
        return file_;
    }

    void metadata(std::ostream& os, const ConfigDocument& doc, const std::string& command,
                  const std::vector<std::string>& extra) const
    {
        const EngineConfig& e = doc.spec.engine;
        os << "# ifs " << kVersion << " " << command << "\n";
        os << "# system=" << doc.spec.family.name << "\n";
        os << "# seed=" << e.seed << " rng=" << Xoshiro256::kName << "\n";
        for (const std::string& line : extra) {
            os << "# " << line << "\n";
        }
        os << "# timestamp=" << timestamp() << "\n";
    }

private:
    const CLI::App& sub_;
    Options& o_;
    std::ostream& stdout_;
    std::ofstream file_;
};

std::string pass(bool ok) { return ok ? "PASS" : "FAIL"; }

int cmd_validate(Runner& r, std::ostream&)
{
    const ConfigDocument doc = r.load();
    const auto [lambda, theta] = r.parameters(doc);
    const IFSInstance inst = bind(doc.spec.family, lambda, theta);
    const ValidationReport v = validate(inst);
    std::ostream& os = r.open(doc);
    os << "system=" << doc.spec.family.name << "\n";
    os << "lambda=" << num(lambda) << "\n";
    os << "theta=" << num(theta) << "\n";
    os << "L=" << num(v.contraction) << "\n";
    os << "contraction=" << pass(v.contraction_ok()) << "\n";
    os << "normalization_residual=" << num(v.normalization_residual) << "\n";
    os << "normalization=" << pass(v.normalization_ok()) << "\n";
    os << "min_weight=" << num(v.min_weight) << "\n";
    os << "weights_positive=" << pass(v.weights_positive()) << "\n";
    os << "maps_into_unit=" << pass(v.maps_into_unit) << "\n";
    for (std::size_t i = 0; i < v.lip.size(); ++i) {
        os << "branch" << i + 1 << ".lip=" << num(v.lip[i]) << " image=[" << num(v.image_lo[i]) << ","
           << num(v.image_hi[i]) << "] weight_sup=" << num(v.weight_sup[i]) << "\n";
    }
    os << "disjoint=" << (v.disjoint ? "yes" : "no") << "\n";
    os << "derivative_lower_bound=" << num(v.derivative_lower_bound) << "\n";
    os << "max_ratio=" << num(v.max_ratio) << "\n";
    os << "holder_exponent=" << num(v.holder_exponent) << "\n";
    os << "equal_derivative=" << (v.equal_derivative ? "yes" : "no") << "\n";
    for (const std::string& w : v.warnings) {
        os << "warning=" << w << "\n";
    }
    os << "valid=" << pass(v.valid()) << "\n";
    return v.valid() ? kOk : kDomainFailure;
}

void require_valid(const ValidationReport& v, std::ostream& err)
{
    if (!v.valid()) {
        err << "error: instance fails validation (contraction=" << pass(v.contraction_ok())
            << " normalization=" << pass(v.normalization_ok()) << " weights_positive=" << pass(v.weights_positive())
            << " maps_into_unit=" << pass(v.maps_into_unit) << ")\n";
        throw DomainError("validation failed");
    }
}

int cmd_measure(Runner& r, const Options& o, std::ostream& err)
{
    const ConfigDocument doc = r.load();
    const auto [lambda, theta] = r.parameters(doc);
    const IFSInstance inst = bind(doc.spec.family, lambda, theta);
    require_valid(validate(inst), err);
    const EngineConfig& e = doc.spec.engine;
    EvolveConfig cfg;
    cfg.merge_tol = r.given("--merge-tol") ? o.merge_tol : 0.0;
    cfg.prune_eps = r.given("--prune-eps") ? o.prune_eps : 0.0;
    const bool chaos = e.engine == Engine::Chaos;
    const DiscreteMeasure nu =
        chaos ? chaos_game(inst, e.x0, e.burn_in, e.samples, e.seed) : depth_n_measure(inst, e.x0, e.depth, cfg);
    std::ostream& os = r.open(doc);
    std::vector<std::string> extra{"lambda=" + num(lambda) + " theta=" + num(theta), "x0=" + num(e.x0)};
    if (chaos) {
        extra.push_back("method=chaos samples=" + std::to_string(e.samples) + " burn_in=" + std::to_string(e.burn_in));
    } else {
        extra.push_back("method=depth depth=" + std::to_string(e.depth) + " merge_tol=" + num(cfg.merge_tol) +
                        " prune_eps=" + num(cfg.prune_eps));
    }
    r.metadata(os, doc, "measure", extra);
    write_measure_csv(os, nu);
    return kOk;
}

int cmd_integrate(Runner& r, std::ostream& err)
{
    const ConfigDocument doc = r.load();
    const auto [lambda, theta] = r.parameters(doc);
    SweepSpec spec = doc.spec;
    spec.quantity = Quantity::Integral;
    spec.parameter = SweepParameter::Lambda;
    spec.fixed_theta = theta;
    (void)bind(spec.family, lambda, theta);
    const SweepRow row = evaluate_point(spec, lambda, 0);
    std::ostream& os = r.open(doc);
    const EngineConfig& e = spec.engine;
    r.metadata(os, doc, "integrate",
               {"lambda=" + num(lambda) + " theta=" + num(theta), "f=" + spec.integrand.str(),
                std::string("method=") + to_string(e.engine) + " depth=" + std::to_string(e.depth) +
                    " samples=" + std::to_string(e.samples) + " burn_in=" + std::to_string(e.burn_in) +
                    " x0=" + num(e.x0)});
    write_sweep_csv(os, {row});
    if (!row.error.empty()) {
        err << "error: " << row.error << "\n";
        return kDomainFailure;
    }
    return kOk;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

int cmd_pressure(Runner& r, std::ostream&)
{
    const ConfigDocument doc = r.load();
    const auto [lambda, theta] = r.parameters(doc);
    const IFSInstance inst = bind(doc.spec.family, lambda, theta);
    const EngineConfig& e = doc.spec.engine;
    const Potential& phi = doc.spec.potential;
    const PressureEstimate p = e.method == PressureMethod::Periodic ? pressure_periodic(inst, phi, e.pressure_depth)
                                                                    : pressure_transfer(inst, phi, e.pressure_depth);
    std::ostream& os = r.open(doc);
    r.metadata(os, doc, "pressure",
               {"potential=" + phi.str(),
                std::string("method=") + to_string(e.method) + " depth=" + std::to_string(e.pressure_depth)});
    os << "lambda,theta,potential,method,depth,value,gap,iterations\n";
    os << num(lambda) << "," << num(theta) << "," << quoted(phi.str()) << "," << to_string(p.method) << ","
       << p.depth << "," << num(p.value) << "," << num(p.gap) << "," << p.iterations << "\n";
    return kOk;
}

int cmd_dimension(Runner& r, std::ostream& err)
{
    const ConfigDocument doc = r.load();
    const auto [lambda, theta] = r.parameters(doc);
    const IFSInstance inst = bind(doc.spec.family, lambda, theta);
    const EngineConfig& e = doc.spec.engine;
    const std::size_t depth = r.given("--depth") ? e.pressure_depth : 10;
    const double tol = r.given("--tol") ? e.tol : 1e-10;
    DimensionResult res = bowen_root(inst, e.method, depth, tol);
    std::string note = "hd_measure=computed";
    try {
        const DimensionResult m = measure_dimension(inst, depth);
        res.h = m.h;
        res.chi = m.chi;
        res.hd_measure = m.hd_measure;
    } catch (const DomainError& ex) {
        note = std::string("hd_measure=skipped (") + ex.what() + ")";
        err << "warning: " << ex.what() << "\n";
    }
    std::ostream& os = r.open(doc);
    r.metadata(os, doc, "dimension",
               {std::string("method=") + to_string(e.method) + " depth=" + std::to_string(depth) + " tol=" + num(tol),
                note});
    write_dimension_header(os);
    write_dimension_row(os, lambda, theta, res);
    return kOk;
}

int cmd_cylinders(Runner& r, std::ostream&)
{
    const ConfigDocument doc = r.load();
    const auto [lambda, theta] = r.parameters(doc);
    const IFSInstance inst = bind(doc.spec.family, lambda, theta);
    const EngineConfig& e = doc.spec.engine;
    const Potential& phi = doc.spec.potential;
    const std::size_t n = r.given("--depth") ? e.depth : 8;
    const CylinderWeights nu =
        phi.is_normalized_weight_log() ? gibbs_cylinder(inst, n) : gibbs_from_transfer(inst, phi, n, std::min<std::size_t>(n, 8));
    std::ostream& os = r.open(doc);
    r.metadata(os, doc, "cylinders", {"potential=" + phi.str(), "depth=" + std::to_string(n)});
    write_cylinder_csv(os, nu);
    return kOk;
}

int cmd_sweep(Runner& r, std::ostream&)
{
    const ConfigDocument doc = r.load();
    const SweepSpec& s = doc.spec;
    const std::vector<SweepRow> rows = run_sweep(s);
    std::ostream& os = r.open(doc);
    const EngineConfig& e = s.engine;
    r.metadata(os, doc, "sweep",
               {std::string("parameter=") + to_string(s.parameter) + " lo=" + num(s.grid.lo) + " hi=" + num(s.grid.hi) +
                    " points=" + std::to_string(s.grid.points),
                std::string("quantity=") + to_string(s.quantity) +
                    (s.quantity == Quantity::Integral ? " f=" + s.integrand.str() : "") +
                    (s.quantity == Quantity::Pressure ? " potential=" + s.potential.str() : ""),
                std::string("engine=") + to_string(e.engine) + " method=" + to_string(e.method) +
                    " depth=" + std::to_string(e.depth) + " pressure_depth=" + std::to_string(e.pressure_depth) +
                    " samples=" + std::to_string(e.samples) + " tol=" + num(e.tol),
                "seeds=base+grid_index"});
    write_sweep_csv(os, rows);
    return kOk;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw UsageError("--ladder: cannot parse '" + item + "'");
        }
    }
    return out;
}

int cmd_diagnose(Runner& r, const Options& o, std::ostream&)
{
    const ConfigDocument doc = r.load();
    const SweepSpec& s = doc.spec;
    const double length = s.grid.hi - s.grid.lo;
    double probe = 0.5 * (s.grid.lo + s.grid.hi);
    if (r.given("--probe")) {
        probe = o.probe;
    } else if (doc.diagnostic.probe) {
        probe = *doc.diagnostic.probe;
    } else if (s.critical_point) {
        probe = *s.critical_point;
    }
    const std::size_t order = r.given("--order") ? o.order : doc.diagnostic.order;
    std::vector<double> ladder;
    if (r.given("--ladder")) {
        ladder = parse_list(o.ladder);
    } else if (r.given("--ladder-exps")) {
        int lo = 0;
        int hi = 0;
        char sep = 0;
        std::stringstream ss(o.ladder_exps);
        if (!(ss >> lo >> sep >> hi) || sep != ':' || lo > hi) {
            throw UsageError("--ladder-exps expects LO:HI");
        }
        ladder = dyadic_ladder(length, lo, hi);
    } else if (!doc.diagnostic.ladder.empty()) {
        ladder = doc.diagnostic.ladder;
    } else {
        ladder = dyadic_ladder(length);
    }
    DiagnosticOptions opts;
    if (r.given("--window")) {
        opts.window = o.window;
    } else {
        opts.window = doc.diagnostic.window;
    }
    if (r.given("--max-depth")) {
        opts.max_depth = o.max_depth;
    }
    if (r.given("--depth")) {
        opts.depth = s.engine.depth;
    }
    opts.threads = s.engine.threads;
    const SmoothnessDiagnostic d = smoothness_diagnostic(s, probe, order, ladder, opts);
    std::ostream& os = r.open(doc);
    std::string sups = "sup_quotient=";
    for (std::size_t i = 0; i < d.sup_quotient.size(); ++i) {
        sups += (i ? ";" : "") + num(d.sup_quotient[i]);
    }
    r.metadata(os, doc, "diagnose",
               {"grid=[" + num(s.grid.lo) + "," + num(s.grid.hi) + "] probe=" + num(d.probe) +
                    " window=" + num(d.window) + " order=" + std::to_string(d.order),
                "method=depth depth=" + std::to_string(d.depth) + " x0=" + num(s.engine.x0) +
                    " evaluations=" + std::to_string(d.evaluations),
                "noise_floor: L^n=" + num(d.max_error) + " < 0.01*min(h^d)=" + num(d.noise_threshold) +
                    " certified=yes",
                sups, "growth_exponent=" + num(d.growth_exponent) + (d.resolved ? "" : " (quotients within rounding and truncation error)"), std::string("verdict=") + to_string(d.verdict)});
    write_diagnostic_csv(os, d);
    return kOk;
}

int cmd_emit(Runner& r, std::ostream&)
{
    ConfigDocument doc = r.load();
    const std::string target = doc.output;
    doc.output = "-";
    ConfigDocument sink;
    sink.output = target;
    r.open(sink) << dump_config(doc);
    return kOk;
}

void add_common(CLI::App* sub, Options& o)
{
    auto* cfg = sub->add_option("--config", o.config, "configuration document (JSON)");
    auto* pre = sub->add_option("--preset", o.preset, "built-in preset: simple_4_1, cantor, ex_4_3, ex_4_4");
    cfg->excludes(pre);
    sub->add_option("--lambda", o.lambda, "map parameter");
    sub->add_option("--theta", o.theta, "weight parameter");
    sub->add_option("--seed", o.seed, "base seed (default 0)");
    sub->add_option("--depth", o.depth, "expansion depth / pressure depth");
    sub->add_option("--samples", o.samples, "chaos-game samples");
    sub->add_option("--method", o.method, "depth|chaos|transfer|periodic");
    sub->add_option("--engine", o.engine, "depth|chaos (alias of --method for integrals)");
    sub->add_option("--tol", o.tol, "tolerance");
    sub->add_option("--out", o.out, "output path, '-' for stdout");
    sub->add_option("--threads", o.threads, "parallelism budget (default 1)");
    sub->add_option("--x0", o.x0, "starting point");
    sub->add_option("--burn-in", o.burn_in, "chaos-game burn-in");
    sub->add_option("--f", o.f, "integrand, e.g. \"x\" or \"-x | 0.5 | x^2\"");
    sub->add_option("--potential", o.potential, "potential, e.g. weight_log or scaled(-1, derivative_log)");
    sub->add_flag("--emit-config", o.emit_config, "print the resolved configuration document and exit");
}

} // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Stationary measures, pressure, dimension and smoothness diagnostics for weighted IFS on [0,1]"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Options o;

    struct Command {
        const char* name;
        const char* help;
    };
    const std::vector<Command> commands = {
        {"validate", "check contraction, normalization and separation hypotheses"},
        {"measure", "dump the depth-n or chaos-game measure"},
        {"integrate", "integrate f against the stationary measure"},
        {"pressure", "topological pressure of a potential"},
        {"dimension", "Bowen root and measure dimension"},
        {"cylinders", "Gibbs cylinder weights"},
        {"sweep", "parameter sweep"},
        {"diagnose", "finite-difference smoothness diagnostic"},
        {"emit-config", "print the configuration document"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const Command& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common(sub, o);
        subs[c.name] = sub;
    }
    subs["measure"]->add_option("--merge-tol", o.merge_tol, "atom merge tolerance");
    subs["measure"]->add_option("--prune-eps", o.prune_eps, "atom pruning threshold");
    for (const char* name : {"sweep", "diagnose", "emit-config"}) {
        CLI::App* sub = subs[name];
        sub->add_option("--parameter", o.parameter, "lambda|theta|both");
        sub->add_option("--quantity", o.quantity, "integral|bowen_dimension|measure_dimension|pressure");
        sub->add_option("--lo", o.lo, "grid lower end");
        sub->add_option("--hi", o.hi, "grid upper end");
        sub->add_option("--points", o.points, "grid points");
    }
    CLI::App* diag = subs["diagnose"];
    diag->add_option("--probe", o.probe, "probe parameter (default: preset critical point)");
    diag->add_option("--order", o.order, "difference order 1..3");
    diag->add_option("--window", o.window, "half-width of the probe lattice (default: largest step)");
    diag->add_option("--ladder", o.ladder, "comma-separated steps h");
    diag->add_option("--ladder-exps", o.ladder_exps, "dyadic exponents LO:HI of the grid length (default 5:10)");
    diag->add_option("--max-depth", o.max_depth, "cap on the certified depth");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o_out;
        std::ostringstream o_err;
        const int code = app.exit(e, o_out, o_err);
        out << o_out.str();
        err << o_err.str();
        return code == 0 ? kOk : kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    Runner runner(*sub, o, out);
    const std::string name = sub->get_name();
    try {
        if (o.emit_config || name == "emit-config") {
            return cmd_emit(runner, err);
        }
        if (name == "validate") return cmd_validate(runner, err);
        if (name == "measure") return cmd_measure(runner, o, err);
        if (name == "integrate") return cmd_integrate(runner, err);
        if (name == "pressure") return cmd_pressure(runner, err);
        if (name == "dimension") return cmd_dimension(runner, err);
        if (name == "cylinders") return cmd_cylinders(runner, err);
        if (name == "sweep") return cmd_sweep(runner, err);
        if (name == "diagnose") return cmd_diagnose(runner, o, err);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const BindError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NoiseFloorError& e) {
        err << "error: " << e.what() << "; refusing to classify\n";
        return kDomainFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDomainFailure;
    }
    return kUsage;
}

} // namespace ifs::cli
