#include "ifs/config.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <sstream>

namespace ifs {

using nlohmann::json;

namespace {

struct PotentialParser {
    std::string_view s;
    std::size_t pos = 0;

    void skip()
    {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        }
    }

    void expect(char c)
    {
        skip();
        if (pos >= s.size() || s[pos] != c) {
            throw ParseError(std::string("potential: expected '") + c + "'", pos);
        }
        ++pos;
    }

    std::string word()
    {
        skip();
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) {
            ++pos;
        }
        return std::string(s.substr(start, pos - start));
    }

    double number()
    {
        skip();
        const std::string rest(s.substr(pos));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(rest, &used);
        } catch (const std::exception&) {
            throw ParseError("potential: expected a number", pos);
        }
        pos += used;
        return v;
    }

    Potential parse()
    {
        const std::size_t at = (skip(), pos);
        const std::string name = word();
        if (name == "weight_log") {
            return Potential::weight_log();
        }
        if (name == "derivative_log") {
            return Potential::derivative_log();
        }
        if (name == "constant") {
            expect('(');
            const double c = number();
            expect(')');
            return Potential::constant(c);
        }
        if (name == "scaled") {
            expect('(');
            const double t = number();
            expect(',');
            const Potential inner = parse();
            expect(')');
            return Potential::scaled(t, inner);
        }
        if (name == "sum") {
            expect('(');
            const Potential a = parse();
            expect(',');
            const Potential b = parse();
            expect(')');
            return Potential::sum(a, b);
        }
        throw ParseError("potential: unknown form '" + name + "'", at);
    }
};

json piecewise_to_json(const Piecewise& pw)
{
    if (pw.is_single()) {
        return pw.pieces[0].str();
    }
    json pieces = json::array();
    for (const Expr& e : pw.pieces) {
        pieces.push_back(e.str());
    }
    return {{"breakpoints", pw.breakpoints}, {"pieces", pieces}};
}

Piecewise piecewise_from_json(const json& j, const std::string& where)
{
    if (j.is_string()) {
        return Piecewise::parse(j.get<std::string>());
    }
    if (!j.is_object() || !j.contains("pieces")) {
        throw ConfigError(where + ": expected an expression string or {breakpoints, pieces}");
    }
    Piecewise pw;
    for (const json& p : j.at("pieces")) {
        pw.pieces.push_back(parse_expr(p.get<std::string>()));
    }
    if (j.contains("breakpoints")) {
        pw.breakpoints = j.at("breakpoints").get<std::vector<double>>();
    }
    if (pw.pieces.size() != pw.breakpoints.size() + 1) {
        throw ConfigError(where + ": needs one more piece than breakpoints");
    }
    return pw;
}

json interval_to_json(const Interval& iv)
{
    if (!iv.declared) {
        return nullptr;
    }
    return json::array({iv.lo, iv.hi});
}

Interval interval_from_json(const json& j, const std::string& where)
{
    if (j.is_null()) {
        return {};
    }
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2 || !(v[0] <= v[1])) {
        throw ConfigError(where + ": expected [lo, hi] with lo <= hi");
    }
    return {v[0], v[1], true};
}

template <class T>
T value_or(const json& obj, const char* key, T fallback)
{
    return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

PressureMethod parse_pressure_method(const std::string& s)
{
    if (s == "transfer") {
        return PressureMethod::Transfer;
    }
    if (s == "periodic") {
        return PressureMethod::Periodic;
    }
    throw ConfigError("unknown pressure method '" + s + "'");
}

Engine parse_engine(const std::string& s)
{
    if (s == "depth") {
        return Engine::Depth;
    }
    if (s == "chaos") {
        return Engine::Chaos;
    }
    throw ConfigError("unknown engine '" + s + "'");
}

ConfigDocument from_json(const json& root)
{
    if (!root.is_object() || !root.contains("system")) {
        throw ConfigError("config: missing 'system' object");
    }
    ConfigDocument doc;
    SweepSpec& s = doc.spec;
    const json& sys = root.at("system");
    FamilySpec& fam = s.family;
    fam.name = value_or<std::string>(root, "name", value_or<std::string>(sys, "name", "custom"));
    for (const json& m : sys.at("maps")) {
        fam.maps.push_back(parse_expr(m.get<std::string>()));
    }
    std::size_t idx = 0;
    for (const json& w : sys.at("weights")) {
        fam.weights.push_back(piecewise_from_json(w, "weights[" + std::to_string(idx++) + "]"));
    }
    fam.tied = value_or<bool>(sys, "tied", false);
    fam.lambda_range = interval_from_json(sys.value("lambda_interval", json()), "lambda_interval");
    fam.theta_range = interval_from_json(sys.value("theta_interval", json()), "theta_interval");
    fam.default_lambda = value_or<double>(sys, "lambda", fam.lambda_range.midpoint());
    fam.default_theta = value_or<double>(sys, "theta", fam.tied ? fam.default_lambda : fam.theta_range.midpoint());
    if (!fam.lambda_range.contains(fam.default_lambda) || !fam.theta_range.contains(fam.default_theta)) {
        throw ConfigError("config: default lambda/theta outside the declared interval");
    }
    try {
        fam.check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (root.contains("integrand")) {
        s.integrand = piecewise_from_json(root.at("integrand"), "integrand");
    }
    if (root.contains("potential")) {
        s.potential = parse_potential(root.at("potential").get<std::string>());
    }

    const json eng = root.value("engine", json::object());
    EngineConfig& e = s.engine;
    e.engine = parse_engine(value_or<std::string>(eng, "engine", "depth"));
    e.depth = value_or<std::size_t>(eng, "depth", e.depth);
    e.samples = value_or<std::size_t>(eng, "samples", e.samples);
    e.burn_in = value_or<std::size_t>(eng, "burn_in", e.burn_in);
    e.seed = value_or<std::uint64_t>(eng, "seed", e.seed);
    e.x0 = value_or<double>(eng, "x0", e.x0);
    e.method = parse_pressure_method(value_or<std::string>(eng, "method", "transfer"));
    e.pressure_depth = value_or<std::size_t>(eng, "pressure_depth", e.pressure_depth);
    e.tol = value_or<double>(eng, "tol", e.tol);
    e.threads = value_or<std::size_t>(eng, "threads", e.threads);

    const json sw = root.value("sweep", json::object());
    s.parameter = parse_sweep_parameter(value_or<std::string>(sw, "parameter", "lambda"));
    s.quantity = parse_quantity(value_or<std::string>(sw, "quantity", "integral"));
    const Interval& varied = s.parameter == SweepParameter::Theta && !fam.tied ? fam.theta_range : fam.lambda_range;
    s.grid.lo = value_or<double>(sw, "lo", varied.declared ? varied.lo : 0.0);
    s.grid.hi = value_or<double>(sw, "hi", varied.declared ? varied.hi : 1.0);
    s.grid.points = value_or<std::size_t>(sw, "points", 2);
    s.fixed_lambda = value_or<double>(sw, "fixed_lambda", fam.default_lambda);
    s.fixed_theta = value_or<double>(sw, "fixed_theta", fam.default_theta);
    if (sw.contains("critical_point")) {
        s.critical_point = sw.at("critical_point").get<double>();
    }

    if (root.contains("diagnostic")) {
        const json& d = root.at("diagnostic");
        if (d.contains("probe")) {
            doc.diagnostic.probe = d.at("probe").get<double>();
        }
        doc.diagnostic.order = value_or<std::size_t>(d, "order", 2);
        if (d.contains("window")) {
            doc.diagnostic.window = d.at("window").get<double>();
        }
        doc.diagnostic.ladder = value_or<std::vector<double>>(d, "ladder", {});
    }
    doc.output = value_or<std::string>(root, "output", "-");

    const double lm = fam.lambda_range.declared ? fam.lambda_range.midpoint() : fam.default_lambda;
    const double tm = fam.theta_range.declared ? fam.theta_range.midpoint() : fam.default_theta;
    try {
        (void)bind(fam, lm, tm);
    } catch (const BindError& ex) {
        throw ConfigError(std::string("config: dry-run bind failed: ") + ex.what());
    } catch (const EvalError& ex) {
        throw ConfigError(std::string("config: dry-run bind failed: ") + ex.what());
    }
    return doc;
}

} // namespace

Potential parse_potential(std::string_view source)
{
    PotentialParser p{source};
    Potential phi = p.parse();
    p.skip();
    if (p.pos != source.size()) {
        throw ParseError("potential: trailing input", p.pos);
    }
    return phi;
}

ConfigDocument parse_config(std::string_view text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        return from_json(root);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ConfigDocument load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const ConfigDocument& doc)
{
    const SweepSpec& s = doc.spec;
    const FamilySpec& fam = s.family;
    json maps = json::array();
    for (const Expr& m : fam.maps) {
        maps.push_back(m.str());
    }
    json weights = json::array();
    for (const Piecewise& w : fam.weights) {
        weights.push_back(piecewise_to_json(w));
    }
    json root;
    root["name"] = fam.name;
    root["system"] = {
        {"maps", maps},
        {"weights", weights},
        {"lambda_interval", interval_to_json(fam.lambda_range)},
        {"theta_interval", interval_to_json(fam.theta_range)},
        {"lambda", fam.default_lambda},
        {"theta", fam.default_theta},
        {"tied", fam.tied},
    };
    root["integrand"] = piecewise_to_json(s.integrand);
    root["potential"] = s.potential.str();
    const EngineConfig& e = s.engine;
    root["engine"] = {
        {"engine", to_string(e.engine)},
        {"depth", e.depth},
        {"samples", e.samples},
        {"burn_in", e.burn_in},
        {"seed", e.seed},
        {"x0", e.x0},
        {"method", to_string(e.method)},
        {"pressure_depth", e.pressure_depth},
        {"tol", e.tol},
        {"threads", e.threads},
    };
    json sw = {
        {"parameter", to_string(s.parameter)},
        {"quantity", to_string(s.quantity)},
        {"lo", s.grid.lo},
        {"hi", s.grid.hi},
        {"points", s.grid.points},
        {"fixed_lambda", s.fixed_lambda},
        {"fixed_theta", s.fixed_theta},
    };
    if (s.critical_point) {
        sw["critical_point"] = *s.critical_point;
    }
    root["sweep"] = sw;
    json diag = {{"order", doc.diagnostic.order}, {"ladder", doc.diagnostic.ladder}};
    if (doc.diagnostic.probe) {
        diag["probe"] = *doc.diagnostic.probe;
    }
    if (doc.diagnostic.window) {
        diag["window"] = *doc.diagnostic.window;
    }
    root["diagnostic"] = diag;
    root["output"] = doc.output;
    return root.dump(2) + "\n";
}

ConfigDocument preset_document(std::string_view name)
{
    ConfigDocument doc;
    doc.spec = preset(name);
    doc.diagnostic.probe = doc.spec.critical_point;
    return doc;
}

} // namespace ifs
