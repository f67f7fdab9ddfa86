#include <doctest.h>

#include "ifs/config.hpp"

#include <cmath>

using namespace ifs;

namespace {

const char* kMinimal = R"j({
  "name": "mini",
  "system": {
    "maps": ["x/3", "x/3 + 2/3"],
    "weights": ["0.25", "0.75"]
  }
})j";

} // namespace

TEST_CASE("minimal document uses defaults")
{
    const ConfigDocument doc = parse_config(kMinimal);
    CHECK(doc.spec.family.name == "mini");
    CHECK(doc.spec.family.maps.size() == 2);
    CHECK(doc.spec.engine.depth == 16);
    CHECK(doc.spec.engine.seed == 0);
    CHECK(doc.spec.engine.method == PressureMethod::Transfer);
    CHECK(doc.output == "-");
    const IFSInstance inst = bind(doc.spec.family, 0.0, 0.0);
    CHECK(inst.weight(1, 0.4) == 0.75);
}

TEST_CASE("every preset round-trips through the document form")
{
    for (const std::string& name : preset_names()) {
        const ConfigDocument doc = preset_document(name);
        const std::string text = dump_config(doc);
        const ConfigDocument back = parse_config(text);
        CAPTURE(name);
        CHECK(dump_config(back) == text);
        const FamilySpec& a = doc.spec.family;
        const FamilySpec& b = back.spec.family;
        CHECK(a.tied == b.tied);
        CHECK(a.default_lambda == b.default_lambda);
        const IFSInstance ia = bind(a, a.default_lambda, a.default_theta);
        const IFSInstance ib = bind(b, b.default_lambda, b.default_theta);
        for (double x : {0.0, 0.3, 0.5, 0.77, 1.0}) {
            for (std::size_t i = 0; i < ia.k(); ++i) {
                CHECK(ia.map(i, x) == ib.map(i, x));
                CHECK(ia.weight(i, x) == ib.weight(i, x));
            }
        }
        CHECK(back.spec.critical_point == doc.spec.critical_point);
        CHECK(back.diagnostic.probe == doc.diagnostic.probe);
    }
}

TEST_CASE("piecewise weights in object form")
{
    const ConfigDocument doc = parse_config(R"j({
      "system": {
        "maps": ["p*x", "p*x + 1 - p"],
        "weights": [{"breakpoints": [0.5], "pieces": ["0.3", "0.6"]},
                    {"breakpoints": [0.5], "pieces": ["0.7", "0.4"]}],
        "lambda_interval": [0.2, 0.4]
      },
      "engine": {"depth": 9, "seed": 5, "method": "periodic", "engine": "chaos"},
      "sweep": {"points": 7, "quantity": "pressure"},
      "potential": "scaled(-1, derivative_log)",
      "diagnostic": {"order": 3, "ladder": [0.01, 0.005, 0.0025, 0.00125]},
      "output": "out.csv"
    })j");
    CHECK(doc.spec.family.default_lambda == doctest::Approx(0.3));
    CHECK(doc.spec.grid.lo == 0.2);
    CHECK(doc.spec.grid.hi == 0.4);
    CHECK(doc.spec.grid.points == 7);
    CHECK(doc.spec.engine.depth == 9);
    CHECK(doc.spec.engine.seed == 5);
    CHECK(doc.spec.engine.method == PressureMethod::Periodic);
    CHECK(doc.spec.engine.engine == Engine::Chaos);
    CHECK(doc.spec.quantity == Quantity::Pressure);
    CHECK(doc.spec.potential.str() == "scaled(-1, derivative_log)");
    CHECK(doc.diagnostic.order == 3);
    CHECK(doc.diagnostic.ladder.size() == 4);
    CHECK(doc.output == "out.csv");
    const IFSInstance inst = bind(doc.spec.family, 0.3, 0.0);
    CHECK(inst.weight(0, 0.6) == 0.6);
}

TEST_CASE("potential grammar")
{
    CHECK(parse_potential("weight_log").str() == "weight_log");
    CHECK(parse_potential(" sum( scaled(2, derivative_log), constant(-0.5) ) ").str() ==
          "sum(scaled(2, derivative_log), constant(-0.5))");
    CHECK_THROWS_AS(parse_potential("entropy"), ParseError);
    CHECK_THROWS_AS(parse_potential("constant(1"), ParseError);
    CHECK_THROWS_AS(parse_potential("weight_log x"), ParseError);
}

TEST_CASE("malformed documents")
{
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config("{}"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"system": {"maps": ["x/2"], "weights": ["0.5", "0.5"]}})j"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"system": {"maps": ["x/2", "x/2+"], "weights": ["0.5", "0.5"]}})j"), ParseError);
    CHECK_THROWS_AS(parse_config(R"j({"system": {"maps": ["x/2", "x/2"], "weights": ["0.5", "0.5"],
                                    "lambda_interval": [0.2, 0.4], "lambda": 0.9}})j"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"system": {"maps": ["x/2", "x/2"], "weights": ["0.5", "0.5"],
                                    "lambda_interval": [0.4, 0.2]}})j"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"j({"system": {"maps": ["x/2", "x/2"], "weights": ["0.5", "0.5"]},
                                    "engine": {"engine": "magic"}})j"),
                    ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
