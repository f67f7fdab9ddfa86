#include <doctest.h>

#include "ifs/sweep.hpp"

#include <cmath>
#include <numeric>

using namespace ifs;

namespace {

IFSInstance preset_instance(const char* name)
{
    const SweepSpec s = preset(name);
    return bind(s.family, s.family.default_lambda, s.family.default_theta);
}

IFSInstance affine_pair(double r1, double c1, double r2, double c2, double p)
{
    FamilySpec s;
    s.name = "affine";
    s.maps = {Expr::constant(r1) * Expr::x() + Expr::constant(c1), Expr::constant(r2) * Expr::x() + Expr::constant(c2)};
    s.weights = {Piecewise::single(Expr::constant(p)), Piecewise::single(Expr::constant(1.0 - p))};
    return bind(s, 0.0, 0.0);
}

IFSInstance bernoulli_cantor(double p)
{
    return affine_pair(1.0 / 3.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, p);
}

const char* const kPresets[] = {"simple_4_1", "cantor", "ex_4_3", "ex_4_4"};

} // namespace

TEST_CASE("shift metric examples")
{
    const SymbolWord a = SymbolWord::from_digits("111");
    CHECK(shift_metric(a, a) == 0.0);
    CHECK(shift_metric(SymbolWord::from_digits("111"), SymbolWord::from_digits("211")) == 1.0);
    CHECK(shift_metric(SymbolWord::from_digits("121"), SymbolWord::from_digits("212")) == 1.75);
    CHECK(shift_metric(SymbolWord::from_digits("1", true), SymbolWord::from_digits("2", true)) ==
          doctest::Approx(2.0).epsilon(1e-9));
    CHECK_THROWS_AS(SymbolWord::from_digits(""), std::invalid_argument);
    CHECK_THROWS_AS(SymbolWord::from_digits("10"), std::invalid_argument);
}

TEST_CASE("words enumerate lexicographically")
{
    CHECK(SymbolWord::from_index(0, 2, 3).digits() == "111");
    CHECK(SymbolWord::from_index(1, 2, 3).digits() == "112");
    CHECK(SymbolWord::from_index(6, 2, 3).digits() == "221");
    CHECK(SymbolWord::from_digits("12", true).at(5) == 1);
}

TEST_CASE("projections on the Cantor system")
{
    const IFSInstance c = preset_instance("cantor");
    CHECK(project(c, SymbolWord::from_digits("1", true)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(project(c, SymbolWord::from_digits("2", true)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(project(c, SymbolWord::from_digits("12", true)) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(project(c, SymbolWord::from_digits("2")) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(project(c, SymbolWord::from_digits("22")) == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("periodic projections are fixed points of their cycle")
{
    for (const char* name : kPresets) {
        const IFSInstance inst = preset_instance(name);
        for (std::size_t n = 1; n <= 5; ++n) {
            for (std::size_t idx = 0; idx < (std::size_t{1} << n); ++idx) {
                const SymbolWord w = SymbolWord::from_index(idx, 2, n);
                const double x = project(inst, w);
                CHECK(x >= 0.0);
                CHECK(x <= 1.0);
                double y = x;
                for (std::size_t j = n; j-- > 0;) {
                    y = inst.map(w.symbols[j], y);
                }
                CHECK(std::abs(y - x) <= 1e-12);
            }
        }
    }
}

TEST_CASE("potential values")
{
    const IFSInstance lebesgue = preset_instance("simple_4_1");
    const SymbolWord w = SymbolWord::from_digits("1212", true);
    CHECK(eval_potential(lebesgue, Potential::derivative_log(), w) == doctest::Approx(std::log(0.5)));
    const IFSInstance b = bernoulli_cantor(0.3);
    CHECK(eval_potential(b, Potential::weight_log(), SymbolWord::from_digits("21", true)) ==
          doctest::Approx(std::log(0.7)));
    CHECK(eval_potential(b, Potential::scaled(2.0, Potential::constant(std::log(3.0))), w) ==
          doctest::Approx(std::log(9.0)));
    CHECK(Potential::sum(Potential::weight_log(), Potential::constant(1.0)).str() == "sum(weight_log, constant(1))");
}

TEST_CASE("periodic pressure examples")
{
    const IFSInstance c = preset_instance("cantor");
    for (std::size_t n : {1, 3, 7}) {
        CHECK(pressure_periodic(c, Potential::constant(0.7), n).value ==
              doctest::Approx(std::log(2.0) + 0.7).epsilon(1e-14));
    }
    for (double t : {0.0, 0.5, 1.3}) {
        CHECK(pressure_periodic(c, Potential::scaled(t, Potential::derivative_log()), 6).value ==
              doctest::Approx(std::log(2.0) - t * std::log(3.0)).epsilon(1e-12).scale(1.0));
    }
    const IFSInstance lebesgue = preset_instance("simple_4_1");
    for (std::size_t n = 1; n <= 8; ++n) {
        CHECK(std::abs(pressure_periodic(lebesgue, Potential::weight_log(), n).value) <= 1e-12);
    }
}

TEST_CASE("transfer pressure examples")
{
    const IFSInstance c = preset_instance("cantor");
    CHECK(pressure_transfer(c, Potential::constant(0.2), 1).value ==
          doctest::Approx(std::log(2.0) + 0.2).epsilon(1e-12));
    for (double t : {0.0, 0.63, 2.0}) {
        CHECK(std::abs(pressure_transfer(c, Potential::scaled(t, Potential::derivative_log()), 2).value -
                       (std::log(2.0) - t * std::log(3.0))) <= 1e-9);
    }
}

TEST_CASE("normalized potential has zero pressure at every depth")
{
    for (const char* name : kPresets) {
        const SweepSpec s = preset(name);
        for (double lam : {s.family.lambda_range.lo, s.family.default_lambda, s.family.lambda_range.hi}) {
            const IFSInstance inst = bind(s.family, lam, s.family.theta_range.midpoint());
            for (std::size_t d = 1; d <= 8; ++d) {
                CAPTURE(name);
                CAPTURE(d);
                CHECK(std::abs(pressure_transfer(inst, Potential::weight_log(), d).value) <= 1e-9);
            }
        }
    }
}

TEST_CASE("periodic and transfer pressure agree for Hoelder potentials")
{
    for (const char* name : kPresets) {
        const IFSInstance inst = preset_instance(name);
        const bool step_weights = inst.weights_piecewise();
        for (const Potential& phi : {Potential::weight_log(), Potential::scaled(0.7, Potential::derivative_log())}) {
            if (step_weights && phi.is_normalized_weight_log()) {
                continue;
            }
            const double per = pressure_periodic(inst, phi, 10).value;
            const double tr = pressure_transfer(inst, phi, 10).value;
            CAPTURE(name);
            CHECK(std::abs(per - tr) <= 1e-6);
        }
    }
}

TEST_CASE("periodic sums converge geometrically for step weights")
{
    for (const char* name : {"ex_4_3", "ex_4_4"}) {
        const IFSInstance inst = preset_instance(name);
        double prev = 0.0;
        for (std::size_t n : {6, 8, 10, 12}) {
            const double gap = std::abs(pressure_periodic(inst, Potential::weight_log(), n).value -
                                        pressure_transfer(inst, Potential::weight_log(), n).value);
            if (prev > 0.0) {
                CHECK(gap <= 0.5 * prev);
            }
            prev = gap;
        }
        CHECK(prev <= 1e-4);
    }
}

TEST_CASE("Bowen pressure is strictly monotone in t")
{
    for (const char* name : kPresets) {
        const IFSInstance inst = preset_instance(name);
        double prev = bowen_pressure(inst, 0.0, PressureMethod::Transfer, 6);
        for (int i = 1; i < 20; ++i) {
            const double t = 2.0 * i / 19.0;
            const double v = bowen_pressure(inst, t, PressureMethod::Transfer, 6);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("Gibbs cylinders")
{
    const double p = 0.3;
    const CylinderWeights two = gibbs_cylinder(bernoulli_cantor(p), 2);
    REQUIRE(two.weights.size() == 4);
    CHECK(two.weights[0] == doctest::Approx(p * p));
    CHECK(two.weights[1] == doctest::Approx(p * (1 - p)));
    CHECK(two.weights[2] == doctest::Approx((1 - p) * p));
    CHECK(two.weights[3] == doctest::Approx((1 - p) * (1 - p)));

    for (double w : gibbs_cylinder(preset_instance("simple_4_1"), 3).weights) {
        CHECK(w == doctest::Approx(0.125));
    }
    const IFSInstance ex = bind(preset("ex_4_3").family, 0.2, 0.2);
    const CylinderWeights ten = gibbs_cylinder(ex, 10);
    CHECK(std::abs(std::accumulate(ten.weights.begin(), ten.weights.end(), 0.0) - 1.0) <= 1e-9);
    for (double w : ten.weights) {
        CHECK(w >= 0.0);
    }
}

TEST_CASE("Gibbs integrals")
{
    const IFSInstance c = preset_instance("cantor");
    CHECK(gibbs_integral(c, Potential::constant(2.5), 6) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(gibbs_integral(c, Potential::derivative_log(), 7) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-14));
    const double p = 0.3;
    CHECK(std::abs(gibbs_integral(bernoulli_cantor(p), Potential::weight_log(), 12) -
                   (p * std::log(p) + (1 - p) * std::log(1 - p))) <= 1e-6);
}

TEST_CASE("transfer-matrix Gibbs measure of a normalized potential matches the cylinder weights")
{
    const IFSInstance b = bernoulli_cantor(0.3);
    const CylinderWeights direct = gibbs_cylinder(b, 6);
    const CylinderWeights tr = gibbs_from_transfer(b, Potential::weight_log(), 6, 4);
    REQUIRE(direct.weights.size() == tr.weights.size());
    for (std::size_t i = 0; i < direct.weights.size(); ++i) {
        CHECK(tr.weights[i] == doctest::Approx(direct.weights[i]).epsilon(1e-9));
    }
    const double p = 0.3;
    CHECK(cylinder_entropy(tr) == doctest::Approx(-(p * std::log(p) + (1 - p) * std::log(1 - p))).epsilon(1e-9));
}

TEST_CASE("pressure derivative identity")
{
    const DerivativeCheck a =
        pressure_derivative_check(preset_instance("simple_4_1"), Potential::weight_log(), Potential::constant(1.0),
                                  1e-4, 8);
    CHECK(a.gibbs == 1.0);
    CHECK(a.fd == doctest::Approx(1.0).epsilon(1e-6));

    const DerivativeCheck b =
        pressure_derivative_check(bernoulli_cantor(0.3), Potential::weight_log(), Potential::derivative_log(), 1e-4, 8);
    CHECK(b.gibbs == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
    CHECK(std::abs(b.fd - b.gibbs) <= 1e-4);

    const DerivativeCheck c =
        pressure_derivative_check(bernoulli_cantor(0.3), Potential::constant(0.0), Potential::weight_log(), 1e-4, 8);
    const double mean = (std::log(0.3) + std::log(0.7)) / 2.0;
    CHECK(c.gibbs == doctest::Approx(mean).epsilon(1e-9));
    CHECK(std::abs(c.fd - c.gibbs) <= 1e-4);
}

TEST_CASE("pushforward of the Gibbs measure is the stationary measure")
{
    for (const char* name : kPresets) {
        const IFSInstance inst = preset_instance(name);
        const double x0 = reference_point(inst);
        const CylinderWeights nu = gibbs_cylinder(inst, 12, x0);
        const DiscreteMeasure mu = depth_n_measure(inst, x0, 12);
        for (int power : {1, 2}) {
            auto f = [power](double x) { return std::pow(x, power); };
            CAPTURE(name);
            CAPTURE(power);
            CHECK(std::abs(cylinder_pushforward(inst, nu, f) - integrate(mu, f)) <= 1e-4);
        }
    }
}
