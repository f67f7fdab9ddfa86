#include <doctest.h>

#include "ifs/sweep.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace ifs;

namespace {

IFSInstance affine_pair(double r1, double r2, double p)
{
    FamilySpec s;
    s.name = "affine";
    s.maps = {Expr::constant(r1) * Expr::x(), Expr::constant(r2) * Expr::x() + Expr::constant(1.0 - r2)};
    s.weights = {Piecewise::single(Expr::constant(p)), Piecewise::single(Expr::constant(1.0 - p))};
    return bind(s, 0.0, 0.0);
}

double bernoulli_entropy(double p)
{
    return -(p * std::log(p) + (1 - p) * std::log(1 - p));
}

const char* const kPresets[] = {"cantor", "ex_4_3", "ex_4_4"};

} // namespace

TEST_CASE("Moran equation")
{
    const double cantor[] = {1.0 / 3.0, 1.0 / 3.0};
    CHECK(moran_dimension(cantor) == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-12));
    const double halves[] = {0.5, 0.5};
    CHECK(moran_dimension(halves) == doctest::Approx(1.0).epsilon(1e-12));
    const double single[] = {0.25};
    CHECK(moran_dimension(single) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(moran_dimension(std::span<const double>{}), std::invalid_argument);
    const double bad[] = {0.5, 1.5};
    CHECK_THROWS_AS(moran_dimension(bad), std::invalid_argument);
}

TEST_CASE("Bowen root of the Cantor system")
{
    const IFSInstance c = bind(preset("cantor").family, 0.0, 0.5);
    const DimensionResult r = bowen_root(c, PressureMethod::Transfer, 8, 1e-10);
    CHECK(std::abs(r.t_star - std::log(2.0) / std::log(3.0)) <= 1e-6);
    CHECK(r.bracket_hi - r.bracket_lo <= 1e-10);
    CHECK(r.bracket_lo <= r.t_star);
    CHECK(r.t_star <= r.bracket_hi);
    const DimensionResult per = bowen_root(c, PressureMethod::Periodic, 10, 1e-10);
    CHECK(std::abs(per.t_star - r.t_star) <= 1e-5);
}

TEST_CASE("Bowen root with ratio one quarter")
{
    const DimensionResult r = bowen_root(affine_pair(0.25, 0.25, 0.5));
    CHECK(std::abs(r.t_star - 0.5) <= 1e-6);
}

TEST_CASE("Bowen root agrees with the Moran oracle on random affine systems")
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ratio(0.05, 0.49);
    for (int i = 0; i < 10; ++i) {
        const double r1 = ratio(rng);
        const double r2 = ratio(rng);
        const double tol = 1e-9;
        const double ratios[] = {r1, r2};
        const DimensionResult r = bowen_root(affine_pair(r1, r2, 0.5), PressureMethod::Transfer, 6, tol);
        CAPTURE(r1);
        CAPTURE(r2);
        CHECK(std::abs(r.t_star - moran_dimension(ratios)) <= 10 * tol);
    }
}

TEST_CASE("shrinking the ratios lowers the dimension")
{
    double r1 = 0.4;
    double r2 = 0.3;
    double prev = bowen_root(affine_pair(r1, r2, 0.5)).t_star;
    for (int i = 0; i < 5; ++i) {
        r1 *= 0.9;
        r2 *= 0.9;
        const double next = bowen_root(affine_pair(r1, r2, 0.5)).t_star;
        CHECK(next < prev);
        prev = next;
    }
}

TEST_CASE("Bowen bracket is valid for every dimension-ready preset")
{
    for (const char* name : kPresets) {
        const SweepSpec s = preset(name);
        const IFSInstance inst = bind(s.family, s.family.default_lambda, s.family.default_theta);
        CHECK(bowen_pressure(inst, 0.0, PressureMethod::Transfer, 8) > 0.0);
        CHECK(bowen_pressure(inst, 2.0, PressureMethod::Transfer, 8) < 0.0);
        const DimensionResult r = bowen_root(inst);
        CHECK(r.t_star >= 0.0);
        CHECK(r.t_star <= 1.0);
    }
}

TEST_CASE("volume lemma on Bernoulli Cantor measures")
{
    const DimensionResult half = measure_dimension(affine_pair(1.0 / 3.0, 1.0 / 3.0, 0.5), 12);
    CHECK(half.h == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(half.chi == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(std::abs(half.hd_measure - std::log(2.0) / std::log(3.0)) <= 1e-6);

    const DimensionResult skew = measure_dimension(affine_pair(1.0 / 3.0, 1.0 / 3.0, 0.3), 14);
    CHECK(std::abs(skew.hd_measure - bernoulli_entropy(0.3) / std::log(3.0)) <= 1e-4);
}

TEST_CASE("measure dimension never exceeds the set dimension")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> prob(0.05, 0.95);
    const IFSInstance c = affine_pair(1.0 / 3.0, 1.0 / 3.0, 0.5);
    const double t_star = bowen_root(c).t_star;
    for (int i = 0; i < 20; ++i) {
        const double p = prob(rng);
        CHECK(measure_dimension(affine_pair(1.0 / 3.0, 1.0 / 3.0, p), 10).hd_measure <= t_star + 1e-4);
    }
    for (const char* name : kPresets) {
        const SweepSpec s = preset(name);
        const IFSInstance inst = bind(s.family, s.family.default_lambda, s.family.default_theta);
        const DimensionResult m = measure_dimension(inst, 10);
        CHECK(m.chi > 0.0);
        CHECK(m.h >= 0.0);
        CHECK(m.hd_measure <= bowen_root(inst).t_star + 1e-4);
    }
}

TEST_CASE("Gibbs measure at the Bowen root realizes the set dimension")
{
    for (const char* name : kPresets) {
        const SweepSpec s = preset(name);
        const IFSInstance inst = bind(s.family, s.family.default_lambda, s.family.default_theta);
        const double t = bowen_root(inst).t_star;
        const Potential phi = Potential::scaled(t, Potential::derivative_log());
        const CylinderWeights nu = gibbs_from_transfer(inst, phi, 12, 8);
        const double h = cylinder_entropy(nu);
        const double chi = -cylinder_integral(inst, nu, Potential::derivative_log());
        CAPTURE(name);
        CHECK(std::abs(h / chi - t) <= 1e-4);
    }
}

TEST_CASE("dimension rejects overlapping systems")
{
    const IFSInstance overlapping = affine_pair(0.6, 0.6, 0.5);
    CHECK_THROWS_AS(bowen_root(overlapping), DomainError);
}

TEST_CASE("dimension CSV row")
{
    std::ostringstream os;
    write_dimension_header(os);
    CHECK(os.str() == "lambda,theta,t_star,h,chi,hd_measure,bracket_lo,bracket_hi,depth,method\n");
}
