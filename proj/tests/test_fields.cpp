#include <cmath>

#include "doctest.h"
#include "tlab/fields.hpp"
#include "tlab/random.hpp"

using namespace tlab;

namespace {

const Box unit{0, 1, 0, 1};

PiecewiseCoefficient constant(double plus, double minus, double lambda0, double M0) {
    PiecewiseCoefficient c;
    c.plus = [plus](Vec2) { return Mat2::identity(plus); };
    c.minus = [minus](Vec2) { return Mat2::identity(minus); };
    c.lambda0 = lambda0;
    c.M0 = M0;
    return c;
}

}  // namespace

TEST_CASE("identity coefficient is admissible") {
    const CoefficientValidation v = validate_coefficient(constant(1, 1, 1, 0), unit, 2000);
    CHECK(v.passed);
    CHECK(v.min_eigenvalue == 1.0);
    CHECK(v.max_eigenvalue == 1.0);
    CHECK(v.ellipticity_ratio == 1.0);
    CHECK(v.lipschitz_quotient == 0.0);
}

TEST_CASE("2I with lambda0 = 0.4 passes, lambda0 = 0.6 fails") {
    CHECK(validate_coefficient(constant(2, 2, 0.4, 0), unit, 1000).passed);
    const CoefficientValidation v = validate_coefficient(constant(2, 2, 0.6, 0), unit, 1000);
    CHECK_FALSE(v.passed);
    CHECK(v.first_violation.has_value());
    CHECK(v.message.find("ellipticity") != std::string::npos);
}

TEST_CASE("(1+|x|) I exceeds a Lipschitz bound of 0.5") {
    PiecewiseCoefficient c = constant(1, 1, 0.4, 0.5);
    c.plus = [](Vec2 p) { return Mat2::identity(1.0 + norm(p)); };
    const CoefficientValidation v = validate_coefficient(c, unit, 2000);
    CHECK_FALSE(v.passed);
    CHECK(v.message.find("Lipschitz") != std::string::npos);
    CHECK(v.lipschitz_quotient > 0.5);
    c.M0 = 1.0;
    CHECK(validate_coefficient(c, unit, 2000).passed);
}

TEST_CASE("asymmetric coefficient is rejected") {
    PiecewiseCoefficient c = constant(1, 1, 0.5, 0);
    c.minus = [](Vec2) { return Mat2{1.0, 0.1, 0.0, 1.0}; };
    const CoefficientValidation v = validate_coefficient(c, unit, 10);
    CHECK_FALSE(v.passed);
    CHECK_FALSE(v.symmetric);
}

TEST_CASE("validation is deterministic under a seed") {
    PiecewiseCoefficient c = constant(1, 1, 0.4, 2.0);
    c.plus = [](Vec2 p) { return Mat2::identity(1.0 + std::sin(3 * p.x) * p.y); };
    const auto a = validate_coefficient(c, unit, 500, 42), b = validate_coefficient(c, unit, 500, 42);
    CHECK(a.lipschitz_quotient == b.lipschitz_quotient);
    CHECK(a.min_eigenvalue == b.min_eigenvalue);
}

TEST_CASE("lower-order bound") {
    LowerOrderTerms lot;
    lot.W = [](Vec2) { return Vec2{0.3, 0.4}; };
    lot.V = [](Vec2) { return -0.5; };
    const LowerOrderValidation v = validate_lower_order(lot, 0.9, unit, 100);
    CHECK(v.sup_W == doctest::Approx(0.5));
    CHECK(v.sup_V == 0.5);
    CHECK(v.passed);
    CHECK_FALSE(validate_lower_order(lot, 1.0 / 0.9, unit, 100).passed);
}

TEST_CASE("shape areas and containment") {
    const Shape d = Shape::disk({0.5, 0.5}, 0.2);
    CHECK(d.area() == doctest::Approx(pi * 0.04));
    CHECK(d.contains({0.6, 0.5}));
    CHECK_FALSE(d.contains({0.71, 0.5}));
    CHECK(d.signed_distance({0.5, 0.5}) == doctest::Approx(-0.2));
    CHECK(d.perimeter() == doctest::Approx(2 * pi * 0.2));
    const Shape e = Shape::ellipse({0, 0}, 0.3, 0.1, pi / 2);
    CHECK(e.area() == doctest::Approx(pi * 0.03));
    CHECK(e.contains({0, 0.25}));
    CHECK_FALSE(e.contains({0.25, 0}));
    const Shape sq = Shape::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    CHECK(sq.area() == doctest::Approx(1.0));
    CHECK(sq.signed_distance({0.5, 0.25}) == doctest::Approx(-0.25));
    CHECK(sq.signed_distance({2, 0.5}) == doctest::Approx(1.0));
    const auto pts = sq.boundary(0.1);
    CHECK(pts.size() >= 40);
    for (std::size_t i = 0; i < pts.size(); ++i)
        CHECK(norm(pts[(i + 1) % pts.size()] - pts[i]) <= 0.1 + 1e-12);
}

TEST_CASE("signed distance is 1-Lipschitz") {
    Rng rng(12);
    const Shape shapes[] = {Shape::disk({0.5, 0.5}, 0.2), Shape::ellipse({0.4, 0.6}, 0.3, 0.1, 0.7),
                            Shape::polygon({{0.1, 0.1}, {0.9, 0.2}, {0.5, 0.4}, {0.6, 0.9}})};
    for (const Shape& s : shapes) {
        for (int i = 0; i < 2000; ++i) {
            const Vec2 p{rng.uniform(), rng.uniform()}, q{rng.uniform(), rng.uniform()};
            CHECK(std::abs(s.signed_distance(p) - s.signed_distance(q)) <= norm(p - q) * (1 + 1e-9) + 1e-12);
            CHECK((s.signed_distance(p) < 0) == s.contains(p));
        }
    }
}

TEST_CASE("inclusion jump conditions") {
    InclusionScenario s;
    s.shape = Shape::disk({0.5, 0.7}, 0.1);
    s.a_hat = [](Vec2) { return Mat2::identity(2.0); };
    s.eta = 0.5;
    s.zeta = 2.0;
    const MatrixField bg = [](Vec2) { return Mat2::identity(); };
    InclusionValidation v = validate_inclusion(s, bg, {.sample_count = 500});
    CHECK(v.passed);
    CHECK(v.jump_ok);
    CHECK(v.lower_margin == doctest::Approx(0.5));
    CHECK(v.upper_margin == doctest::Approx(0.0));
    s.zeta = 1.5;
    v = validate_inclusion(s, bg, {.sample_count = 500});
    CHECK_FALSE(v.jump_ok);
    s.jump = JumpType::lower;
    s.zeta = 0.5;
    s.a_hat = [](Vec2) { return Mat2::identity(0.5); };
    CHECK(validate_inclusion(s, bg, {.sample_count = 500}).passed);
    s.zeta = 2.0;
    CHECK_FALSE(validate_inclusion(s, bg, {.sample_count = 500}).passed);
}

TEST_CASE("disk fatness boundary cases") {
    const double rho = 0.2;
    InclusionScenario s;
    s.shape = Shape::disk({0.5, 0.5}, rho);
    const MatrixField bg = [](Vec2) { return Mat2::identity(); };
    s.h = rho / 2;
    InclusionValidation v = validate_inclusion(s, bg, {.sample_count = 100});
    CHECK(v.fat == false);
    CHECK_FALSE(v.passed);
    CHECK(v.fat_ratio == doctest::Approx(0.25).epsilon(0.01));
    s.h = rho * (1 - 1 / std::sqrt(2.0));
    v = validate_inclusion(s, bg, {.sample_count = 100});
    CHECK(v.fat == true);
    CHECK(v.fat_ratio == doctest::Approx(0.5).epsilon(2e-3));
}

TEST_CASE("eroded area is monotone in h and matches disks") {
    const Shape d = Shape::disk({0, 0}, 0.3);
    double prev = 1e9;
    for (double h = 0.0; h < 0.3; h += 0.02) {
        const auto [area, eroded] = eroded_area(d, h, 512);
        CHECK(eroded <= prev);
        CHECK(eroded <= area);
        CHECK(eroded == doctest::Approx(pi * (0.3 - h) * (0.3 - h)).epsilon(0.01));
        prev = eroded;
    }
}

TEST_CASE("distance to the plus boundary") {
    InterfaceCurve iface;
    iface.level = 0.3;
    const Shape d = Shape::disk({0.5, 0.6}, 0.1);
    CHECK(distance_to_plus_boundary(d, unit, &iface) == doctest::Approx(0.2).epsilon(1e-3));
    CHECK(distance_to_plus_boundary(Shape::disk({0.5, 0.3}, 0.1), unit, &iface) == 0.0);
    CHECK(distance_to_plus_boundary(d, unit, nullptr) == doctest::Approx(0.3).epsilon(1e-3));
}

TEST_CASE("interface chart") {
    InterfaceCurve iface;
    iface.level = 0.5;
    iface.offset = [](double x) { return 0.05 * std::sin(2 * pi * x); };
    const InterfaceGraph g = iface.chart(0.3, 0.2);
    CHECK(g.origin.x == 0.3);
    CHECK(g.origin.y == doctest::Approx(iface.height(0.3)));
    CHECK(g.psi(0.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(g.origin.y + g.psi(0.1) == doctest::Approx(iface.height(0.4)));
    CHECK(iface.above({0.3, 0.6}));
}
