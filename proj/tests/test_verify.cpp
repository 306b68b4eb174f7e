#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "tlab/experiments.hpp"
#include "tlab/verify.hpp"

using namespace tlab;

namespace {

std::shared_ptr<const Mesh> mesh_of(Box domain, double h, const std::optional<InterfaceCurve>& iface = std::nullopt) {
    MeshSpec s;
    s.domain = domain;
    s.interface = iface;
    s.h = h;
    return std::make_shared<const Mesh>(build_mesh(s));
}

InterfaceCurve wavy() {
    InterfaceCurve iface;
    iface.level = 0.5;
    iface.offset = [](double x) { return 0.05 * std::sin(2 * pi * x); };
    return iface;
}

DiscreteSolution layered_solution(ScalarField phi, double h = 1.0 / 64) {
    Problem p;
    p.coefficient.plus = [](Vec2) { return Mat2::identity(2.0); };
    p.boundary.phi = std::move(phi);
    return solve_dirichlet(mesh_of({0, 1, 0, 1}, h, wavy()), p);
}

PulledBackRegions acceptance_regions() {
    WeightConfig c;
    c.alpha_plus = 0.5;
    c.alpha_minus = 0.1;
    c.beta = 0.05;
    const WeightParams p = make_weight_params(c);
    return pull_back_regions(wavy().chart(0.5, 0.45), make_regions(p, 0.5 * p.R, p.R));
}

VerificationReport report_with_ratio(double ratio, int i) {
    VerificationReport r;
    r.id = "m" + std::to_string(i);
    r.inequality = "test";
    r.lhs = ratio;
    r.m1 = r.m3 = 1.0;
    r.ratio = ratio;
    return r;
}

}  // namespace

TEST_CASE("interpolation ratio edge cases") {
    bool violation = true;
    CHECK(interpolation_ratio(0.0, 0.0, 1.0, 0.25, 0.75, &violation) == 0.0);
    CHECK_FALSE(violation);
    CHECK(std::isinf(interpolation_ratio(1.0, 0.0, 1.0, 0.25, 0.75, &violation)));
    CHECK(violation);
    CHECK(interpolation_ratio(4.0, 1.0, 16.0, 0.5, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("zero solution has ratio zero") {
    const DiscreteSolution sol = layered_solution([](Vec2) { return 0.0; });
    const VerificationReport r = three_region_check(sol, acceptance_regions(), Form::gradient);
    CHECK(r.lhs == 0.0);
    CHECK(r.ratio == 0.0);
    CHECK_FALSE(r.violation_candidate);
}

TEST_CASE("three-region ratios are invariant under scaling") {
    const DiscreteSolution sol = layered_solution([](Vec2 q) { return std::sin(2 * q.x + 0.3) * std::exp(q.y) + q.x; });
    const PulledBackRegions regions = acceptance_regions();
    for (Form f : {Form::gradient, Form::value}) {
        const VerificationReport a = three_region_check(sol, regions, f);
        CHECK(a.ratio > 0);
        CHECK(a.m1 <= a.m3);
        CHECK(a.lhs <= a.m3);
        CHECK(a.kappa1 + a.kappa2 == 1.0);
        for (double c : {2.0, -3.0, 1e-3}) {
            const VerificationReport b = three_region_check(scaled(sol, c), regions, f);
            CHECK(b.lhs == doctest::Approx(c * c * a.lhs).epsilon(1e-12));
            CHECK(std::abs(b.ratio - a.ratio) <= 1e-12 * a.ratio);
        }
    }
}

TEST_CASE("three-region regions outside the domain are rejected") {
    WeightConfig c;
    c.beta = 0.05;
    c.alpha_minus = 0.1;
    c.alpha_plus = 0.5;
    const WeightParams p = make_weight_params(c);
    InterfaceCurve iface = wavy();
    const PulledBackRegions far = pull_back_regions(iface.chart(0.5, 0.45), make_regions(p, 0.5 * p.R, p.R));
    const DiscreteSolution sol = [] {
        Problem pr;
        pr.boundary.phi = [](Vec2 q) { return q.x; };
        return solve_dirichlet(mesh_of({0.45, 0.55, 0.45, 0.55}, 0.01), pr);
    }();
    CHECK_THROWS_AS(three_region_check(sol, far, Form::gradient), Error);
}

TEST_CASE("three-sphere disk-area case gives 4/3") {
    Problem p;
    p.boundary.phi = [](Vec2 q) { return q.x; };
    const DiscreteSolution sol = solve_dirichlet(mesh_of({-4, 4, -4, 4}, 0.1), p);
    const VerificationReport r = three_sphere_check(sol, {0, 0}, 1, 2, 3, 0.5);
    // |B2| / (|B1|^(1/2) |B3|^(1/2)) with |grad u| = 1
    CHECK(r.ratio == doctest::Approx(4.0 / 3).epsilon(1e-2));
    CHECK(std::abs(r.ratio - 4.0 / 3) <= 1e-2);
    CHECK(r.kappa1 == 0.5);
}

TEST_CASE("three-sphere ratios are translation equivariant") {
    Problem p;
    const auto f = [](Vec2 q) { return std::cos(q.x) * std::exp(q.y) + 0.2 * q.x * q.y; };
    p.boundary.phi = f;
    const DiscreteSolution a = solve_dirichlet(mesh_of({0, 2, 0, 2}, 0.05), p);
    const Vec2 shift{5, -3};
    Problem q;
    q.boundary.phi = [=](Vec2 z) { return f(z - shift); };
    const DiscreteSolution b = solve_dirichlet(mesh_of({5, 7, -3, -1}, 0.05), q);
    const VerificationReport ra = three_sphere_check(a, {1, 1}, 0.2, 0.4, 0.8);
    const VerificationReport rb = three_sphere_check(b, Vec2{1, 1} + shift, 0.2, 0.4, 0.8);
    CHECK(rb.ratio == doctest::Approx(ra.ratio).epsilon(1e-6));
}

TEST_CASE("three-sphere balls must stay inside one subdomain") {
    const DiscreteSolution sol = layered_solution([](Vec2 q) { return q.x; }, 0.05);
    CHECK_THROWS_AS(three_sphere_check(sol, {0.5, 0.6}, 0.05, 0.1, 0.2), Error);
    CHECK_THROWS_AS(three_sphere_check(sol, {0.5, 0.9}, 0.05, 0.1, 0.2), Error);
    CHECK_NOTHROW(three_sphere_check(sol, {0.5, 0.8}, 0.04, 0.08, 0.15));
}

TEST_CASE("propagation constant for u = x") {
    Problem p;
    p.boundary.phi = [](Vec2 q) { return q.x; };
    const DiscreteSolution sol = solve_dirichlet(mesh_of({0, 1, 0, 1}, 1.0 / 64), p);
    const double rho = 0.05;
    const auto centers = admissible_centers(*sol.mesh, rho, 0.05, nullptr);
    CHECK(centers.size() == 19 * 19);
    const PropagationResult r = propagation_constant(sol, rho, centers);
    CHECK(std::abs(r.constant - pi * rho * rho) <= 1e-3);
    CHECK(r.total_energy == doctest::Approx(1.0));
}

TEST_CASE("propagation rejects constants and empty centre sets") {
    Problem p;
    p.boundary.phi = [](Vec2) { return 1.0; };
    const DiscreteSolution sol = solve_dirichlet(mesh_of({0, 1, 0, 1}, 0.1), p);
    const std::vector<Vec2> centers{{0.5, 0.5}};
    try {
        propagation_constant(sol, 0.1, centers);
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::validation);
    }
    Problem q;
    q.boundary.phi = [](Vec2 z) { return z.x; };
    const DiscreteSolution lin = solve_dirichlet(sol.mesh, q);
    CHECK_THROWS_AS(propagation_constant(lin, 0.1, std::vector<Vec2>{}), Error);
    CHECK(admissible_centers(*sol.mesh, 0.6, 0.1, nullptr).empty());
}

TEST_CASE("admissible centres stay above the interface") {
    const auto mesh = mesh_of({0, 1, 0, 1}, 0.05, wavy());
    const InterfaceCurve iface = wavy();
    for (Vec2 c : admissible_centers(*mesh, 0.05, 0.05, &iface)) CHECK(c.y - 0.05 >= iface.height(c.x) - 0.06);
}

TEST_CASE("boundary data ratio") {
    const auto mesh = mesh_of({0, 1, 0, 1}, 0.1);
    const BoundaryDataRatio b = boundary_data_ratio(*mesh, [](Vec2 q) { return q.x + q.y; });
    CHECK(b.alpha_prime == doctest::Approx(1.0 / 8));
    CHECK(b.ratio > 0);
    CHECK(std::isfinite(b.ratio));
    CHECK(boundary_data_ratio(*mesh, [](Vec2) { return 2.0; }).ratio == 0.0);
}

TEST_CASE("calibration with equal ratios passes everything") {
    std::vector<VerificationReport> reports;
    for (int i = 0; i < 20; ++i) reports.push_back(report_with_ratio(0.7, i));
    const CalibrationSet cs = calibrate(reports, 5, 2.0);
    CHECK(cs.constant == 0.7);
    CHECK(cs.holdout_pass_rate == 1.0);
    CHECK(cs.fit.size() == 10);
    CHECK(cs.holdout.size() == 10);
}

TEST_CASE("an outlier at 3x the fitted constant fails the holdout at safety 2") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<VerificationReport> reports;
        for (int i = 0; i < 20; ++i) reports.push_back(report_with_ratio(i == 7 ? 3.0 : 1.0, i));
        const CalibrationSet cs = calibrate(reports, seed, 2.0);
        const bool outlier_in_fit = std::find(cs.fit.begin(), cs.fit.end(), 7u) != cs.fit.end();
        if (outlier_in_fit) {
            CHECK(cs.constant == 3.0);
            CHECK(cs.holdout_pass_rate == 1.0);
        } else {
            CHECK(cs.constant == 1.0);
            CHECK(cs.holdout_pass_rate == doctest::Approx(0.9));
            CHECK(*cs.reports[7].pass == false);
        }
    }
}

TEST_CASE("calibration split properties") {
    Rng rng(44);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<VerificationReport> reports;
        const int n = 10 + static_cast<int>(rng.index(30));
        for (int i = 0; i < n; ++i) reports.push_back(report_with_ratio(rng.uniform(0, 2), i));
        const double safety = rng.uniform(1, 3);
        const std::uint64_t seed = rng.bits();
        const CalibrationSet a = calibrate(reports, seed, safety), b = calibrate(reports, seed, safety);
        CHECK(a.fit == b.fit);
        CHECK(a.fit.size() + a.holdout.size() == reports.size());
        for (std::size_t i : a.fit) CHECK(std::find(a.holdout.begin(), a.holdout.end(), i) == a.holdout.end());
        for (const VerificationReport& r : a.reports) {
            CHECK(r.ratio >= 0);
            CHECK(*r.pass == (r.ratio <= a.constant * safety));
        }
    }
    std::vector<VerificationReport> few(9, report_with_ratio(1, 0));
    CHECK_THROWS_AS(calibrate(few, 1), Error);
    std::vector<VerificationReport> ten(10, report_with_ratio(1, 0));
    CHECK_THROWS_AS(calibrate(ten, 1, 0.5), Error);
}

TEST_CASE("scaled copies values and gradients") {
    const DiscreteSolution sol = layered_solution([](Vec2 q) { return q.x * q.y; }, 0.1);
    const DiscreteSolution s = scaled(sol, -2.0);
    for (std::size_t i = 0; i < sol.values.size(); ++i) CHECK(s.values[i] == -2.0 * sol.values[i]);
    for (std::size_t t = 0; t < sol.gradients.size(); ++t) CHECK(s.gradients[t].y == -2.0 * sol.gradients[t].y);
}
