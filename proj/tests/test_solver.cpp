#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "doctest.h"
#include "tlab/functionals.hpp"
#include "tlab/random.hpp"
#include "tlab/solver.hpp"

using namespace tlab;

namespace {

std::shared_ptr<const Mesh> square_mesh(double h, std::optional<double> level = std::nullopt,
                                        std::function<double(double)> offset = {}) {
    MeshSpec s;
    s.domain = {0, 1, 0, 1};
    if (level) {
        InterfaceCurve iface;
        iface.level = *level;
        if (offset) iface.offset = offset;
        s.interface = iface;
    }
    s.h = h;
    return std::make_shared<const Mesh>(build_mesh(s));
}

Problem layered_problem(double plus, double minus) {
    Problem p;
    p.coefficient.plus = [plus](Vec2) { return Mat2::identity(plus); };
    p.coefficient.minus = [minus](Vec2) { return Mat2::identity(minus); };
    return p;
}

double max_nodal_error(const DiscreteSolution& sol, const ScalarField& exact) {
    double e = 0;
    for (std::size_t i = 0; i < sol.mesh->num_vertices(); ++i)
        e = std::max(e, std::abs(sol.values[i] - exact(sol.mesh->vertices[i])));
    return e;
}

double energy(const DiscreteSolution& sol) {
    double e = 0;
    for (std::size_t t = 0; t < sol.mesh->num_triangles(); ++t)
        e += sol.mesh->area(t) * dot(sol.coefficients[t] * sol.gradients[t], sol.gradients[t]);
    return e;
}

}  // namespace

TEST_CASE("linear data is reproduced exactly") {
    Problem p = layered_problem(1, 1);
    p.boundary.phi = [](Vec2 q) { return q.x; };
    const DiscreteSolution sol = solve_dirichlet(square_mesh(1.0 / 32), p);
    CHECK(max_nodal_error(sol, p.boundary.phi) <= 1e-10);
    for (Vec2 g : gradient_field(sol)) {
        CHECK(g.x == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(g.y) <= 1e-9);
    }
    CHECK(sol.diagnostics.residual <= 1e-10);
}

TEST_CASE("constant data gives zero gradients") {
    Problem p = layered_problem(2, 1);
    p.boundary.phi = [](Vec2) { return 3.0; };
    const DiscreteSolution sol = solve_dirichlet(square_mesh(0.1, 0.5), p);
    for (double v : sol.values) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));
    for (Vec2 g : sol.gradients) CHECK(norm(g) <= 1e-10);
}

TEST_CASE("two-layer series medium") {
    Problem p = layered_problem(2, 1);
    p.boundary.phi = [](Vec2 q) { return q.y; };
    p.boundary.dirichlet_sides = side_bottom | side_top;
    const DiscreteSolution sol = solve_dirichlet(square_mesh(1.0 / 32, 0.5), p);
    // k+ / (k+ + k-) at the interface, linear on each side
    const auto exact = [](Vec2 q) { return q.y < 0.5 ? 4.0 / 3 * q.y : 1.0 / 3 + 2.0 / 3 * q.y; };
    CHECK(max_nodal_error(sol, exact) <= 1e-10);
    for (std::size_t i = 0; i < sol.mesh->num_vertices(); ++i)
        if (sol.mesh->vertices[i].y == 0.5) CHECK(std::abs(sol.values[i] - 2.0 / 3) <= 1e-10);
    for (std::size_t t = 0; t < sol.mesh->num_triangles(); ++t) {
        const Vec2 g = sol.gradients[t];
        const bool plus = sol.mesh->tags[t] == Subdomain::plus;
        CHECK(std::abs(g.x) <= 1e-9);
        CHECK(g.y == doctest::Approx(plus ? 2.0 / 3 : 4.0 / 3).epsilon(1e-9));
        CHECK(sol.coefficients[t].yy * g.y == doctest::Approx(4.0 / 3).epsilon(1e-9));
    }
}

TEST_CASE("Dirichlet nodes carry the prescribed data exactly") {
    Problem p = layered_problem(3, 1);
    p.boundary.phi = [](Vec2 q) { return std::sin(3 * q.x) * std::cosh(q.y); };
    const DiscreteSolution sol = solve_dirichlet(square_mesh(0.05, 0.4), p);
    for (std::size_t i = 0; i < sol.mesh->num_vertices(); ++i)
        if (sol.mesh->boundary[i]) CHECK(sol.values[i] == p.boundary.phi(sol.mesh->vertices[i]));
    CHECK(sol.diagnostics.dirichlet_nodes > 0);
    CHECK(sol.diagnostics.unknowns + sol.diagnostics.dirichlet_nodes == sol.mesh->num_vertices());
}

TEST_CASE("manufactured solution converges at second order") {
    const auto A = [](Vec2 q) { return 1 + q.x * q.y; };
    const ScalarField exact = [](Vec2 q) { return std::sin(pi * q.x) * std::exp(q.y); };
    Problem p;
    p.coefficient.plus = p.coefficient.minus = [A](Vec2 q) { return Mat2::identity(A(q)); };
    p.boundary.phi = exact;
    // f = -div(A grad u), differentiated by hand
    p.source = [A](Vec2 q) {
        const double s = std::sin(pi * q.x), c = std::cos(pi * q.x), e = std::exp(q.y);
        return -(q.y * pi * c * e + q.x * s * e + A(q) * (1 - pi * pi) * s * e);
    };
    const double e1 = l2_error(solve_dirichlet(square_mesh(1.0 / 16), p), exact);
    const double e2 = l2_error(solve_dirichlet(square_mesh(1.0 / 32), p), exact);
    const double rate = std::log2(e1 / e2);
    MESSAGE("L2 errors " << e1 << " " << e2 << " rate " << rate);
    CHECK(rate >= 1.8);
}

TEST_CASE("discrete maximum principle") {
    Rng rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const double k = std::exp(rng.uniform(-1.5, 1.5));
        const double a = rng.uniform(0.5, 3), b = rng.uniform(-1, 1), c = rng.uniform(0, 6);
        Problem p = layered_problem(k, 1);
        p.boundary.phi = [=](Vec2 q) { return std::sin(a * q.x + c) * std::exp(b * q.y) + q.x * q.y; };
        const double h = 0.05;
        const DiscreteSolution sol =
            solve_dirichlet(square_mesh(h, 0.5, [](double x) { return 0.1 * std::sin(2 * pi * x); }), p);
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < sol.mesh->num_vertices(); ++i) {
            if (!sol.mesh->boundary[i]) continue;
            lo = std::min(lo, sol.values[i]);
            hi = std::max(hi, sol.values[i]);
        }
        for (double v : sol.values) {
            CHECK(v >= lo - h * h);
            CHECK(v <= hi + h * h);
        }
    }
}

TEST_CASE("discrete energy does not increase under refinement") {
    Problem p = layered_problem(3, 1);
    p.boundary.phi = [](Vec2 q) { return q.x + 0.3 * q.y; };
    double prev = 1e300;
    for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const DiscreteSolution sol =
            solve_dirichlet(square_mesh(h, 0.45, [](double x) { return 0.08 * std::sin(2 * pi * x); }), p);
        const double e = energy(sol);
        CHECK(e <= prev * (1 + 1e-8));
        prev = e;
    }
}

TEST_CASE("iterative path agrees with the direct path") {
    Problem p = layered_problem(2, 1);
    p.boundary.phi = [](Vec2 q) { return std::cos(2 * q.x) * std::exp(q.y); };
    const auto mesh = square_mesh(0.04, 0.5);
    const DiscreteSolution direct = solve_dirichlet(mesh, p);
    SolverOptions opt;
    opt.direct_limit = 10;
    const DiscreteSolution cg = solve_dirichlet(mesh, p, opt);
    CHECK(cg.diagnostics.method != direct.diagnostics.method);
    CHECK(cg.diagnostics.iterations > 0);
    CHECK(cg.diagnostics.residual <= 1e-10);
    CHECK(!cg.diagnostics.residual_history.empty());
    double diff = 0;
    for (std::size_t i = 0; i < direct.values.size(); ++i) diff = std::max(diff, std::abs(direct.values[i] - cg.values[i]));
    CHECK(diff <= 1e-8);
}

TEST_CASE("iteration cap reports divergence") {
    Problem p = layered_problem(2, 1);
    p.boundary.phi = [](Vec2 q) { return q.x * q.y; };
    SolverOptions opt;
    opt.direct_limit = 10;
    opt.max_iterations = 2;
    try {
        solve_dirichlet(square_mesh(0.04, 0.5), p, opt);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::solver_diverged);
    }
}

TEST_CASE("lower-order terms use the general solver") {
    // u = exp(x) solves u_xx - u_x = 0 with W = (-1, 0), V = 0
    Problem p = layered_problem(1, 1);
    LowerOrderTerms lot;
    lot.W = [](Vec2) { return Vec2{-1, 0}; };
    p.lower_order = lot;
    const ScalarField exact = [](Vec2 q) { return std::exp(q.x); };
    p.boundary.phi = exact;
    const double e1 = l2_error(solve_dirichlet(square_mesh(1.0 / 16), p), exact);
    const DiscreteSolution fine = solve_dirichlet(square_mesh(1.0 / 32), p);
    const double e2 = l2_error(fine, exact);
    CHECK(std::log2(e1 / e2) >= 1.8);
    CHECK(fine.diagnostics.method != solve_dirichlet(square_mesh(1.0 / 32), layered_problem(1, 1)).diagnostics.method);
}

TEST_CASE("indefinite coefficients are rejected") {
    Problem p = layered_problem(-1, 1);
    p.boundary.phi = [](Vec2 q) { return q.x; };
    try {
        solve_dirichlet(square_mesh(0.1, 0.5), p);
        FAIL("expected an indefinite system");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::indefinite_system);
    }
}

TEST_CASE("solution and gradient CSV") {
    Problem p = layered_problem(1, 1);
    p.boundary.phi = [](Vec2 q) { return q.y; };
    const DiscreteSolution sol = solve_dirichlet(square_mesh(0.25), p);
    std::stringstream a, b;
    write_solution_csv(sol, a);
    write_gradient_csv(sol, b);
    std::string line;
    int rows = -1;
    while (std::getline(a, line)) ++rows;
    CHECK(rows == static_cast<int>(sol.mesh->num_vertices()));
    rows = -1;
    while (std::getline(b, line)) ++rows;
    CHECK(rows == static_cast<int>(sol.mesh->num_triangles()));
}

TEST_CASE("interpolation and element gradients") {
    const auto mesh = square_mesh(0.1);
    const auto v = interpolate(*mesh, [](Vec2 q) { return 2 * q.x - 3 * q.y + 1; });
    for (Vec2 g : element_gradients(*mesh, v)) {
        CHECK(g.x == doctest::Approx(2.0));
        CHECK(g.y == doctest::Approx(-3.0));
    }
}
