#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "tlab/functionals.hpp"
#include "tlab/random.hpp"
#include "tlab/sizeest.hpp"

using namespace tlab;

namespace {

std::shared_ptr<const Mesh> mesh_of(double h, std::optional<Shape> inclusion = std::nullopt,
                                    std::optional<double> level = std::nullopt) {
    MeshSpec s;
    s.domain = {0, 1, 0, 1};
    s.h = h;
    s.inclusion = inclusion;
    if (level) {
        InterfaceCurve iface;
        iface.level = *level;
        s.interface = iface;
    }
    return std::make_shared<const Mesh>(build_mesh(s));
}

Problem unit_problem(ScalarField phi, unsigned sides = all_sides) {
    Problem p;
    p.boundary.phi = std::move(phi);
    p.boundary.dirichlet_sides = sides;
    return p;
}

InclusionScenario strip(double lo, double hi, double a_hat) {
    InclusionScenario s;
    s.shape = Shape::polygon({{0, lo}, {1, lo}, {1, hi}, {0, hi}});
    s.a_hat = [a_hat](Vec2) { return Mat2::identity(a_hat); };
    s.eta = 0.5;
    s.zeta = 2.0;
    return s;
}

// direct double sum over ordered pairs at distance two or more samples
double seminorm_oracle(const std::vector<double>& f, double spacing) {
    double s = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double d = std::abs(double(i) - double(j)) * spacing;
            if (d < 1.5 * spacing) continue;
            s += (f[i] - f[j]) * (f[i] - f[j]) / (d * d) * spacing * spacing;
        }
    return s;
}

std::vector<double> samples(int n, const std::function<double(double)>& f) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = f(double(i) / (n - 1));
    return v;
}

}  // namespace

TEST_CASE("region integral examples") {
    const auto mesh = mesh_of(1.0 / 32);
    const DiscreteSolution one = solve_dirichlet(mesh, unit_problem([](Vec2) { return 1.0; }));
    const RegionIntegral whole = region_integral(one, whole_domain(), Integrand::value_squared);
    CHECK_FALSE(whole.empty);
    CHECK(whole.value == doctest::Approx(1.0).epsilon(1e-12));

    const DiscreteSolution lin = solve_dirichlet(mesh, unit_problem([](Vec2 q) { return q.x; }));
    const RegionIntegral disk = region_integral(lin, disk_region({0.4, 0.6}, 0.2), Integrand::gradient_squared);
    CHECK(disk.value == doctest::Approx(pi * 0.04).epsilon(1e-3));
    Region left{[](Vec2 q) { return q.x < 0.5; }, Box{0, 0.5, 0, 1}};
    CHECK(region_integral(lin, left, Integrand::value_squared).value == doctest::Approx(1.0 / 24).epsilon(1e-3));
    CHECK(region_integral(lin, left, Integrand::gradient_squared).value == doctest::Approx(0.5).epsilon(1e-3));

    Region nothing{[](Vec2) { return false; }, std::nullopt};
    const RegionIntegral none = region_integral(lin, nothing, Integrand::value_squared);
    CHECK(none.empty);
    CHECK(none.value == 0.0);
}

TEST_CASE("region integral is monotone under inclusion") {
    const auto mesh = mesh_of(1.0 / 16, std::nullopt, 0.5);
    Problem p = unit_problem([](Vec2 q) { return std::sin(3 * q.x) * std::exp(q.y); });
    p.coefficient.plus = [](Vec2) { return Mat2::identity(2.5); };
    const DiscreteSolution sol = solve_dirichlet(mesh, p);
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        const Vec2 c{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
        const double r2 = rng.uniform(0.05, 0.2), r1 = r2 * rng.uniform(0.1, 1.0);
        const Vec2 c1 = c + (r2 - r1) * rng.uniform() * Vec2{1, 0};
        for (Integrand k : {Integrand::value_squared, Integrand::gradient_squared}) {
            const double small = region_integral(sol, disk_region(c1, r1), k).value;
            const double big = region_integral(sol, disk_region(c, r2), k).value;
            CHECK(small >= 0.0);
            CHECK(small <= big);
        }
    }
}

TEST_CASE("subdomain integral matches tagged area") {
    const auto mesh = mesh_of(0.05, std::nullopt, 0.3);
    const DiscreteSolution lin = solve_dirichlet(mesh, unit_problem([](Vec2 q) { return q.x; }));
    CHECK(subdomain_integral(lin, Subdomain::plus, Integrand::gradient_squared) == doctest::Approx(0.7));
    CHECK(subdomain_integral(lin, Subdomain::minus, Integrand::value_squared) == doctest::Approx(0.1));
}

TEST_CASE("power of the trivial case") {
    const auto mesh = mesh_of(1.0 / 32);
    const Problem p = unit_problem([](Vec2 q) { return q.x; });
    const PowerValues pw = power(solve_dirichlet(mesh, p), p);
    CHECK(pw.volume == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(pw.discrepancy <= 1e-8);
}

TEST_CASE("power requires the matching coefficient") {
    const auto mesh = mesh_of(0.1);
    const Problem p = unit_problem([](Vec2 q) { return q.x; });
    Problem other = p;
    other.coefficient.plus = other.coefficient.minus = [](Vec2) { return Mat2::identity(2.0); };
    CHECK_THROWS_AS(power(solve_dirichlet(mesh, p), other), Error);
}

TEST_CASE("series medium: W0 = 1, W = 4/3") {
    const InclusionScenario inc = strip(0.25, 0.75, 2.0);
    const auto mesh = mesh_of(1.0 / 64, inc.shape);
    const Problem bg = unit_problem([](Vec2 q) { return q.y; }, side_bottom | side_top);
    const PowerReport pr = measure_gap(mesh, bg, inc);
    // 1 / int dy / sigma
    CHECK(pr.W0 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(pr.W == doctest::Approx(1.0 / (0.5 + 0.25)).epsilon(1e-10));
    CHECK(pr.gap == doctest::Approx(-1.0 / 3).epsilon(1e-10));
    CHECK(pr.normalized_gap == doctest::Approx(1.0 / 3).epsilon(1e-10));
    CHECK(pr.inclusion_energy == doctest::Approx(0.5).epsilon(1e-10));
    const EnergyLemmaRecord rec = energy_lemma_check(pr, JumpType::raise, 0.5, 2.0);
    CHECK(rec.rho == doctest::Approx(2.0 / 3).epsilon(1e-9));
    CHECK(rec.sign_ok);
    CHECK_FALSE(energy_lemma_check(pr, JumpType::lower, 0.5, 0.5).sign_ok);
}

TEST_CASE("lowering the conductivity lowers the power") {
    const InclusionScenario inc = strip(0.25, 0.75, 0.5);
    const auto mesh = mesh_of(1.0 / 32, inc.shape);
    const PowerReport pr = measure_gap(mesh, unit_problem([](Vec2 q) { return q.y; }, side_bottom | side_top), inc);
    CHECK(pr.W == doctest::Approx(1.0 / (0.5 + 1.0)).epsilon(1e-10));
    CHECK(energy_lemma_check(pr, JumpType::lower, 0.5, 0.25).sign_ok);
}

TEST_CASE("no contrast gives zero gap and rho") {
    const InclusionScenario inc = strip(0.25, 0.75, 1.0);
    const auto mesh = mesh_of(0.05, inc.shape);
    const PowerReport pr = measure_gap(mesh, unit_problem([](Vec2 q) { return q.x * q.y + q.y; }), inc);
    CHECK(pr.gap == 0.0);
    CHECK(energy_lemma_check(pr, JumpType::raise, 0.5, 2).rho == 0.0);
    PowerReport broken = pr;
    broken.inclusion_energy = 0.0;
    broken.gap = 1e-3;
    CHECK_THROWS_AS(energy_lemma_check(broken, JumpType::raise, 0.5, 2), Error);
}

TEST_CASE("Green identity discrepancy shrinks under refinement") {
    Problem p = unit_problem([](Vec2 q) { return q.x + 0.3 * std::cos(3 * q.x + 1) * std::cosh(3 * q.y); });
    p.coefficient.plus = [](Vec2) { return Mat2::identity(2.0); };
    double prev = 1e300;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const PowerValues pw = power(solve_dirichlet(mesh_of(h, std::nullopt, 0.5), p), p);
        CHECK(pw.volume > 0);
        CHECK(pw.discrepancy < prev);
        prev = pw.discrepancy;
    }
}

TEST_CASE("seminorm examples and invariances") {
    CHECK(h_half_seminorm(std::vector<double>(16, 2.5), 0.1) == 0.0);
    const auto f64 = samples(65, [](double s) { return s; });
    const auto f128 = samples(129, [](double s) { return s; });
    const double a = h_half_seminorm(f64, 1.0 / 64), b = h_half_seminorm(f128, 1.0 / 128);
    CHECK(a > 0);
    CHECK(std::abs(a - b) / b < 0.05);
    CHECK(a == doctest::Approx(seminorm_oracle(f64, 1.0 / 64)).epsilon(1e-12));

    Rng rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> f(8 + rng.index(60));
        for (double& v : f) v = rng.normal();
        const double base = h_half_seminorm(f, 0.1);
        std::vector<double> twice = f, shifted = f;
        for (double& v : twice) v *= 2;
        for (double& v : shifted) v += 0.75;
        CHECK(h_half_seminorm(twice, 0.1) == doctest::Approx(4 * base).epsilon(1e-14));
        CHECK(h_half_seminorm(shifted, 0.1) == doctest::Approx(base).epsilon(1e-12));
        CHECK(base == doctest::Approx(seminorm_oracle(f, 0.1)).epsilon(1e-12));
        CHECK(h_half_seminorm(f, 0.1, true) <= base * 10);
    }
    CHECK_THROWS_AS(h_half_seminorm(std::vector<double>(7, 1.0), 0.1), Error);
}

TEST_CASE("closed seminorm wraps around") {
    std::vector<double> f(32);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::cos(2 * pi * i / 32.0);
    std::vector<double> rotated(f.begin() + 5, f.end());
    rotated.insert(rotated.end(), f.begin(), f.begin() + 5);
    CHECK(h_half_seminorm(f, 0.1, true) == doctest::Approx(h_half_seminorm(rotated, 0.1, true)).epsilon(1e-12));
}

TEST_CASE("transmission residuals are small and decrease") {
    Problem p = unit_problem([](Vec2 q) { return q.x + 0.5 * q.y * q.y; });
    p.coefficient.plus = [](Vec2) { return Mat2::identity(3.0); };
    double prev = 1e300;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const TransmissionData td = transmission_residuals(solve_dirichlet(mesh_of(h, std::nullopt, 0.5), p));
        CHECK(td.h0_l2 <= 1e-12);
        CHECK(td.interface_length == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(td.h1_weak < prev);
        prev = td.h1_weak;
    }
}

TEST_CASE("energy lemma summary") {
    std::vector<EnergyLemmaRecord> r(3);
    r[0].rho = 0.5;
    r[1].rho = 2.0;
    r[2].rho = 1.0;
    const EnergyLemmaSummary s = summarize_energy_lemma(r);
    CHECK(s.count == 3);
    CHECK(s.min_rho == 0.5);
    CHECK(s.max_rho == 2.0);
    CHECK(s.spread == 4.0);
    CHECK(s.all_signs_ok);
    r[1].sign_ok = false;
    CHECK_FALSE(summarize_energy_lemma(r).all_signs_ok);
}

TEST_CASE("ledger rows") {
    std::ostringstream os;
    write_ledger_header(os);
    append_ledger_row(os, "solve", "W0", "omega", 1.5, 0.03125);
    CHECK(os.str() == "experiment,functional,region,value,mesh_h\nsolve,W0,omega,1.5,0.03125\n");
}
