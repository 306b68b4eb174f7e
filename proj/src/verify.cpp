#include "tlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tlab/random.hpp"

namespace tlab {

double interpolation_ratio(double lhs, double m1, double m3, double k1, double k2, bool* violation) {
    if (violation) *violation = false;
    if (lhs == 0.0) return 0.0;
    if (m1 == 0.0) {
        if (violation) *violation = true;
        return std::numeric_limits<double>::infinity();
    }
    return lhs / (std::pow(m1, k1) * std::pow(m3, k2));
}

namespace {

bool inside(const Box& outer, const Box& inner) {
    return inner.x0 >= outer.x0 && inner.x1 <= outer.x1 && inner.y0 >= outer.y0 && inner.y1 <= outer.y1;
}

}  // namespace

VerificationReport three_region_check(const DiscreteSolution& sol, const PulledBackRegions& regions, Form form) {
    const Box b3 = regions.bounds(3);
    if (!inside(sol.mesh->domain, b3)) throw Error(ErrorCode::geometry, "region U3 leaves the solved domain");
    const Integrand what = form == Form::gradient ? Integrand::gradient_squared : Integrand::value_squared;
    const RegionTriple& rt = regions.regions();
    VerificationReport r;
    r.inequality = form == Form::gradient ? "three-region-gradient" : "three-region-value";
    r.lhs = region_integral(sol, pulled_back_region(regions, 2), what).value;
    r.m1 = region_integral(sol, pulled_back_region(regions, 1), what).value;
    r.m3 = region_integral(sol, pulled_back_region(regions, 3), what).value;
    r.kappa1 = rt.kappa1;
    r.kappa2 = rt.kappa2;
    r.ratio = interpolation_ratio(r.lhs, r.m1, r.m3, r.kappa1, r.kappa2, &r.violation_candidate);
    r.mesh_h = sol.mesh->h_target;
    r.params = {{"R1", rt.R1}, {"R2", rt.R2}, {"a", rt.a}};
    return r;
}

VerificationReport three_sphere_check(const DiscreteSolution& sol, Vec2 center, double r1, double r2, double r3,
                                      double theta) {
    if (!(0.0 < r1 && r1 < r2 && r2 < r3)) throw Error(ErrorCode::invalid_argument, "radii must satisfy 0 < r1 < r2 < r3");
    if (!(theta > 0.0 && theta < 1.0)) throw Error(ErrorCode::invalid_argument, "theta must lie in (0, 1)");
    const Mesh& mesh = *sol.mesh;
    if (mesh.domain.distance_to_boundary(center) < r3) throw Error(ErrorCode::geometry, "ball leaves the domain");
    std::optional<Subdomain> tag;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        bool touches = norm(mesh.centroid(t) - center) <= r3;
        for (int v : mesh.triangles[t]) touches = touches || norm(mesh.vertices[v] - center) <= r3;
        if (!touches) continue;
        if (tag && *tag != mesh.tags[t]) throw Error(ErrorCode::geometry, "ball crosses the interface");
        tag = mesh.tags[t];
    }
    VerificationReport r;
    r.inequality = "three-sphere";
    r.lhs = region_integral(sol, disk_region(center, r2), Integrand::gradient_squared).value;
    r.m1 = region_integral(sol, disk_region(center, r1), Integrand::gradient_squared).value;
    r.m3 = region_integral(sol, disk_region(center, r3), Integrand::gradient_squared).value;
    r.kappa1 = theta;
    r.kappa2 = 1.0 - theta;
    r.ratio = interpolation_ratio(r.lhs, r.m1, r.m3, r.kappa1, r.kappa2, &r.violation_candidate);
    r.mesh_h = mesh.h_target;
    r.params = {{"cx", center.x}, {"cy", center.y}, {"r1", r1}, {"r2", r2}, {"r3", r3}, {"theta", theta}};
    return r;
}

std::vector<Vec2> admissible_centers(const Mesh& mesh, double rho, double spacing, const InterfaceCurve* interface) {
    if (!(rho > 0.0 && spacing > 0.0)) throw Error(ErrorCode::invalid_argument, "rho and spacing must be positive");
    const Box& d = mesh.domain;
    std::vector<Vec2> curve;
    if (interface) {
        const int n = 4000;
        for (int i = 0; i <= n; ++i) {
            const double x = d.x0 + d.width() * i / n;
            curve.push_back({x, interface->height(x)});
        }
    }
    std::vector<Vec2> out;
    const int nx = static_cast<int>(std::floor((d.width() - 2.0 * rho) / spacing + 1e-9));
    const int ny = static_cast<int>(std::floor((d.height() - 2.0 * rho) / spacing + 1e-9));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            const Vec2 c{d.x0 + rho + i * spacing, d.y0 + rho + j * spacing};
            if (d.distance_to_boundary(c) < rho * (1.0 - 1e-12)) continue;
            if (interface) {
                if (!interface->above(c)) continue;
                double dist = std::numeric_limits<double>::infinity();
                for (std::size_t k = 1; k < curve.size(); ++k) {
                    const Vec2 a = curve[k - 1], b = curve[k], ab = b - a;
                    const double t = std::clamp(dot(c - a, ab) / dot(ab, ab), 0.0, 1.0);
                    dist = std::min(dist, norm(c - (a + t * ab)));
                }
                if (dist <= rho) continue;
            }
            out.push_back(c);
        }
    return out;
}

BoundaryDataRatio boundary_data_ratio(const Mesh& mesh, const ScalarField& phi, double alpha, int samples) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::invalid_argument, "alpha must lie in (0, 1]");
    const int n = 2;
    BoundaryDataRatio r;
    r.alpha_prime = alpha / ((alpha + 1.0) * n * 2.0);
    if (!(r.alpha_prime > 0.0 && r.alpha_prime < alpha / ((alpha + 1.0) * n)))
        throw Error(ErrorCode::invalid_argument, "alpha' outside its admissible range");
    double len = 0.0, sum = 0.0;
    for (const MeshEdge& e : mesh_edges(mesh)) {
        if (e.right >= 0) continue;
        const Vec2 a = mesh.vertices[e.a], b = mesh.vertices[e.b];
        const double l = norm(b - a);
        len += l;
        sum += 0.5 * l * (phi(a) + phi(b));
    }
    r.phi0 = sum / len;
    const Box& d = mesh.domain;
    const double perimeter = 2.0 * (d.width() + d.height());
    const double ds = perimeter / samples;
    auto loop = [&](double s) {
        if (s < d.width()) return Vec2{d.x0 + s, d.y0};
        s -= d.width();
        if (s < d.height()) return Vec2{d.x1, d.y0 + s};
        s -= d.height();
        if (s < d.width()) return Vec2{d.x1 - s, d.y1};
        s -= d.width();
        return Vec2{d.x0, d.y1 - s};
    };
    std::vector<double> f(samples);
    for (int i = 0; i < samples; ++i) f[i] = phi(loop(i * ds)) - r.phi0;
    double sup = 0.0, slope = 0.0, l2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        sup = std::max(sup, std::abs(f[i]));
        slope = std::max(slope, std::abs(f[(i + 1) % samples] - f[i]) / ds);
        l2 += f[i] * f[i] * ds;
    }
    r.holder = sup + slope;
    r.h_half = std::sqrt(l2 + h_half_seminorm(f, ds, true));
    r.ratio = r.h_half > 0.0 ? r.holder / r.h_half : 0.0;
    return r;
}

PropagationResult propagation_constant(const DiscreteSolution& sol, double rho, std::span<const Vec2> centers,
                                       double alpha) {
    if (centers.empty()) throw Error(ErrorCode::geometry, "no admissible ball centres at this radius");
    const Mesh& mesh = *sol.mesh;
    PropagationResult pr;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
        pr.total_energy += mesh.area(t) * dot(sol.gradients[t], sol.gradients[t]);
    // gradients of a constant are rounding noise of size eps |u| / h
    double umax = 0.0;
    for (double v : sol.values) umax = std::max(umax, std::abs(v));
    const double noise = 1e-10 * umax / std::max(mesh.h_target, 1e-300);
    if (!(pr.total_energy > noise * noise * mesh.domain.area()))
        throw Error(ErrorCode::validation, "constant solution");
    pr.constant = std::numeric_limits<double>::infinity();
    for (Vec2 c : centers) {
        const double local = region_integral(sol, disk_region(c, rho), Integrand::gradient_squared, 5).value;
        const double ratio = local / pr.total_energy;
        if (ratio < pr.constant) {
            pr.constant = ratio;
            pr.argmin = c;
        }
    }
    pr.centers = centers.size();
    const BoundaryDataRatio bd = boundary_data_ratio(mesh, sol.boundary.phi, alpha);
    pr.boundary_ratio = bd.ratio;
    pr.alpha_prime = bd.alpha_prime;
    return pr;
}

CalibrationSet calibrate(std::vector<VerificationReport> reports, std::uint64_t seed, double safety,
                         double fit_fraction) {
    const std::size_t n = reports.size();
    if (n < 10) throw Error(ErrorCode::invalid_argument, "calibration needs at least 10 reports");
    if (!(safety >= 1.0)) throw Error(ErrorCode::invalid_argument, "safety factor must be at least 1");
    const auto n_fit = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fit_fraction));
    if (n_fit == 0 || n_fit >= n) throw Error(ErrorCode::invalid_argument, "fit fraction leaves an empty split");
    CalibrationSet cs;
    cs.inequality = reports.front().inequality;
    cs.safety = safety;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    cs.fit.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_fit));
    cs.holdout.assign(order.begin() + static_cast<std::ptrdiff_t>(n_fit), order.end());
    std::sort(cs.fit.begin(), cs.fit.end());
    std::sort(cs.holdout.begin(), cs.holdout.end());
    for (std::size_t i : cs.fit) {
        if (std::isfinite(reports[i].ratio)) cs.constant = std::max(cs.constant, reports[i].ratio);
        else ++cs.fit_violations;
    }
    const double bound = cs.constant * safety;
    std::size_t passed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = reports[i];
        const bool in_fit = std::binary_search(cs.fit.begin(), cs.fit.end(), i);
        r.split = in_fit ? "fit" : "holdout";
        r.fitted_constant = cs.constant;
        r.pass = r.lhs == 0.0 || (!r.violation_candidate && r.ratio <= bound);
        if (!in_fit) {
            passed += *r.pass ? 1 : 0;
            cs.max_holdout_ratio = std::max(cs.max_holdout_ratio, r.ratio);
        }
    }
    cs.holdout_pass_rate = static_cast<double>(passed) / static_cast<double>(cs.holdout.size());
    cs.reports = std::move(reports);
    return cs;
}

VerificationReport carleman_report(const CarlemanCurve& curve) {
    VerificationReport r;
    r.inequality = "carleman";
    r.id = curve.pair;
    std::size_t k = 0;
    for (std::size_t i = 0; i < curve.ratio.size(); ++i)
        if (curve.ratio[i] > curve.ratio[k]) k = i;
    if (!curve.terms.empty()) {
        r.lhs = curve.terms[k].lhs;
        r.m1 = curve.terms[k].rhs;
        r.m3 = 1.0;
        r.params["tau"] = curve.tau[k];
    }
    r.kappa1 = 1.0;
    r.kappa2 = 0.0;
    r.ratio = interpolation_ratio(r.lhs, r.m1, r.m3, 1.0, 0.0, &r.violation_candidate);
    return r;
}

}  // namespace tlab
