#include "tlab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace tlab {

namespace {

bool overlaps(const Box& a, const Box& b) { return a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1; }

struct Accumulator {
    const Region& region;
    Integrand integrand;
    Vec2 grad;
    double sum = 0.0;
    bool hit = false;

    // p: corners, u: linear values at the corners
    void visit(const std::array<Vec2, 3>& p, const std::array<double, 3>& u, int depth) {
        if (depth == 0) {
            const Vec2 c = (1.0 / 3.0) * (p[0] + p[1] + p[2]);
            if (!region.contains(c)) return;
            hit = true;
            const double area = 0.5 * std::abs(cross(p[1] - p[0], p[2] - p[0]));
            if (integrand == Integrand::gradient_squared) sum += area * dot(grad, grad);
            else
                sum += area / 6.0 *
                       (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[0] * u[1] + u[1] * u[2] + u[2] * u[0]);
            return;
        }
        const Vec2 m01 = 0.5 * (p[0] + p[1]), m12 = 0.5 * (p[1] + p[2]), m20 = 0.5 * (p[2] + p[0]);
        const double u01 = 0.5 * (u[0] + u[1]), u12 = 0.5 * (u[1] + u[2]), u20 = 0.5 * (u[2] + u[0]);
        visit({p[0], m01, m20}, {u[0], u01, u20}, depth - 1);
        visit({m01, p[1], m12}, {u01, u[1], u12}, depth - 1);
        visit({m20, m12, p[2]}, {u20, u12, u[2]}, depth - 1);
        visit({m12, m20, m01}, {u12, u20, u01}, depth - 1);
    }
};

}  // namespace

Region whole_domain() {
    return {[](Vec2) { return true; }, std::nullopt};
}

Region disk_region(Vec2 center, double radius) {
    return {[center, radius](Vec2 p) { return norm(p - center) < radius; },
            Box{center.x - radius, center.x + radius, center.y - radius, center.y + radius}};
}

Region pulled_back_region(const PulledBackRegions& regions, int j) {
    return {[regions, j](Vec2 p) { return regions.contains(j, p); }, regions.bounds(j)};
}

RegionIntegral region_integral(const DiscreteSolution& sol, const Region& region, Integrand integrand, int depth) {
    const Mesh& mesh = *sol.mesh;
    RegionIntegral out;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const std::array<Vec2, 3> p = {mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
        if (region.bounds) {
            const Box eb{std::min({p[0].x, p[1].x, p[2].x}), std::max({p[0].x, p[1].x, p[2].x}),
                         std::min({p[0].y, p[1].y, p[2].y}), std::max({p[0].y, p[1].y, p[2].y})};
            if (!overlaps(eb, *region.bounds)) continue;
        }
        Accumulator acc{region, integrand, sol.gradients[t]};
        acc.visit(p, {sol.values[tri[0]], sol.values[tri[1]], sol.values[tri[2]]}, depth);
        out.value += acc.sum;
        out.empty = out.empty && !acc.hit;
    }
    return out;
}

double subdomain_integral(const DiscreteSolution& sol, Subdomain tag, Integrand integrand) {
    const Mesh& mesh = *sol.mesh;
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        if (mesh.tags[t] != tag) continue;
        const auto& tri = mesh.triangles[t];
        const double area = mesh.area(t);
        if (integrand == Integrand::gradient_squared) {
            sum += area * dot(sol.gradients[t], sol.gradients[t]);
        } else {
            const double a = sol.values[tri[0]], b = sol.values[tri[1]], c = sol.values[tri[2]];
            sum += area / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
        }
    }
    return sum;
}

PowerValues power(const DiscreteSolution& sol, const Problem& problem) {
    const Mesh& mesh = *sol.mesh;
    const auto coeff = element_coefficients(mesh, problem);
    if (coeff != sol.coefficients)
        throw Error(ErrorCode::validation, "coefficient does not match the one the solution was computed with");
    PowerValues pv;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
        pv.volume += mesh.area(t) * dot(sol.gradients[t], coeff[t] * sol.gradients[t]);
    for (const MeshEdge& e : mesh_edges(mesh)) {
        if (e.right >= 0) continue;
        const Vec2 a = mesh.vertices[e.a], b = mesh.vertices[e.b];
        const Vec2 d = b - a;
        const Vec2 outward{d.y, -d.x};  // length-weighted, left triangle is counter-clockwise
        const Vec2 flux = coeff[e.left] * sol.gradients[e.left];
        pv.boundary += 0.5 * (sol.values[e.a] + sol.values[e.b]) * dot(flux, outward);
    }
    pv.discrepancy = pv.volume != 0.0 ? std::abs(pv.volume - pv.boundary) / std::abs(pv.volume)
                                      : std::abs(pv.boundary);
    return pv;
}

PowerReport make_power_report(const PowerValues& background, const PowerValues& perturbed, double inclusion_energy) {
    PowerReport pr;
    pr.W0 = background.volume;
    pr.W = perturbed.volume;
    pr.gap = pr.W0 - pr.W;
    pr.normalized_gap = pr.W0 > 0.0 ? std::abs(pr.gap) / pr.W0 : 0.0;
    pr.inclusion_energy = inclusion_energy;
    pr.W0_discrepancy = background.discrepancy;
    pr.W_discrepancy = perturbed.discrepancy;
    return pr;
}

double h_half_seminorm(std::span<const double> f, double spacing, bool closed) {
    const std::size_t n = f.size();
    if (n < 8) throw Error(ErrorCode::invalid_argument, "H^1/2 seminorm needs at least 8 samples");
    if (!(spacing > 0.0)) throw Error(ErrorCode::invalid_argument, "sample spacing must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t k = i > j ? i - j : j - i;
            if (closed) k = std::min(k, n - k);
            if (k < 2) continue;
            const double df = f[i] - f[j];
            row += df * df / static_cast<double>(k * k);
        }
        sum += row;
    }
    // |s_i - s_j|^2 = k^2 spacing^2 cancels against the spacing^2 measure
    return sum;
}

EnergyLemmaRecord energy_lemma_check(const PowerReport& pr, JumpType jump, double eta, double zeta) {
    EnergyLemmaRecord r;
    r.gap = pr.gap;
    r.inclusion_energy = pr.inclusion_energy;
    r.eta = eta;
    r.zeta = zeta;
    if (pr.inclusion_energy <= 0.0) {
        if (pr.gap != 0.0)
            throw Error(ErrorCode::validation, "zero inclusion energy with a nonzero power gap");
        r.rho = 0.0;
    } else {
        r.rho = std::abs(pr.gap) / pr.inclusion_energy;
    }
    const double raise = pr.W - pr.W0;
    r.sign_ok = jump == JumpType::raise ? raise >= 0.0 : raise <= 0.0;
    return r;
}

EnergyLemmaSummary summarize_energy_lemma(std::span<const EnergyLemmaRecord> records) {
    EnergyLemmaSummary s;
    s.count = records.size();
    if (records.empty()) return s;
    s.min_rho = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        s.all_finite = s.all_finite && std::isfinite(r.rho) && r.rho > 0.0;
        s.all_signs_ok = s.all_signs_ok && r.sign_ok;
        s.min_rho = std::min(s.min_rho, r.rho);
        s.max_rho = std::max(s.max_rho, r.rho);
    }
    s.spread = s.min_rho > 0.0 ? s.max_rho / s.min_rho : std::numeric_limits<double>::infinity();
    return s;
}

TransmissionData transmission_residuals(const DiscreteSolution& sol) {
    const Mesh& mesh = *sol.mesh;
    TransmissionData td;
    std::vector<double> tested(mesh.num_vertices(), 0.0);
    std::vector<char> on_interface(mesh.num_vertices(), 0);
    for (const MeshEdge& e : mesh_edges(mesh)) {
        if (e.right < 0) continue;
        const bool lminus = mesh.tags[e.left] == Subdomain::minus, rminus = mesh.tags[e.right] == Subdomain::minus;
        if (lminus == rminus) continue;
        const int below = lminus ? e.left : e.right, above = lminus ? e.right : e.left;
        const Vec2 a = mesh.vertices[e.a], b = mesh.vertices[e.b];
        const double len = norm(b - a);
        Vec2 n{-(b - a).y / len, (b - a).x / len};
        if (dot(n, mesh.centroid(above) - a) < 0.0) n = -1.0 * n;
        const double jump = dot(sol.coefficients[above] * sol.gradients[above] -
                                    sol.coefficients[below] * sol.gradients[below],
                                n);
        // traces of the two element polynomials at the edge midpoint
        auto trace = [&](int t) {
            const Vec2 m = 0.5 * (a + b);
            const auto& tri = mesh.triangles[t];
            const Vec2 p0 = mesh.vertices[tri[0]];
            return sol.values[tri[0]] + dot(sol.gradients[t], m - p0);
        };
        const double h0 = trace(above) - trace(below);
        td.h0_l2 += len * h0 * h0;
        td.h1_l2 += len * jump * jump;
        td.interface_length += len;
        tested[e.a] += 0.5 * len * jump;
        tested[e.b] += 0.5 * len * jump;
        on_interface[e.a] = on_interface[e.b] = 1;
    }
    td.h0_l2 = std::sqrt(td.h0_l2);
    td.h1_l2 = std::sqrt(td.h1_l2);
    double weak = 0.0;
    for (std::size_t v = 0; v < tested.size(); ++v)
        if (on_interface[v]) weak += tested[v] * tested[v];
    td.h1_weak = std::sqrt(weak);
    return td;
}

void write_ledger_header(std::ostream& os) { os << "experiment,functional,region,value,mesh_h\n"; }

void append_ledger_row(std::ostream& os, const std::string& experiment, const std::string& functional,
                       const std::string& region, double value, double mesh_h) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", value, mesh_h);
    os << experiment << ',' << functional << ',' << region << ',' << buf;
}

}  // namespace tlab
