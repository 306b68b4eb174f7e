#include "tlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tlab/random.hpp"

namespace tlab {

namespace {

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

// Distance from (y0, y1), both >= 0, to the ellipse with semi-axes e0 >= e1 > 0.
double ellipse_distance_quadrant(double e0, double e1, double y0, double y1) {
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0, z1 = y1 / e1;
            double g = z0 * z0 + z1 * z1 - 1.0;
            if (g == 0.0) return 0.0;
            const double r0 = (e0 / e1) * (e0 / e1);
            const double n0 = r0 * z0;
            double s0 = z1 - 1.0;
            double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
            double s = 0.0;
            for (int i = 0; i < 200; ++i) {
                s = 0.5 * (s0 + s1);
                if (s == s0 || s == s1) break;
                const double a = n0 / (s + r0), b = z1 / (s + 1.0);
                g = a * a + b * b - 1.0;
                if (g > 0.0) s0 = s;
                else if (g < 0.0) s1 = s;
                else break;
            }
            const double x0 = r0 * y0 / (s + r0), x1 = y1 / (s + 1.0);
            return std::hypot(x0 - y0, x1 - y1);
        }
        return std::abs(y1 - e1);
    }
    const double numer = e0 * y0, denom = e0 * e0 - e1 * e1;
    if (numer < denom) {
        const double xde = numer / denom;
        const double x0 = e0 * xde, x1 = e1 * std::sqrt(1.0 - xde * xde);
        return std::hypot(x0 - y0, x1);
    }
    return std::abs(y0 - e0);
}

}  // namespace

Shape Shape::disk(Vec2 center, double radius) {
    if (!(radius > 0.0)) throw Error(ErrorCode::geometry, "disk radius must be positive");
    Shape s;
    s.kind_ = Kind::disk;
    s.center_ = center;
    s.semi_a_ = s.semi_b_ = radius;
    return s;
}

Shape Shape::ellipse(Vec2 center, double semi_a, double semi_b, double angle) {
    if (!(semi_a > 0.0 && semi_b > 0.0)) throw Error(ErrorCode::geometry, "ellipse semi-axes must be positive");
    Shape s;
    s.kind_ = Kind::ellipse;
    s.center_ = center;
    s.semi_a_ = semi_a;
    s.semi_b_ = semi_b;
    s.angle_ = angle;
    return s;
}

Shape Shape::polygon(std::vector<Vec2> vertices) {
    if (vertices.size() < 3) throw Error(ErrorCode::geometry, "polygon needs at least three vertices");
    double twice_area = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
        twice_area += cross(vertices[i], vertices[(i + 1) % vertices.size()]);
    if (twice_area == 0.0) throw Error(ErrorCode::geometry, "degenerate polygon");
    if (twice_area < 0.0) std::reverse(vertices.begin(), vertices.end());
    Shape s;
    s.kind_ = Kind::polygon;
    s.vertices_ = std::move(vertices);
    Vec2 c;
    for (Vec2 v : s.vertices_) c = c + v;
    s.center_ = (1.0 / static_cast<double>(s.vertices_.size())) * c;
    return s;
}

Vec2 Shape::to_local(Vec2 p) const {
    const Vec2 d = p - center_;
    const double c = std::cos(angle_), s = std::sin(angle_);
    return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

bool Shape::contains(Vec2 p) const {
    switch (kind_) {
        case Kind::disk: return norm(p - center_) < semi_a_;
        case Kind::ellipse: {
            const Vec2 l = to_local(p);
            return (l.x / semi_a_) * (l.x / semi_a_) + (l.y / semi_b_) * (l.y / semi_b_) < 1.0;
        }
        case Kind::polygon: {
            bool inside = false;
            const std::size_t n = vertices_.size();
            for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
                const Vec2 a = vertices_[i], b = vertices_[j];
                if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
                    inside = !inside;
            }
            return inside;
        }
    }
    return false;
}

double Shape::signed_distance(Vec2 p) const {
    double d = 0.0;
    switch (kind_) {
        case Kind::disk: return norm(p - center_) - semi_a_;
        case Kind::ellipse: {
            Vec2 l = to_local(p);
            double e0 = semi_a_, e1 = semi_b_;
            if (e0 < e1) {
                std::swap(e0, e1);
                std::swap(l.x, l.y);
            }
            d = ellipse_distance_quadrant(e0, e1, std::abs(l.x), std::abs(l.y));
            break;
        }
        case Kind::polygon: {
            d = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < vertices_.size(); ++i)
                d = std::min(d, segment_distance(p, vertices_[i], vertices_[(i + 1) % vertices_.size()]));
            break;
        }
    }
    return contains(p) ? -d : d;
}

double Shape::area() const {
    switch (kind_) {
        case Kind::disk:
        case Kind::ellipse: return pi * semi_a_ * semi_b_;
        case Kind::polygon: {
            double a = 0.0;
            for (std::size_t i = 0; i < vertices_.size(); ++i)
                a += cross(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
            return 0.5 * a;
        }
    }
    return 0.0;
}

Box Shape::bbox() const {
    if (kind_ == Kind::polygon) {
        Box b{vertices_[0].x, vertices_[0].x, vertices_[0].y, vertices_[0].y};
        for (Vec2 v : vertices_) {
            b.x0 = std::min(b.x0, v.x);
            b.x1 = std::max(b.x1, v.x);
            b.y0 = std::min(b.y0, v.y);
            b.y1 = std::max(b.y1, v.y);
        }
        return b;
    }
    const double c = std::cos(angle_), s = std::sin(angle_);
    const double hx = std::hypot(semi_a_ * c, semi_b_ * s);
    const double hy = std::hypot(semi_a_ * s, semi_b_ * c);
    return {center_.x - hx, center_.x + hx, center_.y - hy, center_.y + hy};
}

double Shape::perimeter() const {
    if (kind_ == Kind::polygon) {
        double p = 0.0;
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            p += norm(vertices_[(i + 1) % vertices_.size()] - vertices_[i]);
        return p;
    }
    // Ramanujan's second approximation; only used to size samplings
    const double a = semi_a_, b = semi_b_;
    const double hh = (a - b) * (a - b) / ((a + b) * (a + b));
    return pi * (a + b) * (1.0 + 3.0 * hh / (10.0 + std::sqrt(4.0 - 3.0 * hh)));
}

std::vector<Vec2> Shape::boundary(double spacing) const {
    std::vector<Vec2> out;
    if (kind_ == Kind::polygon) {
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            const Vec2 a = vertices_[i], b = vertices_[(i + 1) % vertices_.size()];
            const int n = std::max(1, static_cast<int>(std::ceil(norm(b - a) / spacing - 1e-9)));
            for (int k = 0; k < n; ++k) out.push_back(a + (static_cast<double>(k) / n) * (b - a));
        }
        return out;
    }
    // equal arclength on the ellipse via a fine parametric table
    const int fine = 4096;
    std::vector<double> arc(fine + 1, 0.0);
    auto point = [&](double t) {
        const double c = std::cos(angle_), s = std::sin(angle_);
        const double lx = semi_a_ * std::cos(t), ly = semi_b_ * std::sin(t);
        return Vec2{center_.x + c * lx - s * ly, center_.y + s * lx + c * ly};
    };
    for (int i = 1; i <= fine; ++i)
        arc[i] = arc[i - 1] + norm(point(2.0 * pi * i / fine) - point(2.0 * pi * (i - 1) / fine));
    const double total = arc[fine];
    const int n = std::max(8, static_cast<int>(std::ceil(total / spacing - 1e-9)));
    if (kind_ == Kind::disk) {
        for (int k = 0; k < n; ++k) out.push_back(point(2.0 * pi * k / n));
        return out;
    }
    int j = 0;
    for (int k = 0; k < n; ++k) {
        const double target = total * k / n;
        while (j < fine && arc[j + 1] < target) ++j;
        const double frac = (target - arc[j]) / (arc[j + 1] - arc[j]);
        out.push_back(point(2.0 * pi * (j + frac) / fine));
    }
    return out;
}

// ---------------------------------------------------------------------------

InterfaceGraph InterfaceCurve::chart(double x, double patch_radius) const {
    InterfaceGraph g;
    g.origin = {x, height(x)};
    const double base = offset(x);
    auto off = offset;
    g.psi = [off, x, base](double t) { return off(x + t) - base; };
    g.patch_radius = patch_radius;
    return g;
}

// ---------------------------------------------------------------------------

CoefficientValidation validate_coefficient(const PiecewiseCoefficient& c, const Box& region, int sample_count,
                                           std::uint64_t seed) {
    if (sample_count < 1) throw Error(ErrorCode::invalid_argument, "sample_count must be at least 1");
    CoefficientValidation out;
    out.min_eigenvalue = std::numeric_limits<double>::infinity();
    out.max_eigenvalue = -std::numeric_limits<double>::infinity();
    Rng rng(seed);
    const double tol = 1e-12;
    const double diag = std::hypot(region.width(), region.height());

    auto fail = [&](Vec2 p, const std::string& msg) {
        if (out.passed) {
            out.passed = false;
            out.first_violation = p;
            out.message = msg;
        }
    };

    for (const MatrixField* field : {&c.plus, &c.minus}) {
        const char* side = field == &c.plus ? "A+" : "A-";
        for (int i = 0; i < sample_count; ++i) {
            const Vec2 p{rng.uniform(region.x0, region.x1), rng.uniform(region.y0, region.y1)};
            const Mat2 a = (*field)(p);
            if (!a.symmetric()) {
                out.symmetric = false;
                fail(p, std::string(side) + " is not symmetric");
            }
            const auto e = sym_eigenvalues(a);
            out.min_eigenvalue = std::min(out.min_eigenvalue, e[0]);
            out.max_eigenvalue = std::max(out.max_eigenvalue, e[1]);
            if (e[0] < c.lambda0 * (1.0 - tol) || e[1] > (1.0 + tol) / c.lambda0)
                fail(p, std::string(side) + " violates the ellipticity bounds");

            // local pair at a random scale and direction
            const double scale = diag * std::pow(10.0, rng.uniform(-3.0, -1.0));
            const double theta = rng.uniform(0.0, 2.0 * pi);
            Vec2 q{p.x + scale * std::cos(theta), p.y + scale * std::sin(theta)};
            q.x = std::clamp(q.x, region.x0, region.x1);
            q.y = std::clamp(q.y, region.y0, region.y1);
            const double dist = std::abs(q.x - p.x) + std::abs(q.y - p.y);
            if (dist > 0.0) {
                const double quotient = sym_norm((*field)(q) - a) / dist;
                out.lipschitz_quotient = std::max(out.lipschitz_quotient, quotient);
                if (quotient > c.M0 * (1.0 + 1e-9) + 1e-12) fail(p, std::string(side) + " exceeds the Lipschitz bound");
            }
        }
    }
    out.ellipticity_ratio = out.max_eigenvalue / out.min_eigenvalue;
    return out;
}

LowerOrderValidation validate_lower_order(const LowerOrderTerms& lot, double lambda0, const Box& region,
                                          int sample_count, std::uint64_t seed) {
    LowerOrderValidation out;
    Rng rng(seed);
    for (int i = 0; i < sample_count; ++i) {
        const Vec2 p{rng.uniform(region.x0, region.x1), rng.uniform(region.y0, region.y1)};
        out.sup_W = std::max(out.sup_W, norm(lot.W(p)));
        out.sup_V = std::max(out.sup_V, std::abs(lot.V(p)));
    }
    out.passed = out.sup_W + out.sup_V <= 1.0 / lambda0;
    return out;
}

std::pair<double, double> eroded_area(const Shape& shape, double h, int resolution) {
    const Box b = shape.bbox();
    const double dx = b.width() / resolution, dy = b.height() / resolution;
    long inside = 0, eroded = 0;
    for (int j = 0; j < resolution; ++j) {
        for (int i = 0; i < resolution; ++i) {
            const Vec2 p{b.x0 + (i + 0.5) * dx, b.y0 + (j + 0.5) * dy};
            const double sd = shape.signed_distance(p);
            if (sd < 0.0) ++inside;
            if (sd < -h) ++eroded;
        }
    }
    return {inside * dx * dy, eroded * dx * dy};
}

double distance_to_plus_boundary(const Shape& shape, const Box& domain, const InterfaceCurve* interface) {
    // boundary pieces of Omega_+: the interface and the parts of dOmega above it
    std::vector<std::pair<Vec2, Vec2>> pieces;
    const int fine = 2048;
    if (interface) {
        for (int i = 0; i < fine; ++i) {
            const double xa = domain.x0 + domain.width() * i / fine;
            const double xb = domain.x0 + domain.width() * (i + 1) / fine;
            pieces.push_back({{xa, interface->height(xa)}, {xb, interface->height(xb)}});
        }
        pieces.push_back({{domain.x0, interface->height(domain.x0)}, {domain.x0, domain.y1}});
        pieces.push_back({{domain.x1, interface->height(domain.x1)}, {domain.x1, domain.y1}});
        pieces.push_back({{domain.x0, domain.y1}, {domain.x1, domain.y1}});
    } else {
        pieces.push_back({{domain.x0, domain.y0}, {domain.x1, domain.y0}});
        pieces.push_back({{domain.x1, domain.y0}, {domain.x1, domain.y1}});
        pieces.push_back({{domain.x1, domain.y1}, {domain.x0, domain.y1}});
        pieces.push_back({{domain.x0, domain.y1}, {domain.x0, domain.y0}});
    }
    const auto samples = shape.boundary(shape.perimeter() / 2048.0);
    double best = std::numeric_limits<double>::infinity();
    for (Vec2 p : samples) {
        bool outside = !domain.contains(p, 1e-12) || (interface && p.y < interface->height(p.x) - 1e-12);
        if (outside) return 0.0;
        for (const auto& [a, b] : pieces) best = std::min(best, segment_distance(p, a, b));
    }
    return best;
}

InclusionValidation validate_inclusion(const InclusionScenario& s, const MatrixField& background,
                                       const InclusionCheckOptions& opt) {
    InclusionValidation out;
    out.lower_margin = std::numeric_limits<double>::infinity();
    out.upper_margin = std::numeric_limits<double>::infinity();
    auto fail = [&](std::optional<Vec2> p, const std::string& msg) {
        if (out.passed) {
            out.passed = false;
            out.first_violation = p;
            out.message = msg;
        }
    };

    if (s.jump == JumpType::raise && !(s.eta > 0.0 && s.zeta > 1.0))
        fail(std::nullopt, "raise jump requires eta > 0 and zeta > 1");
    if (s.jump == JumpType::lower && !(s.eta > 0.0 && s.zeta > 0.0 && s.zeta < 1.0))
        fail(std::nullopt, "lower jump requires eta > 0 and 0 < zeta < 1");

    Rng rng(opt.seed);
    const Box b = s.shape.bbox();
    const double tol = 1e-12;
    int accepted = 0;
    for (long tries = 0; accepted < opt.sample_count && tries < 100L * opt.sample_count; ++tries) {
        const Vec2 p{rng.uniform(b.x0, b.x1), rng.uniform(b.y0, b.y1)};
        if (!s.shape.contains(p)) continue;
        ++accepted;
        const Mat2 a = background(p), ah = s.a_hat(p);
        Mat2 lower_gap, upper_gap;
        if (s.jump == JumpType::raise) {
            lower_gap = ah - (1.0 + s.eta) * a;  // (1+eta) A <= A_hat
            upper_gap = s.zeta * a - ah;         // A_hat <= zeta A
        } else {
            lower_gap = ah - s.zeta * a;            // zeta A <= A_hat
            upper_gap = (1.0 - s.eta) * a - ah;     // A_hat <= (1-eta) A
        }
        const double scale = std::max(1.0, sym_norm(ah));
        const double lm = sym_eigenvalues(lower_gap)[0], um = sym_eigenvalues(upper_gap)[0];
        out.lower_margin = std::min(out.lower_margin, lm);
        out.upper_margin = std::min(out.upper_margin, um);
        if (lm < -tol * scale || um < -tol * scale) {
            out.jump_ok = false;
            fail(p, s.jump == JumpType::raise ? "jump condition (1+eta)A <= A_hat <= zeta A violated"
                                              : "jump condition zeta A <= A_hat <= (1-eta)A violated");
        }
    }

    if (opt.domain) {
        const double d = distance_to_plus_boundary(s.shape, *opt.domain, opt.interface);
        out.distance_to_plus_boundary = d;
        if (d <= 0.0) fail(std::nullopt, "inclusion is not contained in Omega_+");
        else if (s.d1 && d < *s.d1) fail(std::nullopt, "dist(D, dOmega_+) is below d1");
    }

    const double h = s.h.value_or(0.0);
    const auto [area, eroded] = eroded_area(s.shape, h, opt.erosion_resolution);
    out.area = area;
    out.eroded_area = eroded;
    out.fat_ratio = area > 0.0 ? eroded / area : 0.0;
    if (s.h) {
        out.fat = out.fat_ratio >= 0.5 * (1.0 - opt.fatness_tolerance);
        if (!*out.fat) fail(std::nullopt, "fatness condition |D_h| >= |D|/2 violated");
    }
    return out;
}

}  // namespace tlab
