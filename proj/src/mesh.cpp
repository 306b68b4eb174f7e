#include "tlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <unordered_set>

#include <boost/multiprecision/cpp_int.hpp>

namespace tlab {

namespace {

using Exact = boost::multiprecision::cpp_rational;

constexpr double eps = std::numeric_limits<double>::epsilon() / 2.0;

double sign_of(const Exact& v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Sign-exact orientation: positive when abc turns counter-clockwise.
double orient(Vec2 a, Vec2 b, Vec2 c) {
    const double l = (b.x - a.x) * (c.y - a.y), r = (b.y - a.y) * (c.x - a.x);
    const double det = l - r;
    if (std::abs(det) > (3.0 + 16.0 * eps) * eps * (std::abs(l) + std::abs(r))) return det;
    const Exact ax(a.x), ay(a.y);
    return sign_of((Exact(b.x) - ax) * (Exact(c.y) - ay) - (Exact(b.y) - ay) * (Exact(c.x) - ax));
}

// Sign-exact: positive when d lies inside the circumcircle of the counter-clockwise triangle abc.
double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double alift = adx * adx + ady * ady, blift = bdx * bdx + bdy * bdy, clift = cdx * cdx + cdy * cdy;
    const double bc = bdx * cdy - cdx * bdy, ca = cdx * ady - adx * cdy, ab = adx * bdy - bdx * ady;
    const double det = alift * bc + blift * ca + clift * ab;
    const double permanent = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                             blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                             clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
    if (std::abs(det) > (10.0 + 96.0 * eps) * eps * permanent) return det;
    const Exact dx(d.x), dy(d.y);
    const Exact eax = Exact(a.x) - dx, eay = Exact(a.y) - dy;
    const Exact ebx = Exact(b.x) - dx, eby = Exact(b.y) - dy;
    const Exact ecx = Exact(c.x) - dx, ecy = Exact(c.y) - dy;
    return sign_of((eax * eax + eay * eay) * (ebx * ecy - ecx * eby) + (ebx * ebx + eby * eby) * (ecx * eay - eax * ecy) +
                   (ecx * ecx + ecy * ecy) * (eax * eby - ebx * eay));
}

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, int order) {
    std::uint64_t d = 0;
    for (std::uint32_t s = 1u << (order - 1); s > 0; s >>= 1) {
        const std::uint32_t rx = (x & s) ? 1 : 0;
        const std::uint32_t ry = (y & s) ? 1 : 0;
        d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::swap(x, y);
        }
    }
    return d;
}

/// Incremental Bowyer-Watson triangulation of points inside a rectangle whose
/// four corners are points 0..3 (counter-clockwise).
class Delaunay {
public:
    explicit Delaunay(const std::vector<Vec2>& pts) : p_(pts) {
        tris_.push_back({{0, 1, 2}, {-1, 1, -1}, true});
        tris_.push_back({{0, 2, 3}, {-1, -1, 0}, true});
        stamp_.assign(2, 0);
    }

    void insert(int pi) {
        const Vec2 q = p_[pi];
        const int t0 = locate(q);
        ++gen_;
        cavity_.clear();
        cavity_.push_back(t0);
        stamp_[t0] = gen_;
        for (std::size_t k = 0; k < cavity_.size(); ++k) {
            const Tri& T = tris_[cavity_[k]];
            for (int i = 0; i < 3; ++i) {
                const int nb = T.n[i];
                if (nb < 0 || stamp_[nb] == gen_) continue;
                const Tri& N = tris_[nb];
                if (incircle(p_[N.v[0]], p_[N.v[1]], p_[N.v[2]], q) > 0.0) {
                    stamp_[nb] = gen_;
                    cavity_.push_back(nb);
                }
            }
        }
        // grow until the cavity is star-shaped with respect to q
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t k = 0; k < cavity_.size(); ++k) {
                const Tri T = tris_[cavity_[k]];
                for (int i = 0; i < 3; ++i) {
                    const int nb = T.n[i];
                    if (nb >= 0 && stamp_[nb] == gen_) continue;
                    const double o = orient(p_[T.v[(i + 1) % 3]], p_[T.v[(i + 2) % 3]], q);
                    if (o > 0.0) continue;
                    if (nb < 0) {
                        if (o == 0.0) continue;  // q on the hull edge
                        throw Error(ErrorCode::geometry, "mesh point outside the domain");
                    }
                    stamp_[nb] = gen_;
                    cavity_.push_back(nb);
                    changed = true;
                }
            }
        }
        rim_.clear();
        for (int c : cavity_) {
            const Tri& T = tris_[c];
            for (int i = 0; i < 3; ++i) {
                const int nb = T.n[i];
                if (nb >= 0 && stamp_[nb] == gen_) continue;
                const int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
                if (nb < 0 && orient(p_[a], p_[b], q) == 0.0) continue;
                rim_.push_back({a, b, nb});
            }
        }
        for (int c : cavity_) {
            tris_[c].alive = false;
            free_.push_back(c);
        }
        fresh_.clear();
        for (const auto& r : rim_) {
            const int idx = allocate();
            tris_[idx] = {{r.a, r.b, pi}, {-1, -1, r.outer}, true};
            if (r.outer >= 0) {
                Tri& O = tris_[r.outer];
                for (int j = 0; j < 3; ++j)
                    if (O.v[(j + 1) % 3] == r.b && O.v[(j + 2) % 3] == r.a) O.n[j] = idx;
            }
            fresh_.push_back(idx);
        }
        for (int idx : fresh_) {
            Tri& T = tris_[idx];
            for (int other : fresh_) {
                if (tris_[other].v[0] == T.v[1]) T.n[0] = other;  // shares edge (b, q)
                if (tris_[other].v[1] == T.v[0]) T.n[1] = other;  // shares edge (q, a)
            }
        }
        if (!fresh_.empty()) last_ = fresh_.front();
    }


    std::vector<std::array<int, 3>> triangles() const {
        std::vector<std::array<int, 3>> out;
        for (const Tri& t : tris_)
            if (t.alive) out.push_back(t.v);
        return out;
    }

private:
    struct Tri {
        std::array<int, 3> v;
        std::array<int, 3> n;  // n[i] is across the edge opposite v[i]
        bool alive;
    };
    struct RimEdge {
        int a, b, outer;
    };

    const std::vector<Vec2>& p_;
    std::vector<Tri> tris_;
    std::vector<int> free_;
    std::vector<int> stamp_;
    std::vector<int> cavity_;
    std::vector<RimEdge> rim_;
    std::vector<int> fresh_;
    int gen_ = 0;
    int last_ = 0;

    int allocate() {
        if (!free_.empty()) {
            const int idx = free_.back();
            free_.pop_back();
            return idx;
        }
        tris_.push_back({});
        stamp_.push_back(0);
        return static_cast<int>(tris_.size()) - 1;
    }

    bool inside(const Tri& T, Vec2 q) const {
        for (int i = 0; i < 3; ++i)
            if (orient(p_[T.v[(i + 1) % 3]], p_[T.v[(i + 2) % 3]], q) < 0.0) return false;
        return true;
    }

    int locate(Vec2 q) const {
        int t = last_;
        if (!tris_[t].alive)
            for (t = 0; !tris_[t].alive; ++t) {
            }
        const std::size_t cap = 4 * tris_.size() + 64;
        for (std::size_t step = 0; step < cap; ++step) {
            const Tri& T = tris_[t];
            bool moved = false;
            for (int k = 0; k < 3; ++k) {
                const int i = static_cast<int>((k + step) % 3);
                if (orient(p_[T.v[(i + 1) % 3]], p_[T.v[(i + 2) % 3]], q) < 0.0) {
                    if (T.n[i] < 0) throw Error(ErrorCode::geometry, "mesh point outside the domain");
                    t = T.n[i];
                    moved = true;
                    break;
                }
            }
            if (!moved) return t;
        }
        for (std::size_t i = 0; i < tris_.size(); ++i)
            if (tris_[i].alive && inside(tris_[i], q)) return static_cast<int>(i);
        throw Error(ErrorCode::geometry, "point location failed at (" + std::to_string(q.x) + ", " + std::to_string(q.y) + ")");
    }
};

struct EdgeKey {
    std::size_t operator()(std::uint64_t k) const { return std::hash<std::uint64_t>{}(k); }
};

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

/// Samples of the interface graph at equal arclength, spacing <= h.
std::vector<Vec2> sample_interface(const InterfaceCurve& c, const Box& d, double h) {
    const int fine = std::max(4000, static_cast<int>(50.0 * d.width() / h));
    std::vector<double> xs(fine + 1), arc(fine + 1, 0.0);
    for (int i = 0; i <= fine; ++i) xs[i] = d.x0 + d.width() * i / fine;
    for (int i = 1; i <= fine; ++i)
        arc[i] = arc[i - 1] + std::hypot(xs[i] - xs[i - 1], c.height(xs[i]) - c.height(xs[i - 1]));
    const int n = std::max(1, static_cast<int>(std::ceil(arc[fine] / h - 1e-9)));
    std::vector<Vec2> out;
    int j = 0;
    for (int k = 0; k <= n; ++k) {
        double x;
        if (k == 0) x = d.x0;
        else if (k == n) x = d.x1;
        else {
            const double target = arc[fine] * k / n;
            while (j < fine && arc[j + 1] < target) ++j;
            x = xs[j] + (xs[j + 1] - xs[j]) * (target - arc[j]) / (arc[j + 1] - arc[j]);
        }
        out.push_back({x, c.height(x)});
    }
    return out;
}

/// Bucket grid over constraint segments for distance queries.
class SegmentGrid {
public:
    SegmentGrid(const Box& d, double cell) : d_(d), cell_(cell) {
        nx_ = std::max(1, static_cast<int>(std::ceil(d.width() / cell)));
        ny_ = std::max(1, static_cast<int>(std::ceil(d.height() / cell)));
        buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
    }

    void add(Vec2 a, Vec2 b, double pad) {
        segs_.push_back({a, b});
        const int id = static_cast<int>(segs_.size()) - 1;
        const int i0 = cx(std::min(a.x, b.x) - pad), i1 = cx(std::max(a.x, b.x) + pad);
        const int j0 = cy(std::min(a.y, b.y) - pad), j1 = cy(std::max(a.y, b.y) + pad);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(id);
    }

    double distance(Vec2 p) const {
        double best = std::numeric_limits<double>::infinity();
        for (int id : buckets_[static_cast<std::size_t>(cy(p.y)) * nx_ + cx(p.x)])
            best = std::min(best, segment_distance(p, segs_[id].first, segs_[id].second));
        return best;
    }

private:
    Box d_;
    double cell_;
    int nx_, ny_;
    std::vector<std::pair<Vec2, Vec2>> segs_;
    std::vector<std::vector<int>> buckets_;

    int cx(double x) const { return std::clamp(static_cast<int>((x - d_.x0) / cell_), 0, nx_ - 1); }
    int cy(double y) const { return std::clamp(static_cast<int>((y - d_.y0) / cell_), 0, ny_ - 1); }
};

double polyline_height(const std::vector<Vec2>& pl, double x) {
    auto it = std::lower_bound(pl.begin(), pl.end(), x, [](Vec2 p, double v) { return p.x < v; });
    if (it == pl.begin()) return pl.front().y;
    if (it == pl.end()) return pl.back().y;
    const Vec2 b = *it, a = *(it - 1);
    return a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
}

double min_angle(Vec2 a, Vec2 b, Vec2 c) {
    auto ang = [](Vec2 p, Vec2 q, Vec2 r) {
        const Vec2 u = q - p, v = r - p;
        return std::atan2(std::abs(cross(u, v)), dot(u, v));
    };
    return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

/// Moves lattice vertices toward the centroid of their neighbours when that
/// improves the worst incident angle without stretching edges past max_edge.
void smooth(Mesh& mesh, const std::vector<char>& movable, double max_edge) {
    const std::size_t nv = mesh.vertices.size();
    std::vector<std::vector<int>> incident(nv);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        for (int v : mesh.triangles[t]) incident[v].push_back(static_cast<int>(t));
    auto& P = mesh.vertices;
    auto local = [&](int v, Vec2 pos, double& worst, double& longest) {
        worst = pi;
        longest = 0.0;
        for (int t : incident[v]) {
            std::array<Vec2, 3> c;
            for (int k = 0; k < 3; ++k) c[k] = mesh.triangles[t][k] == v ? pos : P[mesh.triangles[t][k]];
            if (cross(c[1] - c[0], c[2] - c[0]) <= 0.0) return false;
            worst = std::min(worst, min_angle(c[0], c[1], c[2]));
            for (int k = 0; k < 3; ++k) longest = std::max(longest, norm(c[(k + 1) % 3] - c[k]));
        }
        return true;
    };
    for (int sweep = 0; sweep < 4; ++sweep) {
        for (std::size_t v = 0; v < nv; ++v) {
            if (!movable[v] || incident[v].empty()) continue;
            Vec2 target{};
            int count = 0;
            for (int t : incident[v])
                for (int w : mesh.triangles[t])
                    if (w != static_cast<int>(v)) {
                        target = target + P[w];
                        ++count;
                    }
            target = (1.0 / count) * target;
            double w0, l0, w1, l1;
            local(static_cast<int>(v), P[v], w0, l0);
            if (!local(static_cast<int>(v), target, w1, l1)) continue;
            if (w1 > w0 && l1 <= std::max(l0, max_edge)) P[v] = target;
        }
    }
}

}  // namespace

double Mesh::area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec2 a = vertices[tri[0]], b = vertices[tri[1]], c = vertices[tri[2]];
    return 0.5 * cross(b - a, c - a);
}

Vec2 Mesh::centroid(std::size_t t) const {
    const auto& tri = triangles[t];
    return (1.0 / 3.0) * (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]);
}

Mesh build_mesh(const MeshSpec& spec) {
    const Box& d = spec.domain;
    const double h = spec.h;
    if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "mesh size h must be positive");
    if (!(d.width() > 0.0 && d.height() > 0.0)) throw Error(ErrorCode::geometry, "empty domain");
    if (d.width() / h > 1e4 || d.height() / h > 1e4) throw Error(ErrorCode::invalid_argument, "mesh too fine");

    std::vector<Vec2> pts;
    std::vector<char> kind;  // 0 boundary, 1 constraint, 2 lattice
    std::map<std::pair<double, double>, int> index_of;
    const double snap = 1e-12 * std::max(d.width(), d.height());

    auto snap_to_boundary = [&](Vec2 p) {
        if (std::abs(p.x - d.x0) <= snap) p.x = d.x0;
        if (std::abs(p.x - d.x1) <= snap) p.x = d.x1;
        if (std::abs(p.y - d.y0) <= snap) p.y = d.y0;
        if (std::abs(p.y - d.y1) <= snap) p.y = d.y1;
        return p;
    };
    auto on_boundary = [&](Vec2 p) { return p.x == d.x0 || p.x == d.x1 || p.y == d.y0 || p.y == d.y1; };
    auto add_point = [&](Vec2 p, char k) {
        p = snap_to_boundary(p);
        auto [it, inserted] = index_of.try_emplace({p.x, p.y}, static_cast<int>(pts.size()));
        if (inserted) {
            pts.push_back(p);
            kind.push_back(on_boundary(p) ? 0 : k);
        }
        return it->second;
    };

    add_point({d.x0, d.y0}, 0);
    add_point({d.x1, d.y0}, 0);
    add_point({d.x1, d.y1}, 0);
    add_point({d.x0, d.y1}, 0);

    std::vector<std::pair<int, int>> segments;
    std::vector<Vec2> interface_samples;
    std::vector<Vec2> inclusion_polygon;
    const double min_gap = 2.0 * h;
    const double hs = 0.85 * h;  // sampling spacing

    if (spec.interface) {
        interface_samples = sample_interface(*spec.interface, d, hs);
        for (int i = 0; i <= 400; ++i) {
            const double x = d.x0 + d.width() * i / 400;
            const double y = spec.interface->height(x);
            if (y - d.y0 < min_gap || d.y1 - y < min_gap)
                throw Error(ErrorCode::geometry, "interface closer than 2h to the outer boundary (d0 < 2h)");
        }
        int prev = add_point(interface_samples.front(), 1);
        for (std::size_t i = 1; i < interface_samples.size(); ++i) {
            const int cur = add_point(interface_samples[i], 1);
            segments.push_back({prev, cur});
            prev = cur;
        }
    }

    if (spec.inclusion) {
        const Shape& s = *spec.inclusion;
        if (s.kind() == Shape::Kind::polygon) {
            const auto& v = s.vertices();
            inclusion_polygon = v;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const Vec2 a = snap_to_boundary(v[i]), b = snap_to_boundary(v[(i + 1) % v.size()]);
                if (!d.contains(a, snap)) throw Error(ErrorCode::geometry, "inclusion polygon leaves the domain");
                const bool along_side = (a.x == b.x && (a.x == d.x0 || a.x == d.x1)) ||
                                        (a.y == b.y && (a.y == d.y0 || a.y == d.y1));
                if (along_side) continue;
                const int n = std::max(1, static_cast<int>(std::ceil(norm(b - a) / hs - 1e-9)));
                int prev = add_point(a, 1);
                for (int k = 1; k <= n; ++k) {
                    const int cur = add_point(k == n ? b : a + (static_cast<double>(k) / n) * (b - a), 1);
                    segments.push_back({prev, cur});
                    prev = cur;
                }
            }
        } else {
            inclusion_polygon = s.boundary(hs);
            for (Vec2 p : inclusion_polygon)
                if (d.distance_to_boundary(p) < min_gap)
                    throw Error(ErrorCode::geometry, "inclusion closer than 2h to the outer boundary");
            const int first = add_point(inclusion_polygon.front(), 1);
            int prev = first;
            for (std::size_t i = 1; i < inclusion_polygon.size(); ++i) {
                const int cur = add_point(inclusion_polygon[i], 1);
                segments.push_back({prev, cur});
                prev = cur;
            }
            segments.push_back({prev, first});
        }
        if (spec.interface) {
            const auto dense = sample_interface(*spec.interface, d, h / 4.0);
            for (Vec2 p : s.boundary(h / 4.0))
                for (std::size_t i = 1; i < dense.size(); ++i)
                    if (segment_distance(p, dense[i - 1], dense[i]) < min_gap)
                        throw Error(ErrorCode::geometry, "inclusion closer than 2h to the interface (d1 < 2h)");
        }
    }

    // boundary sides: lattice-aligned positions plus curve endpoints
    const int nx = std::max(1, static_cast<int>(std::ceil(d.width() / hs - 1e-9)));
    const int ny = std::max(1, static_cast<int>(std::ceil(d.height() / (hs * std::sqrt(3.0) / 2.0) - 1e-9)));
    const double dx = d.width() / nx, dy = d.height() / ny;
    std::vector<double> split_x[2], split_y[2];  // [bottom, top], [left, right]
    for (std::size_t i = 4; i < pts.size(); ++i) {
        if (kind[i] != 0) continue;
        const Vec2 p = pts[i];
        if (p.y == d.y0) split_x[0].push_back(p.x);
        if (p.y == d.y1) split_x[1].push_back(p.x);
        if (p.x == d.x0) split_y[0].push_back(p.y);
        if (p.x == d.x1) split_y[1].push_back(p.y);
    }
    auto side_positions = [](double lo, int n, double step, const std::vector<double>& splits) {
        std::vector<double> out;
        for (int i = 1; i < n; ++i) {
            const double v = lo + i * step;
            bool clash = false;
            for (double s : splits) clash |= std::abs(s - v) < 0.5 * step;
            if (!clash) out.push_back(v);
        }
        return out;
    };
    for (double x : side_positions(d.x0, nx, dx, split_x[0])) add_point({x, d.y0}, 0);
    for (double x : side_positions(d.x0, nx, dx, split_x[1])) add_point({x, d.y1}, 0);
    for (double y : side_positions(d.y0, ny, dy, split_y[0])) add_point({d.x0, y}, 0);
    for (double y : side_positions(d.y0, ny, dy, split_y[1])) add_point({d.x1, y}, 0);

    // interior lattice, kept clear of the constraint curves
    const double exclusion = 0.55 * hs;
    SegmentGrid grid(d, h);
    for (auto [a, b] : segments) grid.add(pts[a], pts[b], exclusion);
    for (int j = 1; j < ny; ++j) {
        const double y = d.y0 + j * dy;
        const bool odd = (j % 2) == 1;
        for (int i = odd ? 0 : 1; i < nx; ++i) {
            const Vec2 p{d.x0 + (i + (odd ? 0.5 : 0.0)) * dx, y};
            if (grid.distance(p) < exclusion) continue;
            add_point(p, 2);
        }
    }

    std::vector<char> removed(pts.size(), 0);
    std::vector<std::array<int, 3>> tris;
    for (int round = 0;; ++round) {
        std::vector<int> order;
        for (std::size_t i = 4; i < pts.size(); ++i)
            if (!removed[i]) order.push_back(static_cast<int>(i));
        std::vector<std::uint64_t> key(pts.size());
        for (int i : order) {
            const auto hx = static_cast<std::uint32_t>((pts[i].x - d.x0) / d.width() * 65535.0);
            const auto hy = static_cast<std::uint32_t>((pts[i].y - d.y0) / d.height() * 65535.0);
            key[i] = hilbert_index(hx, hy, 16);
        }
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
        Delaunay dt(pts);
        for (int i : order) dt.insert(i);
        tris = dt.triangles();

        std::unordered_set<std::uint64_t, EdgeKey> edges;
        for (const auto& t : tris)
            for (int k = 0; k < 3; ++k) edges.insert(edge_key(t[k], t[(k + 1) % 3]));
        std::vector<std::pair<int, int>> kept, missing;
        for (auto s : segments) (edges.count(edge_key(s.first, s.second)) ? kept : missing).push_back(s);
        if (missing.empty()) break;
        if (round >= 12) throw Error(ErrorCode::geometry, "could not recover constraint segments");
        for (auto [a, b] : missing) {
            const Vec2 m = 0.5 * (pts[a] + pts[b]);
            const int mi = add_point(m, 1);
            removed.resize(pts.size(), 0);
            kept.push_back({a, mi});
            kept.push_back({mi, b});
            for (auto [u, v] : {std::pair{a, mi}, std::pair{mi, b}}) {
                const Vec2 c = 0.5 * (pts[u] + pts[v]);
                const double r = 0.5 * norm(pts[v] - pts[u]);
                for (std::size_t i = 0; i < pts.size(); ++i)
                    if (kind[i] == 2 && norm(pts[i] - c) <= r * (1.0 + 1e-9)) removed[i] = 1;
            }
        }
        segments = std::move(kept);
    }

    // compact away removed points
    std::vector<int> remap(pts.size(), -1);
    std::vector<char> movable;
    Mesh mesh;
    mesh.domain = d;
    mesh.h_target = h;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (removed[i]) continue;
        remap[i] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(pts[i]);
        movable.push_back(kind[i] == 2);
    }
    for (auto& t : tris) {
        mesh.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    }
    smooth(mesh, movable, 1.45 * h);
    mesh.boundary.assign(mesh.vertices.size(), 0u);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec2 p = mesh.vertices[i];
        unsigned m = 0;
        if (p.y == d.y0) m |= side_bottom;
        if (p.x == d.x1) m |= side_right;
        if (p.y == d.y1) m |= side_top;
        if (p.x == d.x0) m |= side_left;
        mesh.boundary[i] = m;
    }

    std::optional<Shape> inclusion_poly;
    if (!inclusion_polygon.empty()) inclusion_poly = Shape::polygon(inclusion_polygon);
    mesh.tags.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 c = mesh.centroid(t);
        if (inclusion_poly && inclusion_poly->contains(c)) mesh.tags[t] = Subdomain::inclusion;
        else if (!spec.interface || c.y > polyline_height(interface_samples, c.x)) mesh.tags[t] = Subdomain::plus;
        else mesh.tags[t] = Subdomain::minus;
    }
    return mesh;
}

std::vector<MeshEdge> mesh_edges(const Mesh& mesh) {
    std::map<std::uint64_t, MeshEdge> edges;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k], b = tri[(k + 1) % 3];
            auto [it, inserted] = edges.try_emplace(edge_key(a, b));
            if (inserted) it->second = {a, b, static_cast<int>(t), -1};
            else it->second.right = static_cast<int>(t);
        }
    }
    std::vector<MeshEdge> out;
    out.reserve(edges.size());
    for (auto& [k, e] : edges) out.push_back(e);
    return out;
}

MeshQuality mesh_quality(const Mesh& mesh) {
    MeshQuality q;
    q.min_angle_deg = 180.0;
    q.min_area = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const Vec2 a = mesh.vertices[tri[k]], b = mesh.vertices[tri[(k + 1) % 3]],
                       c = mesh.vertices[tri[(k + 2) % 3]];
            const Vec2 u = b - a, v = c - a;
            const double ang = std::atan2(std::abs(cross(u, v)), dot(u, v)) * 180.0 / pi;
            q.min_angle_deg = std::min(q.min_angle_deg, ang);
            q.max_diameter = std::max(q.max_diameter, norm(u));
        }
        q.min_area = std::min(q.min_area, mesh.area(t));
    }
    return q;
}

void write_mesh(const Mesh& mesh, std::ostream& os) {
    char buf[128];
    os << "tlab-mesh 1\n";
    std::snprintf(buf, sizeof buf, "domain %.17g %.17g %.17g %.17g\n", mesh.domain.x0, mesh.domain.x1,
                  mesh.domain.y0, mesh.domain.y1);
    os << buf;
    std::snprintf(buf, sizeof buf, "h %.17g\n", mesh.h_target);
    os << buf;
    os << "vertices " << mesh.vertices.size() << "\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %u\n", mesh.vertices[i].x, mesh.vertices[i].y, mesh.boundary[i]);
        os << buf;
    }
    os << "triangles " << mesh.triangles.size() << "\n";
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        os << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << static_cast<int>(mesh.tags[t]) << '\n';
    }
}

Mesh read_mesh(std::istream& is) {
    auto bad = [](const std::string& what) { return Error(ErrorCode::io, "malformed mesh file: " + what); };
    std::string word;
    int version = 0;
    if (!(is >> word >> version) || word != "tlab-mesh" || version != 1) throw bad("header");
    Mesh mesh;
    if (!(is >> word >> mesh.domain.x0 >> mesh.domain.x1 >> mesh.domain.y0 >> mesh.domain.y1) || word != "domain")
        throw bad("domain");
    if (!(is >> word >> mesh.h_target) || word != "h") throw bad("h");
    std::size_t n = 0;
    if (!(is >> word >> n) || word != "vertices") throw bad("vertex count");
    mesh.vertices.resize(n);
    mesh.boundary.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!(is >> mesh.vertices[i].x >> mesh.vertices[i].y >> mesh.boundary[i])) throw bad("vertex " + std::to_string(i));
    if (!(is >> word >> n) || word != "triangles") throw bad("triangle count");
    mesh.triangles.resize(n);
    mesh.tags.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        int tag = 0;
        auto& tri = mesh.triangles[t];
        if (!(is >> tri[0] >> tri[1] >> tri[2] >> tag) || tag < 0 || tag > 2) throw bad("triangle " + std::to_string(t));
        for (int v : tri)
            if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertices.size()) throw bad("vertex index");
        mesh.tags[t] = static_cast<Subdomain>(tag);
    }
    return mesh;
}

}  // namespace tlab
