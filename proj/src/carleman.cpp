#include "tlab/carleman.hpp"

#include <cmath>
#include <limits>

#include "tlab/functionals.hpp"

namespace tlab {

Jet operator*(const Jet& f, const Jet& g) {
    Jet r;
    r.v = f.v * g.v;
    r.dx = f.dx * g.v + f.v * g.dx;
    r.dy = f.dy * g.v + f.v * g.dy;
    r.dxx = f.dxx * g.v + 2.0 * f.dx * g.dx + f.v * g.dxx;
    r.dxy = f.dxy * g.v + f.dx * g.dy + f.dy * g.dx + f.v * g.dxy;
    r.dyy = f.dyy * g.v + 2.0 * f.dy * g.dy + f.v * g.dyy;
    return r;
}

Jet operator+(const Jet& f, const Jet& g) {
    return {f.v + g.v, f.dx + g.dx, f.dy + g.dy, f.dxx + g.dxx, f.dxy + g.dxy, f.dyy + g.dyy};
}

Jet operator*(double s, const Jet& f) { return {s * f.v, s * f.dx, s * f.dy, s * f.dxx, s * f.dxy, s * f.dyy}; }

Jet bump_jet(double t, double w, bool along_x) {
    const double u = t / w;
    if (std::abs(u) >= 1.0) return {};
    const double s = 1.0 - u * u;
    const double b = std::exp(-1.0 / s);
    const double f1 = -2.0 * u / (s * s);
    const double f2 = -2.0 / (s * s) - 8.0 * u * u / (s * s * s);
    const double d1 = b * f1 / w;
    const double d2 = b * (f1 * f1 + f2) / (w * w);
    Jet j;
    j.v = b;
    if (along_x) {
        j.dx = d1;
        j.dxx = d2;
    } else {
        j.dy = d1;
        j.dyy = d2;
    }
    return j;
}

namespace {

// value c and constant first derivatives
Jet affine(double c, double cx, double cy) { return {c, cx, cy, 0.0, 0.0, 0.0}; }

Jet exp_y(double y) { return {std::exp(y), 0.0, std::exp(y), 0.0, 0.0, std::exp(y)}; }

Jet cos_x(double x, double k) {
    return {std::cos(k * x), -k * std::sin(k * x), 0.0, -k * k * std::cos(k * x), 0.0, 0.0};
}

double op(const Mat2& A, const Jet& u) { return A.xx * u.dxx + (A.xy + A.yx) * u.dxy + A.yy * u.dyy; }

Vec2 flux(const Mat2& A, const Jet& u) { return A * Vec2{u.dx, u.dy}; }

// Gauss-Legendre 3-point rule on [-1, 1]
constexpr double gx[3] = {-0.77459666924148337704, 0.0, 0.77459666924148337704};
constexpr double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

template <class F>
double integrate_1d(double a, double b, int cells, F&& f) {
    const double hcell = (b - a) / cells;
    double sum = 0.0;
    for (int c = 0; c < cells; ++c) {
        const double mid = a + (c + 0.5) * hcell;
        for (int q = 0; q < 3; ++q) sum += gw[q] * 0.5 * hcell * f(mid + 0.5 * hcell * gx[q]);
    }
    return sum;
}

template <class F>
double integrate_2d(double x0, double x1, double y0, double y1, int cells, F&& f) {
    return integrate_1d(y0, y1, cells, [&](double y) { return integrate_1d(x0, x1, cells, [&](double x) { return f(x, y); }); });
}

}  // namespace

std::vector<CarlemanPair> standard_carleman_pairs(const WeightParams& p, Mat2 A_plus, Mat2 A_minus) {
    const double wx = 0.45 * p.delta;
    const double wy = 0.9 * p.delta * p.r0;
    // off-centre in y so the normal derivative at the interface does not vanish
    const double cy = 0.15 * p.delta * p.r0, wy_off = 0.8 * p.delta * p.r0;
    auto S = [wx, wy](double x, double y) { return bump_jet(x, wx, true) * bump_jet(y, wy, false); };
    auto B = [wx, cy, wy_off](double x, double y) { return bump_jet(x, wx, true) * bump_jet(y - cy, wy_off, false); };
    const double k = 4.0 * pi / p.delta;
    const double c_plus = A_minus.yy / A_plus.yy;
    std::vector<CarlemanPair> pairs;
    pairs.push_back({"common-bump", B, B, A_plus, A_minus});
    pairs.push_back({"exp-y-bump", [B](double x, double y) { return exp_y(y) * B(x, y); },
                     [B](double x, double y) { return exp_y(y) * B(x, y); }, A_plus, A_minus});
    pairs.push_back({"trace-jump", [B](double x, double y) { return affine(1.0 + x, 1.0, 0.0) * B(x, y); }, B, A_plus,
                     A_minus});
    pairs.push_back({"oscillating", [B, k](double x, double y) { return cos_x(x, k) * affine(1.0 + y, 0.0, 1.0) * B(x, y); },
                     [B, k](double x, double y) { return cos_x(x, k) * affine(1.0 + 2.0 * y, 0.0, 2.0) * B(x, y); }, A_plus,
                     A_minus});
    pairs.push_back({"transmission", [S, c_plus](double x, double y) { return affine(1.0 + c_plus * y, 0.0, c_plus) * S(x, y); },
                     [S](double x, double y) { return affine(1.0 + y, 0.0, 1.0) * S(x, y); }, A_plus, A_minus});
    return pairs;
}

void check_carleman_support(const CarlemanPair& pair, const WeightParams& p) {
    const double hx = 0.5 * p.delta, hy = p.delta * p.r0;
    const int n = 200;
    for (int i = 0; i <= n; ++i) {
        const double t = -1.5 + 3.0 * i / n;
        // rings just outside the box and further out
        for (double scale : {1.0 + 1e-9, 1.05, 1.5}) {
            const Vec2 pts[4] = {{t * hx, scale * hy}, {t * hx, -scale * hy}, {scale * hx, t * hy}, {-scale * hx, t * hy}};
            for (Vec2 q : pts) {
                const double up = pair.plus(q.x, q.y).v, down = pair.minus(q.x, q.y).v;
                const double v = q.y >= 0.0 ? up : down;
                if (std::abs(v) > 1e-12)
                    throw Error(ErrorCode::validation, "test pair '" + pair.name + "' is not supported in the box");
            }
        }
    }
}

CarlemanTerms carleman_terms(const CarlemanPair& pair, const WeightParams& p, double tau, const CarlemanOptions& opt) {
    const double hx = 0.5 * p.delta, hy = p.delta * p.r0;
    const double t1 = tau, t3 = tau * tau * tau;
    CarlemanTerms c;

    auto interior = [&](const JetFunction& u, const Mat2& A, double y0, double y1) {
        double sum_k = 0.0, sum_op = 0.0;
        const int cells = opt.cells;
        sum_k = integrate_2d(-hx, hx, y0, y1, cells, [&](double x, double y) {
            const Jet j = u(x, y);
            const double w = std::exp(2.0 * tau * weight_phi(p, x, y));
            const double d0 = j.v * j.v;
            const double d1 = j.dx * j.dx + j.dy * j.dy;
            const double d2 = j.dxx * j.dxx + j.dxy * j.dxy + j.dyy * j.dyy;
            return (t3 * d0 + t1 * d1 + d2 / t1) * w;
        });
        sum_op = integrate_2d(-hx, hx, y0, y1, cells, [&](double x, double y) {
            const double L = op(A, u(x, y));
            return L * L * std::exp(2.0 * tau * weight_phi(p, x, y));
        });
        c.interior += sum_k;
        c.operator_term += sum_op;
    };
    interior(pair.plus, pair.A_plus, 0.0, hy);
    interior(pair.minus, pair.A_minus, -hy, 0.0);

    auto trace_weight = [&](double x) { return std::exp(2.0 * tau * weight_phi(p, x, 0.0)); };
    const int cells1 = 4 * opt.cells;
    for (const JetFunction* u : {&pair.plus, &pair.minus})
        c.trace_l2 += integrate_1d(-hx, hx, cells1, [&](double x) {
            const Jet j = (*u)(x, 0.0);
            return (t3 * j.v * j.v + t1 * (j.dx * j.dx + j.dy * j.dy)) * trace_weight(x);
        });
    auto h0 = [&](double x) { return pair.plus(x, 0.0).v - pair.minus(x, 0.0).v; };
    auto h1 = [&](double x) {
        // nu = -e_y
        return -flux(pair.A_plus, pair.plus(x, 0.0)).y + flux(pair.A_minus, pair.minus(x, 0.0)).y;
    };
    c.h0_l2 = t3 * integrate_1d(-hx, hx, cells1, [&](double x) { return h0(x) * h0(x) * trace_weight(x); });
    c.h1_l2 = t1 * integrate_1d(-hx, hx, cells1, [&](double x) { return h1(x) * h1(x) * trace_weight(x); });

    const int n = opt.trace_samples;
    const double hb = 2.0 * hx / (n - 1);
    std::vector<double> a(n), bx(n), by(n), e1(n), e0(n);
    const double dphi_plus = weight_phi_dy_at_interface(p, true), dphi_minus = weight_phi_dy_at_interface(p, false);
    double half_u = 0.0, half_d = 0.0;
    for (int side = 0; side < 2; ++side) {
        const JetFunction& u = side == 0 ? pair.plus : pair.minus;
        const double dphi = side == 0 ? dphi_plus : dphi_minus;
        for (int i = 0; i < n; ++i) {
            const double x = -hx + i * hb;
            const Jet j = u(x, 0.0);
            const double e = std::exp(tau * weight_phi(p, x, 0.0));
            a[i] = e * j.v;
            bx[i] = e * (tau * (-x / p.delta) * j.v + j.dx);
            by[i] = e * (tau * dphi * j.v + j.dy);
        }
        half_u += h_half_seminorm(a, hb);
        half_d += h_half_seminorm(bx, hb) + h_half_seminorm(by, hb);
    }
    c.trace_half = tau * tau * half_u + half_d;
    for (int i = 0; i < n; ++i) {
        const double x = -hx + i * hb;
        const double e = std::exp(tau * weight_phi(p, x, 0.0));
        const Jet jp = pair.plus(x, 0.0), jm = pair.minus(x, 0.0);
        e1[i] = e * h1(x);
        e0[i] = e * (tau * (-x / p.delta) * (jp.v - jm.v) + (jp.dx - jm.dx));
    }
    c.h1_half = h_half_seminorm(e1, hb);
    c.h0_half = h_half_seminorm(e0, hb);

    c.lhs = c.interior + c.trace_l2 + c.trace_half;
    c.rhs = c.operator_term + c.h1_half + c.h0_half + c.h0_l2 + c.h1_l2;
    return c;
}

CarlemanCurve carleman_ratio(const CarlemanPair& pair, const WeightParams& p, std::span<const double> taus,
                             const CarlemanOptions& opt) {
    check_carleman_support(pair, p);
    CarlemanCurve curve;
    curve.pair = pair.name;
    for (double tau : taus) {
        if (!(tau >= p.tau0)) throw Error(ErrorCode::invalid_argument, "tau below tau0");
        const CarlemanTerms t = carleman_terms(pair, p, tau, opt);
        double r;
        if (t.lhs == 0.0 && t.rhs == 0.0) r = 0.0;
        else if (t.rhs == 0.0) r = std::numeric_limits<double>::infinity();
        else r = t.lhs / t.rhs;
        curve.tau.push_back(tau);
        curve.terms.push_back(t);
        curve.ratio.push_back(r);
        curve.finite = curve.finite && std::isfinite(r);
        curve.max_ratio = std::max(curve.max_ratio, r);
    }
    return curve;
}

}  // namespace tlab
