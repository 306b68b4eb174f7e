#include "tlab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace tlab {

namespace {

[[noreturn]] void inadmissible(const std::string& what) {
    throw Error(ErrorCode::admissibility, "inadmissible weight parameters: " + what);
}

double squared(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

// alpha y / delta + beta y^2 / (2 delta^2), the y-part shared by phi and z
double vertical_part(double alpha, double beta, double delta, double y) {
    return alpha * y / delta + beta * y * y / (2.0 * delta * delta);
}

// Root of vertical_part(alpha_minus, ...) = level on the branch through the origin.
double branch_root(double alpha, double beta, double delta, double level) {
    const double disc = alpha * alpha + 2.0 * beta * level;
    if (disc <= 0.0) return -delta * alpha / beta;
    return delta * (-alpha + std::sqrt(disc)) / beta;
}

}  // namespace

double WeightParams::r_bound() const {
    return std::min({r0, 13.0 * alpha_minus / (8.0 * beta), 2.0 * delta / (19.0 * alpha_minus + 8.0 * beta)});
}

void check_admissible(const WeightParams& p) {
    if (!(p.alpha_minus > 0.0)) inadmissible("alpha_minus must be positive");
    if (!(p.alpha_plus > 0.0)) inadmissible("alpha_plus must be positive");
    if (!(p.beta > 0.0)) inadmissible("beta must be positive");
    if (!(p.delta > 0.0)) inadmissible("delta must be positive");
    if (!(p.separation > 0.0)) inadmissible("L must be positive");
    if (!(p.r0 > 0.0 && p.r0 <= 1.0)) inadmissible("r0 must lie in (0, 1]");
    if (!(p.delta0 > 0.0)) inadmissible("delta0 must be positive");
    if (!(p.tau0 > 0.0)) inadmissible("tau0 must be positive");
    if (!(p.alpha_plus > p.separation * p.alpha_minus)) inadmissible("alpha_plus > L * alpha_minus violated");
    if (!(p.delta <= p.delta0)) inadmissible("delta <= delta0 violated");
    if (!(p.r > 0.0)) inadmissible("r must be positive");
    if (!(p.r <= p.r0)) inadmissible("r <= r0 violated");
    if (!(p.r <= 13.0 * p.alpha_minus / (8.0 * p.beta)))
        inadmissible("r <= 13 alpha_minus / (8 beta) violated");
    if (!(p.r <= 2.0 * p.delta / (19.0 * p.alpha_minus + 8.0 * p.beta)))
        inadmissible("r <= 2 delta / (19 alpha_minus + 8 beta) violated");
    if (!(p.R <= 13.0 * p.alpha_minus * p.alpha_minus / (128.0 * p.beta)))
        inadmissible("R <= 13 alpha_minus^2 / (128 beta) violated");
}

WeightParams make_weight_params(const WeightConfig& cfg) {
    WeightParams p;
    p.alpha_plus = cfg.alpha_plus;
    p.alpha_minus = cfg.alpha_minus;
    p.beta = cfg.beta;
    p.delta = cfg.delta;
    p.separation = cfg.separation;
    p.r0 = cfg.r0;
    p.delta0 = cfg.delta0;
    p.tau0 = cfg.tau0;
    p.r = cfg.r.value_or(p.r_bound());
    p.R = p.alpha_minus * p.r / 16.0;
    check_admissible(p);
    return p;
}

double weight_phi(const WeightParams& p, std::span<const double> x, double y) {
    const double alpha = y >= 0.0 ? p.alpha_plus : p.alpha_minus;
    return vertical_part(alpha, p.beta, p.delta, y) - squared(x) / (2.0 * p.delta);
}

double weight_phi(const WeightParams& p, double x, double y) {
    return weight_phi(p, std::span<const double>(&x, 1), y);
}

double level_z(const WeightParams& p, std::span<const double> x, double y) {
    return vertical_part(p.alpha_minus, p.beta, p.delta, y) - squared(x) / (2.0 * p.delta);
}

double level_z(const WeightParams& p, double x, double y) {
    return level_z(p, std::span<const double>(&x, 1), y);
}

double weight_phi_dy_at_interface(const WeightParams& p, bool upper) {
    return (upper ? p.alpha_plus : p.alpha_minus) / p.delta;
}

// ---------------------------------------------------------------------------

double RegionTriple::z(double x, double y) const {
    return vertical_part(alpha_minus, beta, delta, y) - x * x / (2.0 * delta);
}

// The sets {z >= c} also contain a far branch y < -delta alpha_minus / beta
// where z turns back up; only the component through the origin is used.
bool RegionTriple::in_u1(double x, double y) const {
    return y > R1 / (8.0 * a) && y < R1 / a && z(x, y) >= -4.0 * R2 && y > -delta * alpha_minus / beta;
}

bool RegionTriple::in_u2(double x, double y) const {
    const double zz = z(x, y);
    return y < R1 / (8.0 * a) && zz >= -R2 && zz <= R1 / (2.0 * a) && y > -delta * alpha_minus / beta;
}

bool RegionTriple::in_u3(double x, double y) const {
    return y < R1 / a && z(x, y) >= -4.0 * R2 && y > -delta * alpha_minus / beta;
}

bool RegionTriple::contains(int j, Vec2 p) const {
    switch (j) {
        case 1: return in_u1(p.x, p.y);
        case 2: return in_u2(p.x, p.y);
        case 3: return in_u3(p.x, p.y);
        default: throw Error(ErrorCode::invalid_argument, "region index must be 1, 2 or 3");
    }
}

Box RegionTriple::bounds(int j) const {
    const double top = (j == 2) ? R1 / (8.0 * a) : R1 / a;
    const double floor_level = (j == 2) ? -R2 : -4.0 * R2;
    const double bottom = (j == 1) ? R1 / (8.0 * a) : branch_root(alpha_minus, beta, delta, floor_level);
    // z is increasing in y on this branch, so |x| is widest at the top
    const double reach = vertical_part(alpha_minus, beta, delta, top) - floor_level;
    const double half = std::sqrt(std::max(0.0, 2.0 * delta * reach));
    return {-half, half, bottom, top};
}

RegionTriple make_regions(const WeightParams& p, double R1, double R2) {
    if (!(R1 > 0.0 && R1 <= p.R))
        throw Error(ErrorCode::admissibility, "R1 must lie in (0, R] with R = " + std::to_string(p.R));
    if (!(R2 > 0.0 && R2 <= p.R))
        throw Error(ErrorCode::admissibility, "R2 must lie in (0, R] with R = " + std::to_string(p.R));
    RegionTriple rt;
    rt.R1 = R1;
    rt.R2 = R2;
    rt.a = p.alpha_plus / p.delta;
    rt.kappa1 = R2 / (2.0 * R1 + 3.0 * R2);
    rt.kappa2 = 1.0 - rt.kappa1;  // (2R1 + 2R2)/(2R1 + 3R2); sums to 1 in floating point
    rt.alpha_minus = p.alpha_minus;
    rt.beta = p.beta;
    rt.delta = p.delta;
    if (R1 >= R2) rt.warning = "R1 >= R2: the interpolation argument assumes R1 < R2";
    return rt;
}

// ---------------------------------------------------------------------------

InterfaceValidation validate_interface(const InterfaceGraph& g, int samples) {
    InterfaceValidation out;
    out.psi_at_origin = g.psi(0.0);
    const double r = g.patch_radius;
    const double step = 1e-4 * r;
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = -r + 2.0 * r * i / (samples - 1);
        const double f0 = g.psi(t);
        const double fp = g.psi(t + step), fm = g.psi(t - step);
        m0 = std::max(m0, std::abs(f0));
        m1 = std::max(m1, std::abs((fp - fm) / (2.0 * step)));
        m2 = std::max(m2, std::abs((fp - 2.0 * f0 + fm) / (step * step)));
    }
    out.c2_norm = m0 + m1 + m2;
    if (std::abs(out.psi_at_origin) > 1e-12) {
        out.passed = false;
        out.message = "psi(0) != 0";
    } else if (out.c2_norm > g.K0) {
        out.passed = false;
        out.message = "C2 norm " + std::to_string(out.c2_norm) + " exceeds K0 = " + std::to_string(g.K0);
    }
    return out;
}

bool in_patch(const InterfaceGraph& g, Vec2 point) {
    return std::abs(point.x - g.origin.x) <= g.patch_radius;
}

Vec2 flatten(const InterfaceGraph& g, Vec2 point) {
    if (!in_patch(g, point)) throw Error(ErrorCode::geometry, "point outside the interface patch");
    const double xl = point.x - g.origin.x;
    return {xl, point.y - g.origin.y - g.psi(xl)};
}

Vec2 unflatten(const InterfaceGraph& g, Vec2 flat) {
    if (std::abs(flat.x) > g.patch_radius) throw Error(ErrorCode::geometry, "point outside the interface patch");
    return {flat.x + g.origin.x, flat.y + g.origin.y + g.psi(flat.x)};
}

PulledBackRegions::PulledBackRegions(InterfaceGraph g, RegionTriple rt) : g_(std::move(g)), rt_(std::move(rt)) {}

bool PulledBackRegions::contains(int j, Vec2 point) const {
    if (!in_patch(g_, point)) return false;
    return rt_.contains(j, flatten(g_, point));
}

Box PulledBackRegions::bounds(int j) const {
    const Box flat = rt_.bounds(j);
    double lo = flat.y0, hi = flat.y1;
    double pmin = 0.0, pmax = 0.0;
    const int n = 512;
    for (int i = 0; i <= n; ++i) {
        const double t = flat.x0 + (flat.x1 - flat.x0) * i / n;
        const double v = g_.psi(t);
        if (i == 0 || v < pmin) pmin = v;
        if (i == 0 || v > pmax) pmax = v;
    }
    return {flat.x0 + g_.origin.x, flat.x1 + g_.origin.x, lo + pmin + g_.origin.y, hi + pmax + g_.origin.y};
}

PulledBackRegions pull_back_regions(const InterfaceGraph& g, const RegionTriple& rt) {
    const Box flat = rt.bounds(3);
    if (std::max(std::abs(flat.x0), std::abs(flat.x1)) > g.patch_radius)
        throw Error(ErrorCode::geometry, "region U3 extends beyond the interface patch");
    return PulledBackRegions(g, rt);
}

}  // namespace tlab
