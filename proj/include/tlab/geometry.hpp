#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "tlab/types.hpp"

namespace tlab {

/// Parameters of the piecewise-quadratic Carleman weight together with the
/// admissibility radii r and R derived from them. Construct through
/// make_weight_params(), which enforces every stated constraint.
struct WeightParams {
    double alpha_plus = 0.0;
    double alpha_minus = 0.0;
    double beta = 1.0;
    double delta = 1.0;
    double separation = 4.0;  // L in alpha_plus > L * alpha_minus
    double r0 = 1.0;
    double delta0 = 1.0;
    double tau0 = 1.0;

    double r = 0.0;  // derived
    double R = 0.0;  // derived, alpha_minus * r / 16

    /// Upper bound on r from the weight constraint: min(r0, 13a-/(8b), 2d/(19a- + 8b)).
    double r_bound() const;
};

struct WeightConfig {
    double alpha_plus = 0.5;
    double alpha_minus = 0.1;
    double beta = 1.0;
    double delta = 1.0;
    double separation = 4.0;
    double r0 = 1.0;
    double delta0 = 1.0;
    double tau0 = 1.0;
    std::optional<double> r;  // default: the largest admissible value
};

/// Throws Error(admissibility) naming the first violated constraint.
WeightParams make_weight_params(const WeightConfig& cfg);
void check_admissible(const WeightParams& p);

double weight_phi(const WeightParams& p, std::span<const double> x, double y);
double weight_phi(const WeightParams& p, double x, double y);
double level_z(const WeightParams& p, std::span<const double> x, double y);
double level_z(const WeightParams& p, double x, double y);

/// One-sided normal derivative of the weight at y = 0 (upper side if `upper`).
double weight_phi_dy_at_interface(const WeightParams& p, bool upper);

/// The three regions of the interface inequality, in flattened coordinates.
struct RegionTriple {
    double R1 = 0.0;
    double R2 = 0.0;
    double a = 0.0;  // alpha_plus / delta
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double alpha_minus = 0.0;
    double beta = 0.0;
    double delta = 0.0;
    std::string warning;  // set when R1 >= R2

    double z(double x, double y) const;
    bool in_u1(double x, double y) const;
    bool in_u2(double x, double y) const;
    bool in_u3(double x, double y) const;
    /// j in {1, 2, 3}
    bool contains(int j, Vec2 p) const;
    /// Axis-aligned box enclosing U_j.
    Box bounds(int j) const;
};

RegionTriple make_regions(const WeightParams& p, double R1, double R2);

/// Local graph description of the interface around `origin`: in the patch
/// |x - origin.x| < patch_radius the interface is y - origin.y = psi(x - origin.x).
struct InterfaceGraph {
    Vec2 origin;
    std::function<double(double)> psi = [](double) { return 0.0; };
    double patch_radius = 1.0;
    double K0 = 1.0;
    std::optional<double> d0;
    double s0 = 1.0;
    double L0 = 1.0;
};

struct InterfaceValidation {
    bool passed = true;
    double psi_at_origin = 0.0;
    double c2_norm = 0.0;  // max|psi| + max|psi'| + max|psi''| over the patch
    std::string message;
};

InterfaceValidation validate_interface(const InterfaceGraph& g, int samples = 2001);

/// (x, y) -> (x - x_P, y - y_P - psi(x - x_P)). Throws Error(geometry) outside the patch.
Vec2 flatten(const InterfaceGraph& g, Vec2 point);
Vec2 unflatten(const InterfaceGraph& g, Vec2 flat);
bool in_patch(const InterfaceGraph& g, Vec2 point);

/// Physical-space regions T^{-1}(U_j).
class PulledBackRegions {
public:
    PulledBackRegions(InterfaceGraph g, RegionTriple rt);

    bool contains(int j, Vec2 point) const;
    const RegionTriple& regions() const { return rt_; }
    const InterfaceGraph& interface() const { return g_; }
    /// Physical bounding box of region j (exact up to the sampling of psi).
    Box bounds(int j) const;

private:
    InterfaceGraph g_;
    RegionTriple rt_;
};

PulledBackRegions pull_back_regions(const InterfaceGraph& g, const RegionTriple& rt);

}  // namespace tlab
