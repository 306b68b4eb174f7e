#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tlab/geometry.hpp"
#include "tlab/types.hpp"

namespace tlab {

/// Value and derivatives up to order two at a point.
struct Jet {
    double v = 0.0, dx = 0.0, dy = 0.0, dxx = 0.0, dxy = 0.0, dyy = 0.0;

    friend Jet operator*(const Jet& f, const Jet& g);
    friend Jet operator+(const Jet& f, const Jet& g);
    friend Jet operator*(double s, const Jet& f);
};

using JetFunction = std::function<Jet(double x, double y)>;

/// Compactly supported pair u = H+ u+ + H- u- across the flat interface y = 0,
/// with constant conductivities on each side.
struct CarlemanPair {
    std::string name;
    JetFunction plus;
    JetFunction minus;
    Mat2 A_plus = Mat2::identity();
    Mat2 A_minus = Mat2::identity();
};

/// C^infinity bump exp(-1/(1 - (t/w)^2)) of half-width w, as a jet in one variable.
Jet bump_jet(double t, double w, bool along_x);

/// The five analytic pairs of the acceptance suite, supported inside
/// B_{delta/2} x [-delta r0, delta r0].
std::vector<CarlemanPair> standard_carleman_pairs(const WeightParams& p, Mat2 A_plus, Mat2 A_minus);

/// Throws Error(validation) when |u| > 1e-12 somewhere outside the support box.
void check_carleman_support(const CarlemanPair& pair, const WeightParams& p);

struct CarlemanOptions {
    int cells = 32;             // Gauss cells per direction on each half of the box
    int trace_samples = 257;    // uniform samples of the interface segment for seminorms
};

struct CarlemanTerms {
    double interior = 0.0;      // sum tau^{3-2k} int |D^k u|^2 e^{2 tau phi}
    double trace_l2 = 0.0;      // tau^3 and tau weighted traces
    double trace_half = 0.0;    // tau^2 [e^{tau phi} u]^2 + [D(e^{tau phi} u)]^2
    double operator_term = 0.0; // int |L u|^2 e^{2 tau phi}
    double h1_half = 0.0;
    double h0_half = 0.0;
    double h0_l2 = 0.0;
    double h1_l2 = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct CarlemanCurve {
    std::string pair;
    std::vector<double> tau;
    std::vector<CarlemanTerms> terms;
    std::vector<double> ratio;  // lhs / rhs, 0 when both vanish
    double max_ratio = 0.0;
    bool finite = true;
};

CarlemanTerms carleman_terms(const CarlemanPair& pair, const WeightParams& p, double tau,
                             const CarlemanOptions& opt = {});

CarlemanCurve carleman_ratio(const CarlemanPair& pair, const WeightParams& p, std::span<const double> taus,
                             const CarlemanOptions& opt = {});

}  // namespace tlab
