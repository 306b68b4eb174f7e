#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tlab/geometry.hpp"
#include "tlab/types.hpp"

namespace tlab {

/// Inclusion geometry: a disk, an ellipse or a simple polygon.
class Shape {
public:
    enum class Kind { disk, ellipse, polygon };

    static Shape disk(Vec2 center, double radius);
    static Shape ellipse(Vec2 center, double semi_a, double semi_b, double angle = 0.0);
    static Shape polygon(std::vector<Vec2> vertices);

    Kind kind() const { return kind_; }
    Vec2 center() const { return center_; }
    double radius() const { return semi_a_; }
    double semi_a() const { return semi_a_; }
    double semi_b() const { return semi_b_; }
    double angle() const { return angle_; }
    const std::vector<Vec2>& vertices() const { return vertices_; }

    bool contains(Vec2 p) const;
    /// Negative inside, positive outside.
    double signed_distance(Vec2 p) const;
    double area() const;
    Box bbox() const;
    double perimeter() const;
    /// Closed counter-clockwise boundary samples with spacing at most `spacing`
    /// (first point not repeated). Polygons keep their corners.
    std::vector<Vec2> boundary(double spacing) const;

private:
    Kind kind_ = Kind::disk;
    Vec2 center_;
    double semi_a_ = 0.0, semi_b_ = 0.0, angle_ = 0.0;
    std::vector<Vec2> vertices_;

    Vec2 to_local(Vec2 p) const;
};

/// The global interface y = level + offset(x), spanning the domain width.
/// Omega_+ lies above it.
struct InterfaceCurve {
    double level = 0.5;
    std::function<double(double)> offset = [](double) { return 0.0; };
    std::string description = "0";

    double height(double x) const { return level + offset(x); }
    bool above(Vec2 p) const { return p.y > height(p.x); }
    /// Local chart around the interface point over x, as used for flattening.
    InterfaceGraph chart(double x, double patch_radius) const;
};

/// A = H+ A+ + H- A-.
struct PiecewiseCoefficient {
    MatrixField plus = [](Vec2) { return Mat2::identity(); };
    MatrixField minus = [](Vec2) { return Mat2::identity(); };
    double lambda0 = 1.0;
    double M0 = 0.0;
};

struct LowerOrderTerms {
    VectorField W = [](Vec2) { return Vec2{}; };
    ScalarField V = [](Vec2) { return 0.0; };
};

enum class JumpType { raise, lower };

struct InclusionScenario {
    Shape shape = Shape::disk({0.5, 0.5}, 0.1);
    MatrixField a_hat = [](Vec2) { return Mat2::identity(2.0); };
    double eta = 0.5;
    double zeta = 2.0;
    JumpType jump = JumpType::raise;
    std::optional<double> d1;
    std::optional<double> h;  // fatness parameter
};

/// Trace and conormal-flux jumps across the interface of a solved field.
struct TransmissionData {
    double h0_l2 = 0.0;
    double h1_l2 = 0.0;
    double h1_weak = 0.0;  // flux jump tested against interface hat functions
    double interface_length = 0.0;
};

struct CoefficientValidation {
    bool passed = true;
    bool symmetric = true;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double ellipticity_ratio = 1.0;  // max / min eigenvalue over the sample
    double lipschitz_quotient = 0.0;
    std::optional<Vec2> first_violation;
    std::string message;
};

CoefficientValidation validate_coefficient(const PiecewiseCoefficient& c, const Box& region, int sample_count,
                                           std::uint64_t seed = 1);

struct LowerOrderValidation {
    bool passed = true;
    double sup_W = 0.0;
    double sup_V = 0.0;
};

LowerOrderValidation validate_lower_order(const LowerOrderTerms& lot, double lambda0, const Box& region,
                                          int sample_count, std::uint64_t seed = 1);

struct InclusionValidation {
    bool passed = true;
    bool jump_ok = true;
    double lower_margin = 0.0;  // min eigenvalue of the lower matrix gap over samples
    double upper_margin = 0.0;  // min eigenvalue of the upper matrix gap over samples
    double area = 0.0;          // |D| by grid quadrature
    double eroded_area = 0.0;   // |D_h|
    double fat_ratio = 1.0;     // |D_h| / |D|
    std::optional<bool> fat;
    std::optional<double> distance_to_plus_boundary;
    std::optional<Vec2> first_violation;
    std::string message;
};

struct InclusionCheckOptions {
    int sample_count = 10000;
    std::uint64_t seed = 1;
    int erosion_resolution = 1024;
    double fatness_tolerance = 1e-3;  // relative slack on |D_h| >= |D| / 2
    const InterfaceCurve* interface = nullptr;
    const Box* domain = nullptr;
};

/// `background` is A on Omega_+ (the inclusion lies there).
InclusionValidation validate_inclusion(const InclusionScenario& s, const MatrixField& background,
                                       const InclusionCheckOptions& opt = {});

/// |D| and |D_h| by signed-distance thresholding on a res x res grid over the bounding box.
std::pair<double, double> eroded_area(const Shape& shape, double h, int resolution);

/// dist(D, dOmega_+) where Omega_+ = {y > interface} within the domain.
double distance_to_plus_boundary(const Shape& shape, const Box& domain, const InterfaceCurve* interface);

}  // namespace tlab
