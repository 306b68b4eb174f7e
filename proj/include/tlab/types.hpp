#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace tlab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// 2x2 matrix, row major. Conductivities are stored symmetric.
struct Mat2 {
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;

    static Mat2 identity(double s = 1.0) { return {s, 0.0, 0.0, s}; }

    Vec2 operator*(Vec2 v) const { return {xx * v.x + xy * v.y, yx * v.x + yy * v.y}; }
    friend Mat2 operator+(const Mat2& a, const Mat2& b) {
        return {a.xx + b.xx, a.xy + b.xy, a.yx + b.yx, a.yy + b.yy};
    }
    friend Mat2 operator-(const Mat2& a, const Mat2& b) {
        return {a.xx - b.xx, a.xy - b.xy, a.yx - b.yx, a.yy - b.yy};
    }
    friend Mat2 operator*(double s, const Mat2& a) { return {s * a.xx, s * a.xy, s * a.yx, s * a.yy}; }
    friend bool operator==(const Mat2&, const Mat2&) = default;

    bool symmetric() const { return xy == yx; }
};

/// Eigenvalues of the symmetric part, ascending.
inline std::array<double, 2> sym_eigenvalues(const Mat2& m) {
    const double off = 0.5 * (m.xy + m.yx);
    const double mean = 0.5 * (m.xx + m.yy);
    const double rad = std::hypot(0.5 * (m.xx - m.yy), off);
    return {mean - rad, mean + rad};
}

/// Spectral norm of the symmetric part.
inline double sym_norm(const Mat2& m) {
    const auto e = sym_eigenvalues(m);
    return std::max(std::abs(e[0]), std::abs(e[1]));
}

struct Box {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool contains(Vec2 p, double tol = 0.0) const {
        return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
    }
    double distance_to_boundary(Vec2 p) const {
        return std::min(std::min(p.x - x0, x1 - p.x), std::min(p.y - y0, y1 - p.y));
    }
};

using ScalarField = std::function<double(Vec2)>;
using VectorField = std::function<Vec2(Vec2)>;
using MatrixField = std::function<Mat2(Vec2)>;

enum class ErrorCode {
    invalid_argument,
    admissibility,
    geometry,
    validation,
    solver_diverged,
    indefinite_system,
    config,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline constexpr double pi = 3.14159265358979323846;

}  // namespace tlab
