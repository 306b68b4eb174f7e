#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlab/carleman.hpp"
#include "tlab/functionals.hpp"
#include "tlab/geometry.hpp"
#include "tlab/solver.hpp"

namespace tlab {

struct VerificationReport {
    std::string id;
    std::string inequality;  // three-region-gradient, three-region-value, three-sphere, carleman, ...
    double lhs = 0.0;
    double m1 = 0.0;
    double m3 = 0.0;
    double kappa1 = 0.0;  // exponent on m1 (theta for the three-sphere form)
    double kappa2 = 0.0;
    double ratio = 0.0;   // lhs / (m1^kappa1 m3^kappa2)
    bool violation_candidate = false;  // lhs > 0 with m1 = 0
    std::optional<double> fitted_constant;
    std::optional<bool> pass;
    std::string split;  // "fit" or "holdout" once calibrated
    double mesh_h = 0.0;
    std::uint64_t seed = 0;
    std::map<std::string, double> params;
};

/// ratio = lhs / (m1^k1 m3^k2) with ratio 0 when lhs = 0 and +inf when only m1 vanishes.
double interpolation_ratio(double lhs, double m1, double m3, double k1, double k2, bool* violation = nullptr);

enum class Form { value, gradient };

/// Integrals over the pulled-back U2 (lhs), U1 and U3. Throws Error(geometry)
/// when U3 leaves the solved domain.
VerificationReport three_region_check(const DiscreteSolution& sol, const PulledBackRegions& regions, Form form);

/// Throws Error(geometry) when the outer ball crosses the interface or leaves the domain.
VerificationReport three_sphere_check(const DiscreteSolution& sol, Vec2 center, double r1, double r2, double r3,
                                      double theta = 0.5);

struct PropagationResult {
    double constant = 0.0;  // min over centres of int_B |grad u|^2 / int_Omega |grad u|^2
    Vec2 argmin;
    double total_energy = 0.0;
    std::size_t centers = 0;
    double boundary_ratio = 0.0;  // C^{1,alpha'} proxy over H^{1/2} norm of phi - phi0
    double alpha_prime = 0.0;
};

/// Ball centres on a grid of the given spacing, kept when B(x, rho) lies in the
/// plus part of the domain (above `interface` when given).
std::vector<Vec2> admissible_centers(const Mesh& mesh, double rho, double spacing, const InterfaceCurve* interface);

/// Throws Error(validation) for a constant solution and Error(geometry) with no admissible centre.
PropagationResult propagation_constant(const DiscreteSolution& sol, double rho, std::span<const Vec2> centers,
                                       double alpha = 1.0);

struct BoundaryDataRatio {
    double phi0 = 0.0;
    double holder = 0.0;  // sup|phi - phi0| + sup|d phi / ds|
    double h_half = 0.0;  // (|phi - phi0|_{L2}^2 + [phi - phi0]_{1/2}^2)^{1/2}
    double ratio = 0.0;
    double alpha_prime = 0.0;
};

/// alpha' = alpha / ((alpha + 1) n 2) with n = 2, asserted inside (0, alpha / ((alpha + 1) n)).
BoundaryDataRatio boundary_data_ratio(const Mesh& mesh, const ScalarField& phi, double alpha = 1.0,
                                      int samples = 1024);

struct CalibrationSet {
    std::string inequality;
    std::vector<VerificationReport> reports;  // with split, fitted_constant and pass filled in
    std::vector<std::size_t> fit;
    std::vector<std::size_t> holdout;
    double constant = 0.0;
    double safety = 2.0;
    double holdout_pass_rate = 0.0;
    double max_holdout_ratio = 0.0;
    std::size_t fit_violations = 0;
};

/// Deterministic shuffle under `seed`; the first round(n * fit_fraction) reports form the fit split.
CalibrationSet calibrate(std::vector<VerificationReport> reports, std::uint64_t seed, double safety = 2.0,
                         double fit_fraction = 0.5);

VerificationReport carleman_report(const CarlemanCurve& curve);

}  // namespace tlab
