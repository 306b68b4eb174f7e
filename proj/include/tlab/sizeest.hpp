#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tlab/functionals.hpp"
#include "tlab/solver.hpp"

namespace tlab {

enum class SizeMode { fat, general };

const char* to_string(SizeMode m);
SizeMode size_mode_from_string(const std::string& s);

/// Solves the background and the perturbed problem on the same inclusion-fitted mesh.
/// `background` must not carry an inclusion.
PowerReport measure_gap(std::shared_ptr<const Mesh> mesh, const Problem& background,
                        const InclusionScenario& inclusion, const SolverOptions& opt = {});

struct SizeSample {
    std::string id;
    PowerReport power;
    double true_size = 0.0;
    JumpType jump = JumpType::raise;
    bool fat = true;  // |D_h| >= |D| / 2
    std::string violation;
};

struct SizeCalibration {
    SizeMode mode = SizeMode::fat;
    JumpType jump = JumpType::raise;
    double K1 = 0.0;        // min over fit of |D| W0 / |gap|
    double K2 = 0.0;        // max over fit of the same
    double p = 1.0;
    double K2_general = 0.0;  // max over fit of |D| / gap_n^{1/p}
    double slope = 0.0;       // least-squares slope of log|D| against log gap_n
    double intercept = 0.0;
    double safety = 2.0;
    std::string fingerprint;
    std::vector<std::string> fit_ids;
    std::vector<std::string> holdout_ids;
    std::vector<std::string> excluded;  // "id: reason"
};

struct SizeBoundsResult {
    double lower = 0.0;
    double upper = 0.0;
    double K1 = 0.0;
    double K2 = 0.0;
    double p = 1.0;
    SizeMode mode = SizeMode::fat;
    double W0 = 0.0, W = 0.0, gap = 0.0, normalized_gap = 0.0;
    std::optional<double> true_size;
    std::optional<bool> contained;
};

/// Bounds K1 gap_n / s <= |D| <= s K2 gap_n (fat) or s K2' gap_n^{1/p} (general),
/// s the calibration safety factor. Throws Error(validation) when the gap sign
/// contradicts the jump type.
SizeBoundsResult bound_size(const PowerReport& pr, const SizeCalibration& cal,
                            std::optional<double> true_size = std::nullopt);

/// Fat mode drops members that fail the fatness condition before splitting.
/// Throws Error(invalid_argument) with fewer than 10 usable members or all gaps zero.
SizeCalibration calibrate_size(const std::vector<SizeSample>& family, SizeMode mode, std::uint64_t seed,
                               double safety = 2.0, double fit_fraction = 0.5);

struct LowerBoundIngredients {
    double grad_linf_interior = 0.0;  // max |grad u| over triangles at distance > d/2 from the boundary
    double grad_l2 = 0.0;
    double inclusion_energy = 0.0;    // int_D |grad u|^2
    double inclusion_area = 0.0;
    double linf_over_l2 = 0.0;
    double energy_over_area_linf2 = 0.0;  // int_D |grad u|^2 / (|D| |grad u|_inf^2), at most 1
};

LowerBoundIngredients lower_bound_ingredients(const DiscreteSolution& sol, double d);

}  // namespace tlab
