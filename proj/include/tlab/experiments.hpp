#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tlab/carleman.hpp"
#include "tlab/random.hpp"
#include "tlab/scenario.hpp"
#include "tlab/sizeest.hpp"
#include "tlab/verify.hpp"

namespace tlab {

/// a0 + a1 x + a2 y + sum_i amp_i / 2 cos(freq_i (c_i x + s_i y) + shift_i).
struct SmoothData {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0;
    std::array<double, 3> amp{}, freq{}, dir_x{}, dir_y{}, shift{};

    static SmoothData random(Rng& rng);
    double operator()(Vec2 p) const;
    ScalarField field() const;
};

/// One member of a layered ensemble: random data and A+ = jump * A-.
struct LayeredMember {
    std::string id;
    double jump = 1.0;
    SmoothData data;
    Problem problem;
};

/// Member k draws from Rng::for_member(seed, k): first the jump, log-uniform
/// in [jump_min, jump_max], then the boundary data.
std::vector<LayeredMember> layered_members(const Scenario& base, std::uint64_t seed, int members, double jump_min,
                                           double jump_max, const std::string& prefix);

struct ThreeRegionSettings {
    WeightConfig weights;
    std::optional<double> R1, R2;  // default: the admissible maximum R
    double chart_x = 0.5;
    double patch_radius = 0.45;
    Form form = Form::gradient;
    double jump_min = 0.2, jump_max = 5.0;
    int members = 20;
};

struct ThreeSphereSettings {
    Vec2 center{0.5, 0.78};
    double r1 = 0.05, r2 = 0.1, r3 = 0.18;
    double theta = 0.5;
    double jump_min = 0.2, jump_max = 5.0;
    int members = 20;
};

struct PropagationSettings {
    double rho = 0.05;
    double spacing = 0.05;
    double alpha = 1.0;
    double jump_min = 0.2, jump_max = 5.0;
    int members = 10;
    bool refine = true;  // also solve at h/2 and record the relative change
};

struct PropagationRecord {
    std::string id;
    double jump = 1.0;
    PropagationResult coarse;
    std::optional<PropagationResult> fine;
    double relative_change = 0.0;  // |C(h) - C(h/2)| / C(h/2)
};

struct CarlemanSettings {
    WeightConfig weights;
    Mat2 A_plus = Mat2::identity(2.0);
    Mat2 A_minus = Mat2::identity();
    std::vector<double> tau_multipliers{1.0, 2.0, 4.0};
    CarlemanOptions options;
    int refinement = 2;  // quadrature refinement factor for the stability check
};

struct CarlemanRecord {
    CarlemanCurve curve;
    CarlemanCurve refined;
    double stability = 0.0;  // |max ratio - refined max ratio| / refined max ratio
};

struct SizeFamilySettings {
    int members = 20;
    double r_min = 0.05, r_max = 0.2;
    double margin = 0.05;     // clearance from the interface and the outer boundary
    double contrast = 2.0;    // A_hat = contrast * A+
    double eta = 0.5, zeta = 2.0;
    double fatness_h = 0.01;
    JumpType jump = JumpType::raise;
};

struct SizeMember {
    SizeSample sample;
    Vec2 center;
    double radius = 0.0;
    EnergyLemmaRecord energy;
};

/// Each member solves the background and the perturbed problem on its own
/// inclusion-fitted mesh.
std::vector<SizeMember> size_family(const Scenario& base, const SizeFamilySettings& s, double h, std::uint64_t seed);

/// Identifies a family: the background scenario without its inclusion, the mesh
/// size, the jump type and the mode.
std::string family_fingerprint(const Scenario& base, double h, JumpType jump, SizeMode mode);

/// When `solutions` is given it receives the solved members in order.
std::vector<VerificationReport> three_region_ensemble(const Scenario& base, const ThreeRegionSettings& s, double h,
                                                      std::uint64_t seed,
                                                      std::vector<DiscreteSolution>* solutions = nullptr);
std::vector<VerificationReport> three_sphere_ensemble(const Scenario& base, const ThreeSphereSettings& s, double h,
                                                      std::uint64_t seed,
                                                      std::vector<DiscreteSolution>* solutions = nullptr);
std::vector<PropagationRecord> propagation_ensemble(const Scenario& base, const PropagationSettings& s, double h,
                                                    std::uint64_t seed);
std::vector<CarlemanRecord> carleman_suite(const CarlemanSettings& s);

/// Same solution with values and gradients multiplied by c.
DiscreteSolution scaled(const DiscreteSolution& sol, double c);

/// Runs f(0..n-1) on a thread pool. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

// ---------------------------------------------------------------------------
// Config-driven commands

struct ExperimentConfig {
    std::string command;
    std::string base_dir;  // relative paths in the config resolve here
    std::optional<Scenario> scenario;
    std::optional<std::uint64_t> seed;
    std::optional<double> mesh_h;
    int members = 20;
    double fit_fraction = 0.5;
    double safety = 2.0;
    std::string out_dir = "out";
    std::optional<std::string> archive;
    std::vector<std::string> ledgers;
    Json params = Json::object();
    Json checks = Json::object();
};

extern const std::vector<std::string> experiment_commands;

/// Throws Error(config) on unknown keys, bad values or a missing scenario.
ExperimentConfig parse_experiment_config(const Json& doc, const std::string& base_dir);
ExperimentConfig load_experiment_config(const std::string& path);

struct RunOverrides {
    std::optional<std::string> command;
    std::optional<std::uint64_t> seed;
    std::optional<double> mesh_h;
    std::optional<std::string> out_dir;
    std::optional<double> safety;
    std::vector<std::string> ledgers;
};

void apply_overrides(ExperimentConfig& cfg, const RunOverrides& o);

struct RunResult {
    int exit_code = 0;  // 0 all checks passed, 1 a check failed
    std::vector<std::string> failing;  // report ids
    std::string summary;               // human-readable lines
};

/// Errors surface as exceptions: Error(solver_diverged / indefinite_system) for
/// the solver, anything else for invalid input.
RunResult run_experiment(const ExperimentConfig& cfg);

}  // namespace tlab
