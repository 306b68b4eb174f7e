#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlab/geometry.hpp"
#include "tlab/solver.hpp"

namespace tlab {

enum class Integrand { value_squared, gradient_squared };

/// Membership predicate plus an optional bounding box used to skip elements.
struct Region {
    std::function<bool(Vec2)> contains;
    std::optional<Box> bounds;
};

Region whole_domain();
Region disk_region(Vec2 center, double radius);
Region pulled_back_region(const PulledBackRegions& regions, int j);

struct RegionIntegral {
    double value = 0.0;
    bool empty = true;  // no quadrature cell fell inside the region
};

/// Integral of u^2 or |grad u|^2 over the region. Elements meeting the region's
/// bounding box are split `depth` times and the pieces classified by centroid.
RegionIntegral region_integral(const DiscreteSolution& sol, const Region& region, Integrand integrand,
                               int depth = 4);

/// Exact integral over the triangles carrying a given tag.
double subdomain_integral(const DiscreteSolution& sol, Subdomain tag, Integrand integrand);

struct PowerValues {
    double volume = 0.0;    // int A grad u . grad u
    double boundary = 0.0;  // int u A grad u . nu over the outer boundary, element fluxes
    double discrepancy = 0.0;  // |volume - boundary| / |volume|
};

/// Throws Error(validation) when `problem` is not the one the solution was computed with.
PowerValues power(const DiscreteSolution& sol, const Problem& problem);

struct PowerReport {
    double W0 = 0.0;
    double W = 0.0;
    double gap = 0.0;             // W0 - W
    double normalized_gap = 0.0;  // |W0 - W| / W0
    double inclusion_energy = 0.0;  // int_D |grad u|^2 for the background solution
    double W0_discrepancy = 0.0;
    double W_discrepancy = 0.0;
};

PowerReport make_power_report(const PowerValues& background, const PowerValues& perturbed,
                              double inclusion_energy);

/// Discrete [f]_{1/2}^2 of uniformly spaced samples, adjacent pairs excluded.
/// Closed curves measure distance around the loop. Needs at least 8 samples.
double h_half_seminorm(std::span<const double> f, double spacing, bool closed = false);

struct EnergyLemmaRecord {
    double rho = 0.0;  // |W0 - W| / int_D |grad u|^2
    bool sign_ok = true;
    double gap = 0.0;
    double inclusion_energy = 0.0;
    double eta = 0.0;
    double zeta = 0.0;
};

EnergyLemmaRecord energy_lemma_check(const PowerReport& pr, JumpType jump, double eta, double zeta);

struct EnergyLemmaSummary {
    std::size_t count = 0;
    double min_rho = 0.0;
    double max_rho = 0.0;
    double spread = 0.0;  // max / min
    bool all_finite = true;
    bool all_signs_ok = true;
};

EnergyLemmaSummary summarize_energy_lemma(std::span<const EnergyLemmaRecord> records);

/// Jumps of the trace and conormal flux across triangle edges separating
/// the minus side from the rest.
TransmissionData transmission_residuals(const DiscreteSolution& sol);

/// CSV ledger rows: experiment,functional,region,value,mesh_h
void write_ledger_header(std::ostream& os);
void append_ledger_row(std::ostream& os, const std::string& experiment, const std::string& functional,
                       const std::string& region, double value, double mesh_h);

}  // namespace tlab
