#include "tlab/sizeest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tlab/random.hpp"

namespace tlab {

const char* to_string(SizeMode m) { return m == SizeMode::fat ? "fat" : "general"; }

SizeMode size_mode_from_string(const std::string& s) {
    if (s == "fat") return SizeMode::fat;
    if (s == "general") return SizeMode::general;
    throw Error(ErrorCode::config, "unknown size mode '" + s + "'");
}

PowerReport measure_gap(std::shared_ptr<const Mesh> mesh, const Problem& background,
                        const InclusionScenario& inclusion, const SolverOptions& opt) {
    if (background.inclusion) throw Error(ErrorCode::invalid_argument, "background problem carries an inclusion");
    Problem perturbed = background;
    perturbed.inclusion = inclusion;
    const DiscreteSolution u0 = solve_dirichlet(mesh, background, opt);
    const DiscreteSolution u = solve_dirichlet(mesh, perturbed, opt);
    return make_power_report(power(u0, background), power(u, perturbed),
                             subdomain_integral(u0, Subdomain::inclusion, Integrand::gradient_squared));
}

SizeBoundsResult bound_size(const PowerReport& pr, const SizeCalibration& cal, std::optional<double> true_size) {
    const double raise = pr.W - pr.W0;
    if ((cal.jump == JumpType::raise && raise < 0.0) || (cal.jump == JumpType::lower && raise > 0.0))
        throw Error(ErrorCode::validation, "power gap sign contradicts the declared jump type");
    SizeBoundsResult r;
    r.mode = cal.mode;
    r.K1 = cal.K1;
    r.K2 = cal.mode == SizeMode::fat ? cal.K2 : cal.K2_general;
    r.p = cal.mode == SizeMode::fat ? 1.0 : cal.p;
    r.W0 = pr.W0;
    r.W = pr.W;
    r.gap = pr.gap;
    r.normalized_gap = pr.normalized_gap;
    const double g = pr.normalized_gap;
    r.lower = cal.K1 / cal.safety * g;
    r.upper = cal.safety * r.K2 * (cal.mode == SizeMode::fat ? g : std::pow(g, 1.0 / r.p));
    r.true_size = true_size;
    if (true_size) r.contained = r.lower <= *true_size && *true_size <= r.upper;
    return r;
}

SizeCalibration calibrate_size(const std::vector<SizeSample>& family, SizeMode mode, std::uint64_t seed, double safety,
                               double fit_fraction) {
    SizeCalibration cal;
    cal.mode = mode;
    cal.safety = safety;
    if (!(safety >= 1.0)) throw Error(ErrorCode::invalid_argument, "safety factor must be at least 1");
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (mode == SizeMode::fat && !family[i].fat) {
            cal.excluded.push_back(family[i].id + ": " +
                                   (family[i].violation.empty() ? "fatness condition fails" : family[i].violation));
            continue;
        }
        usable.push_back(i);
    }
    if (usable.size() < 10) throw Error(ErrorCode::invalid_argument, "size calibration needs at least 10 usable members");
    cal.jump = family[usable.front()].jump;
    for (std::size_t i : usable)
        if (family[i].jump != cal.jump) throw Error(ErrorCode::invalid_argument, "family mixes jump types");
    if (std::all_of(usable.begin(), usable.end(), [&](std::size_t i) { return family[i].power.gap == 0.0; }))
        throw Error(ErrorCode::invalid_argument, "degenerate family: all power gaps are zero");

    const auto n_fit = static_cast<std::size_t>(std::llround(static_cast<double>(usable.size()) * fit_fraction));
    if (n_fit < 2 || n_fit >= usable.size()) throw Error(ErrorCode::invalid_argument, "fit fraction leaves an empty split");
    Rng rng(seed);
    rng.shuffle(usable);
    std::vector<std::size_t> fit(usable.begin(), usable.begin() + static_cast<std::ptrdiff_t>(n_fit));
    std::vector<std::size_t> hold(usable.begin() + static_cast<std::ptrdiff_t>(n_fit), usable.end());
    std::sort(fit.begin(), fit.end());
    std::sort(hold.begin(), hold.end());
    for (std::size_t i : fit) cal.fit_ids.push_back(family[i].id);
    for (std::size_t i : hold) cal.holdout_ids.push_back(family[i].id);

    cal.K1 = std::numeric_limits<double>::infinity();
    std::vector<double> lx, ly;
    for (std::size_t i : fit) {
        const double g = family[i].power.normalized_gap;
        if (!(g > 0.0)) continue;
        const double k = family[i].true_size / g;
        cal.K1 = std::min(cal.K1, k);
        cal.K2 = std::max(cal.K2, k);
        lx.push_back(std::log(g));
        ly.push_back(std::log(family[i].true_size));
    }
    if (lx.empty()) throw Error(ErrorCode::invalid_argument, "degenerate fit split: all power gaps are zero");
    if (lx.size() >= 2) {
        const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
        const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t k = 0; k < lx.size(); ++k) {
            sxx += (lx[k] - mx) * (lx[k] - mx);
            sxy += (lx[k] - mx) * (ly[k] - my);
        }
        cal.slope = sxx > 0.0 ? sxy / sxx : 1.0;
        cal.intercept = my - cal.slope * mx;
    } else {
        cal.slope = 1.0;
    }
    cal.p = cal.slope > 0.0 ? std::max(1.0, 1.0 / cal.slope) : 1.0;
    for (std::size_t i : fit) {
        const double g = family[i].power.normalized_gap;
        if (g > 0.0) cal.K2_general = std::max(cal.K2_general, family[i].true_size / std::pow(g, 1.0 / cal.p));
    }
    return cal;
}

LowerBoundIngredients lower_bound_ingredients(const DiscreteSolution& sol, double d) {
    const Mesh& mesh = *sol.mesh;
    LowerBoundIngredients r;
    double l2 = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double g2 = dot(sol.gradients[t], sol.gradients[t]);
        const double a = mesh.area(t);
        l2 += a * g2;
        if (mesh.domain.distance_to_boundary(mesh.centroid(t)) > 0.5 * d)
            r.grad_linf_interior = std::max(r.grad_linf_interior, std::sqrt(g2));
        if (mesh.tags[t] == Subdomain::inclusion) {
            r.inclusion_energy += a * g2;
            r.inclusion_area += a;
        }
    }
    r.grad_l2 = std::sqrt(l2);
    r.linf_over_l2 = r.grad_l2 > 0.0 ? r.grad_linf_interior / r.grad_l2 : 0.0;
    const double denom = r.inclusion_area * r.grad_linf_interior * r.grad_linf_interior;
    r.energy_over_area_linf2 = denom > 0.0 ? r.inclusion_energy / denom : 0.0;
    return r;
}

}  // namespace tlab
