#include "tlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "tlab/report_io.hpp"

namespace tlab {

namespace fs = std::filesystem;

SmoothData SmoothData::random(Rng& rng) {
    SmoothData d;
    d.a0 = rng.normal();
    d.a1 = rng.normal();
    d.a2 = rng.normal();
    for (int i = 0; i < 3; ++i) {
        d.freq[i] = rng.uniform(1.0, 4.0);
        const double th = rng.uniform(0.0, 2.0 * pi);
        d.dir_x[i] = std::cos(th);
        d.dir_y[i] = std::sin(th);
        d.shift[i] = rng.uniform(0.0, 2.0 * pi);
    }
    for (int i = 0; i < 3; ++i) d.amp[i] = rng.normal();
    return d;
}

double SmoothData::operator()(Vec2 p) const {
    double v = a0 + a1 * p.x + a2 * p.y;
    for (int i = 0; i < 3; ++i) v += 0.5 * amp[i] * std::cos(freq[i] * (dir_x[i] * p.x + dir_y[i] * p.y) + shift[i]);
    return v;
}

ScalarField SmoothData::field() const {
    const SmoothData d = *this;
    return [d](Vec2 p) { return d(p); };
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
    const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace {

std::string member_id(const std::string& prefix, std::size_t k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "-%03zu", k);
    return prefix + buf;
}

void check_jump_range(double lo, double hi) {
    if (!(lo > 0.0 && hi >= lo)) throw Error(ErrorCode::config, "jump range must satisfy 0 < min <= max");
}

std::shared_ptr<const Mesh> background_mesh(const Scenario& base, double h) {
    return std::make_shared<const Mesh>(build_mesh(base.mesh_spec(h, false)));
}

}  // namespace

std::vector<LayeredMember> layered_members(const Scenario& base, std::uint64_t seed, int members, double jump_min,
                                           double jump_max, const std::string& prefix) {
    check_jump_range(jump_min, jump_max);
    std::vector<LayeredMember> out;
    for (int k = 0; k < members; ++k) {
        Rng rng = Rng::for_member(seed, static_cast<std::uint64_t>(k));
        LayeredMember m;
        m.id = member_id(prefix, static_cast<std::size_t>(k));
        m.jump = std::exp(rng.uniform(std::log(jump_min), std::log(jump_max)));
        m.data = SmoothData::random(rng);
        m.problem = base.problem(false);
        const MatrixField minus = base.coefficient.minus;
        const double jump = m.jump;
        m.problem.coefficient.plus = [minus, jump](Vec2 p) { return jump * minus(p); };
        m.problem.boundary.phi = m.data.field();
        m.problem.boundary.dirichlet_sides = all_sides;
        m.problem.source = nullptr;
        out.push_back(std::move(m));
    }
    return out;
}

DiscreteSolution scaled(const DiscreteSolution& sol, double c) {
    DiscreteSolution s = sol;
    for (double& v : s.values) v *= c;
    for (Vec2& g : s.gradients) g = c * g;
    return s;
}

std::vector<VerificationReport> three_region_ensemble(const Scenario& base, const ThreeRegionSettings& s, double h,
                                                      std::uint64_t seed, std::vector<DiscreteSolution>* solutions) {
    if (!base.interface) throw Error(ErrorCode::config, "three-region ensemble needs an interface");
    const WeightParams wp = make_weight_params(s.weights);
    const RegionTriple rt = make_regions(wp, s.R1.value_or(wp.R), s.R2.value_or(wp.R));
    const PulledBackRegions regions = pull_back_regions(base.interface->chart(s.chart_x, s.patch_radius), rt);
    const auto mesh = background_mesh(base, h);
    const std::string name = s.form == Form::gradient ? "three-region-gradient" : "three-region-value";
    const auto members = layered_members(base, seed, s.members, s.jump_min, s.jump_max, name);
    std::vector<VerificationReport> reports(members.size());
    if (solutions) solutions->assign(members.size(), {});
    parallel_for(members.size(), [&](std::size_t k) {
        DiscreteSolution sol = solve_dirichlet(mesh, members[k].problem);
        VerificationReport r = three_region_check(sol, regions, s.form);
        r.id = members[k].id;
        r.seed = seed;
        r.params["jump"] = members[k].jump;
        r.params["chart_x"] = s.chart_x;
        reports[k] = std::move(r);
        if (solutions) (*solutions)[k] = std::move(sol);
    });
    return reports;
}

std::vector<VerificationReport> three_sphere_ensemble(const Scenario& base, const ThreeSphereSettings& s, double h,
                                                      std::uint64_t seed, std::vector<DiscreteSolution>* solutions) {
    const auto mesh = background_mesh(base, h);
    const auto members = layered_members(base, seed, s.members, s.jump_min, s.jump_max, "three-sphere");
    std::vector<VerificationReport> reports(members.size());
    if (solutions) solutions->assign(members.size(), {});
    parallel_for(members.size(), [&](std::size_t k) {
        DiscreteSolution sol = solve_dirichlet(mesh, members[k].problem);
        VerificationReport r = three_sphere_check(sol, s.center, s.r1, s.r2, s.r3, s.theta);
        r.id = members[k].id;
        r.seed = seed;
        r.params["jump"] = members[k].jump;
        reports[k] = std::move(r);
        if (solutions) (*solutions)[k] = std::move(sol);
    });
    return reports;
}

std::vector<PropagationRecord> propagation_ensemble(const Scenario& base, const PropagationSettings& s, double h,
                                                    std::uint64_t seed) {
    const auto coarse = background_mesh(base, h);
    std::shared_ptr<const Mesh> fine;
    if (s.refine) fine = background_mesh(base, h / 2);
    const InterfaceCurve* iface = base.interface ? &*base.interface : nullptr;
    const std::vector<Vec2> centers = admissible_centers(*coarse, s.rho, s.spacing, iface);
    if (centers.empty()) throw Error(ErrorCode::geometry, "no admissible ball centres at this rho");
    const auto members = layered_members(base, seed, s.members, s.jump_min, s.jump_max, "propagation");
    std::vector<PropagationRecord> out(members.size());
    parallel_for(members.size(), [&](std::size_t k) {
        PropagationRecord r;
        r.id = members[k].id;
        r.jump = members[k].jump;
        r.coarse = propagation_constant(solve_dirichlet(coarse, members[k].problem), s.rho, centers, s.alpha);
        if (fine) {
            r.fine = propagation_constant(solve_dirichlet(fine, members[k].problem), s.rho, centers, s.alpha);
            r.relative_change = std::abs(r.coarse.constant - r.fine->constant) / r.fine->constant;
        }
        out[k] = std::move(r);
    });
    return out;
}

std::vector<CarlemanRecord> carleman_suite(const CarlemanSettings& s) {
    const WeightParams wp = make_weight_params(s.weights);
    if (s.tau_multipliers.empty()) throw Error(ErrorCode::config, "tau grid is empty");
    std::vector<double> taus;
    for (double m : s.tau_multipliers) {
        if (!(m >= 1.0)) throw Error(ErrorCode::config, "tau multipliers must be at least 1");
        taus.push_back(m * wp.tau0);
    }
    if (s.refinement < 2) throw Error(ErrorCode::config, "quadrature refinement factor must be at least 2");
    const auto pairs = standard_carleman_pairs(wp, s.A_plus, s.A_minus);
    for (const auto& pair : pairs) check_carleman_support(pair, wp);
    CarlemanOptions fine = s.options;
    fine.cells *= s.refinement;
    fine.trace_samples = (s.options.trace_samples - 1) * s.refinement + 1;
    std::vector<CarlemanRecord> out(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t k) {
        CarlemanRecord r;
        r.curve = carleman_ratio(pairs[k], wp, taus, s.options);
        r.refined = carleman_ratio(pairs[k], wp, taus, fine);
        r.stability = r.refined.max_ratio > 0.0
                          ? std::abs(r.curve.max_ratio - r.refined.max_ratio) / r.refined.max_ratio
                          : (r.curve.max_ratio == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        out[k] = std::move(r);
    });
    return out;
}

std::string family_fingerprint(const Scenario& base, double h, JumpType jump, SizeMode mode) {
    Json doc = base.document;
    doc.erase("inclusion");
    doc.erase("name");
    doc.erase("mesh_h");
    Json key;
    key["scenario"] = doc;
    key["mesh_h"] = h;
    key["jump"] = jump == JumpType::raise ? "raise" : "lower";
    key["mode"] = to_string(mode);
    return fnv1a_hex(dump_json(key));
}

std::vector<SizeMember> size_family(const Scenario& base, const SizeFamilySettings& s, double h, std::uint64_t seed) {
    if (!(s.r_min > 0.0 && s.r_max >= s.r_min)) throw Error(ErrorCode::config, "radius range must satisfy 0 < min <= max");
    if (!(s.contrast > 0.0)) throw Error(ErrorCode::config, "contrast must be positive");
    if (s.margin < 2.0 * h)
        throw Error(ErrorCode::config, "margin " + format_number(s.margin) + " is below 2h; the mesher cannot resolve it");
    const Box& d = base.domain;
    double floor_y = d.y0;
    if (base.interface)
        for (int i = 0; i <= 2000; ++i) floor_y = std::max(floor_y, base.interface->height(d.x0 + d.width() * i / 2000.0));
    const Problem background = base.problem(false);
    std::vector<SizeMember> out(static_cast<std::size_t>(s.members));
    parallel_for(out.size(), [&](std::size_t k) {
        Rng rng = Rng::for_member(seed, k);
        SizeMember m;
        m.radius = rng.uniform(s.r_min, s.r_max);
        const double r = m.radius;
        const double xlo = d.x0 + r + s.margin, xhi = d.x1 - r - s.margin;
        const double ylo = floor_y + r + s.margin, yhi = d.y1 - r - s.margin;
        if (xlo > xhi || ylo > yhi) throw Error(ErrorCode::config, "disk of radius " + format_number(r) + " does not fit above the interface");
        m.center = {rng.uniform(xlo, xhi), rng.uniform(ylo, yhi)};

        InclusionScenario inc;
        inc.shape = Shape::disk(m.center, r);
        const MatrixField plus = background.coefficient.plus;
        const double c = s.contrast;
        inc.a_hat = [plus, c](Vec2 p) { return c * plus(p); };
        inc.eta = s.eta;
        inc.zeta = s.zeta;
        inc.jump = s.jump;
        inc.d1 = s.margin;
        inc.h = s.fatness_h;
        InclusionCheckOptions opt;
        opt.seed = seed + k;
        opt.sample_count = 2000;
        opt.erosion_resolution = 512;
        opt.interface = base.interface ? &*base.interface : nullptr;
        opt.domain = &base.domain;
        const InclusionValidation v = validate_inclusion(inc, plus, opt);
        if (!v.jump_ok) throw Error(ErrorCode::config, "family member violates the jump condition: " + v.message);

        MeshSpec spec = base.mesh_spec(h, false);
        spec.inclusion = inc.shape;
        const auto mesh = std::make_shared<const Mesh>(build_mesh(spec));
        m.sample.id = member_id("disk", k);
        m.sample.power = measure_gap(mesh, background, inc);
        m.sample.true_size = inc.shape.area();
        m.sample.jump = s.jump;
        m.sample.fat = v.fat.value_or(true);
        if (!m.sample.fat) m.sample.violation = "fatness fails, |D_h|/|D| = " + format_number(v.fat_ratio);
        m.energy = energy_lemma_check(m.sample.power, s.jump, s.eta, s.zeta);
        out[k] = std::move(m);
    });
    return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string> experiment_commands = {
    "solve", "verify-three-region", "verify-three-sphere", "verify-carleman",
    "propagate", "size-estimate", "calibrate", "report"};

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::config, "config: " + msg); }

std::string resolve(const std::string& base, const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute() || base.empty()) return path;
    return (fs::path(base) / path).lexically_normal().string();
}

double num(const Json& j, const char* key, double def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number()) config_error(std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

int integer(const Json& j, const char* key, int def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number_integer()) config_error(std::string("'") + key + "' must be an integer");
    return j[key].get<int>();
}

Vec2 pair(const Json& j, const char* key, Vec2 def) {
    if (!j.contains(key)) return def;
    const Json& v = j[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        config_error(std::string("'") + key + "' must be a pair of numbers");
    return {v[0].get<double>(), v[1].get<double>()};
}

Mat2 matrix(const Json& j, const char* key, Mat2 def) {
    if (!j.contains(key)) return def;
    const Json& v = j[key];
    if (v.is_number()) return Mat2::identity(v.get<double>());
    if (v.is_array() && v.size() == 2 && v[0].is_array() && v[1].is_array() && v[0].size() == 2 && v[1].size() == 2)
        return {v[0][0].get<double>(), v[0][1].get<double>(), v[1][0].get<double>(), v[1][1].get<double>()};
    config_error(std::string("'") + key + "' must be a number or a 2x2 array of numbers");
}

void only_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) config_error("unknown key '" + it.key() + "' in " + where);
}

WeightConfig weights(const Json& params) {
    WeightConfig w;
    w.beta = 0.05;
    if (!params.contains("weights")) return w;
    const Json& j = params["weights"];
    only_keys(j, {"alpha_plus", "alpha_minus", "beta", "delta", "L", "r0", "delta0", "tau0", "r"}, "params.weights");
    w.alpha_plus = num(j, "alpha_plus", w.alpha_plus);
    w.alpha_minus = num(j, "alpha_minus", w.alpha_minus);
    w.beta = num(j, "beta", w.beta);
    w.delta = num(j, "delta", w.delta);
    w.separation = num(j, "L", w.separation);
    w.r0 = num(j, "r0", w.r0);
    w.delta0 = num(j, "delta0", w.delta0);
    w.tau0 = num(j, "tau0", w.tau0);
    if (j.contains("r")) w.r = num(j, "r", 0.0);
    return w;
}

std::pair<double, double> jump_range(const Json& params) {
    const Vec2 r = pair(params, "jump_range", {0.2, 5.0});
    return {r.x, r.y};
}

const Scenario& need_scenario(const ExperimentConfig& cfg) {
    if (!cfg.scenario) config_error("command '" + cfg.command + "' needs a scenario");
    return *cfg.scenario;
}

double need_h(const ExperimentConfig& cfg) {
    if (cfg.mesh_h) return *cfg.mesh_h;
    if (cfg.scenario && cfg.scenario->mesh_h) return *cfg.scenario->mesh_h;
    config_error("mesh_h is required (config, scenario or --mesh-h)");
}

std::uint64_t need_seed(const ExperimentConfig& cfg) {
    if (!cfg.seed) config_error("command '" + cfg.command + "' is an ensemble command and needs a seed");
    return *cfg.seed;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

std::string jsonl(const std::vector<Json>& lines) {
    std::string s;
    for (const auto& j : lines) s += dump_json(j) + "\n";
    return s;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Shared tail of the calibrated inequality commands.
RunResult finish_calibrated(const ExperimentConfig& cfg, std::vector<VerificationReport> reports, const std::string& extra) {
    const CalibrationSet cs = calibrate(std::move(reports), need_seed(cfg), cfg.safety, cfg.fit_fraction);
    std::vector<Json> lines;
    RunResult res;
    for (const auto& r : cs.reports) {
        lines.push_back(to_json(r));
        if (r.split == "holdout" && r.pass && !*r.pass) res.failing.push_back(r.id);
    }
    write_file_atomic(out_path(cfg, "reports.jsonl"), jsonl(lines));
    write_file_atomic(out_path(cfg, "summary.csv"), summary_csv_header() + summary_csv_row(cs));
    const double required = num(cfg.checks, "holdout_pass_rate", 1.0);
    res.exit_code = cs.holdout_pass_rate >= required ? 0 : 1;
    if (res.exit_code == 0) res.failing.clear();
    res.summary = cs.inequality + ": fit " + std::to_string(cs.fit.size()) + ", holdout " +
                  std::to_string(cs.holdout.size()) + ", fitted constant " + fmt(cs.constant) + ", safety " +
                  fmt(cs.safety) + ", holdout pass rate " + fmt(cs.holdout_pass_rate) + ", max holdout ratio " +
                  fmt(cs.max_holdout_ratio) + extra + "\n";
    return res;
}

RunResult run_solve(const ExperimentConfig& cfg) {
    const Scenario& sc = need_scenario(cfg);
    const double h = need_h(cfg);
    only_keys(cfg.checks, {"max_nodal_error", "l2_error", "power_discrepancy", "transmission_h0"}, "checks");
    const auto mesh = std::make_shared<const Mesh>(build_mesh(sc.mesh_spec(h, true)));
    const Problem problem = sc.problem(true);
    const DiscreteSolution sol = solve_dirichlet(mesh, problem);

    Json report;
    report["id"] = "solve-" + sc.name;
    report["scenario"] = sc.name;
    report["mesh_h"] = h;
    report["vertices"] = mesh->num_vertices();
    report["triangles"] = mesh->num_triangles();
    const MeshQuality q = mesh_quality(*mesh);
    report["min_angle_deg"] = q.min_angle_deg;
    report["max_diameter"] = q.max_diameter;
    report["method"] = sol.diagnostics.method;
    report["iterations"] = sol.diagnostics.iterations;
    report["residual"] = sol.diagnostics.residual;
    report["unknowns"] = sol.diagnostics.unknowns;
    std::map<std::string, double> measured;
    if (sc.exact) {
        double err = 0.0;
        for (std::size_t i = 0; i < mesh->num_vertices(); ++i)
            err = std::max(err, std::abs(sol.values[i] - sc.exact(mesh->vertices[i])));
        measured["max_nodal_error"] = err;
        measured["l2_error"] = l2_error(sol, sc.exact);
    }
    if (!problem.lower_order && !problem.source) {
        const PowerValues pw = power(sol, problem);
        report["power_volume"] = pw.volume;
        report["power_boundary"] = pw.boundary;
        measured["power_discrepancy"] = pw.discrepancy;
    }
    if (sc.interface) {
        const TransmissionData td = transmission_residuals(sol);
        report["transmission_h0"] = td.h0_l2;
        report["transmission_h1_l2"] = td.h1_l2;
        report["transmission_h1_weak"] = td.h1_weak;
        measured["transmission_h0"] = td.h0_l2;
    }
    for (const auto& [k, v] : measured) report[k] = v;

    RunResult res;
    Json checks = Json::object();
    for (auto it = cfg.checks.begin(); it != cfg.checks.end(); ++it) {
        const std::string key = it.key();
        if (!measured.count(key)) config_error("check '" + key + "' is not available for this scenario");
        const double limit = num(cfg.checks, key.c_str(), 0.0);
        const bool ok = measured[key] <= limit;
        checks[key] = {{"value", measured[key]}, {"limit", limit}, {"pass", ok}};
        if (!ok) res.failing.push_back(report["id"].get<std::string>() + ":" + key);
    }
    report["checks"] = checks;
    report["pass"] = res.failing.empty();
    res.exit_code = res.failing.empty() ? 0 : 1;

    std::ostringstream sol_csv, grad_csv, mesh_txt;
    write_solution_csv(sol, sol_csv);
    write_gradient_csv(sol, grad_csv);
    write_mesh(*mesh, mesh_txt);
    write_file_atomic(out_path(cfg, "solution.csv"), sol_csv.str());
    write_file_atomic(out_path(cfg, "gradients.csv"), grad_csv.str());
    write_file_atomic(out_path(cfg, "mesh.txt"), mesh_txt.str());
    write_file_atomic(out_path(cfg, "solve.json"), dump_json_pretty(report));
    res.summary = "solve " + sc.name + ": " + std::to_string(mesh->num_vertices()) + " vertices, " +
                  sol.diagnostics.method + ", residual " + fmt(sol.diagnostics.residual);
    for (const auto& [k, v] : measured) res.summary += ", " + k + " " + fmt(v);
    res.summary += "\n";
    return res;
}

RunResult run_three_region(const ExperimentConfig& cfg) {
    const Json& p = cfg.params;
    only_keys(p, {"weights", "R1", "R2", "R1_over_R", "R2_over_R", "chart_x", "patch_radius", "form", "jump_range"},
              "params");
    ThreeRegionSettings s;
    s.weights = weights(p);
    const double R = make_weight_params(s.weights).R;
    if (p.contains("R1") && p.contains("R1_over_R")) config_error("give R1 or R1_over_R, not both");
    if (p.contains("R2") && p.contains("R2_over_R")) config_error("give R2 or R2_over_R, not both");
    if (p.contains("R1")) s.R1 = num(p, "R1", 0.0);
    if (p.contains("R2")) s.R2 = num(p, "R2", 0.0);
    if (p.contains("R1_over_R")) s.R1 = num(p, "R1_over_R", 0.0) * R;
    if (p.contains("R2_over_R")) s.R2 = num(p, "R2_over_R", 0.0) * R;
    s.chart_x = num(p, "chart_x", s.chart_x);
    s.patch_radius = num(p, "patch_radius", s.patch_radius);
    const std::string form = p.value("form", std::string("gradient"));
    if (form != "gradient" && form != "value") config_error("params.form must be gradient or value");
    s.form = form == "gradient" ? Form::gradient : Form::value;
    std::tie(s.jump_min, s.jump_max) = jump_range(p);
    s.members = cfg.members;
    const WeightParams wp = make_weight_params(s.weights);
    const RegionTriple rt = make_regions(wp, s.R1.value_or(wp.R), s.R2.value_or(wp.R));
    RunResult res = finish_calibrated(
        cfg, three_region_ensemble(need_scenario(cfg), s, need_h(cfg), need_seed(cfg)),
        ", kappa1 " + fmt(rt.kappa1) + ", kappa2 " + fmt(rt.kappa2));
    if (!rt.warning.empty()) res.summary += "warning: " + rt.warning + "\n";
    return res;
}

RunResult run_three_sphere(const ExperimentConfig& cfg) {
    const Json& p = cfg.params;
    only_keys(p, {"center", "r1", "r2", "r3", "theta", "jump_range"}, "params");
    ThreeSphereSettings s;
    s.center = pair(p, "center", s.center);
    s.r1 = num(p, "r1", s.r1);
    s.r2 = num(p, "r2", s.r2);
    s.r3 = num(p, "r3", s.r3);
    s.theta = num(p, "theta", s.theta);
    std::tie(s.jump_min, s.jump_max) = jump_range(p);
    s.members = cfg.members;
    return finish_calibrated(cfg, three_sphere_ensemble(need_scenario(cfg), s, need_h(cfg), need_seed(cfg)),
                             ", theta " + fmt(s.theta));
}

RunResult run_propagate(const ExperimentConfig& cfg) {
    const Json& p = cfg.params;
    only_keys(p, {"rho", "spacing", "alpha", "jump_range", "refine"}, "params");
    only_keys(cfg.checks, {"max_relative_change"}, "checks");
    PropagationSettings s;
    s.rho = num(p, "rho", s.rho);
    s.spacing = num(p, "spacing", s.spacing);
    s.alpha = num(p, "alpha", s.alpha);
    std::tie(s.jump_min, s.jump_max) = jump_range(p);
    s.refine = p.value("refine", true);
    s.members = cfg.members;
    const double h = need_h(cfg);
    const std::uint64_t seed = need_seed(cfg);
    const auto records = propagation_ensemble(need_scenario(cfg), s, h, seed);
    const double tol = num(cfg.checks, "max_relative_change", 0.1);

    RunResult res;
    std::vector<Json> lines;
    double cmin = std::numeric_limits<double>::infinity(), worst = 0.0;
    for (const auto& r : records) {
        VerificationReport v;
        v.id = r.id;
        v.inequality = "propagation";
        v.lhs = r.coarse.constant * r.coarse.total_energy;
        v.m1 = v.m3 = r.coarse.total_energy;
        v.kappa1 = 0.0;
        v.kappa2 = 1.0;
        v.ratio = r.coarse.constant;
        v.mesh_h = h;
        v.seed = seed;
        v.params = {{"rho", s.rho},
                    {"jump", r.jump},
                    {"centers", static_cast<double>(r.coarse.centers)},
                    {"argmin_x", r.coarse.argmin.x},
                    {"argmin_y", r.coarse.argmin.y},
                    {"boundary_ratio", r.coarse.boundary_ratio},
                    {"alpha_prime", r.coarse.alpha_prime}};
        bool ok = r.coarse.constant > 0.0;
        if (r.fine) {
            v.params["constant_refined"] = r.fine->constant;
            v.params["relative_change"] = r.relative_change;
            ok = ok && r.relative_change <= tol;
            worst = std::max(worst, r.relative_change);
        }
        v.pass = ok;
        if (!ok) res.failing.push_back(r.id);
        cmin = std::min(cmin, r.coarse.constant);
        lines.push_back(to_json(v));
    }
    write_file_atomic(out_path(cfg, "reports.jsonl"), jsonl(lines));
    res.exit_code = res.failing.empty() ? 0 : 1;
    res.summary = "propagation rho " + fmt(s.rho) + ": members " + std::to_string(records.size()) + ", min C " +
                  fmt(cmin) + (s.refine ? ", max relative change under h -> h/2 " + fmt(worst) : std::string()) + "\n";
    return res;
}

RunResult run_carleman(const ExperimentConfig& cfg) {
    const Json& p = cfg.params;
    only_keys(p, {"weights", "A_plus", "A_minus", "tau_multipliers", "cells", "trace_samples", "refinement"}, "params");
    only_keys(cfg.checks, {"max_instability"}, "checks");
    CarlemanSettings s;
    s.weights = weights(p);
    s.A_plus = matrix(p, "A_plus", s.A_plus);
    s.A_minus = matrix(p, "A_minus", s.A_minus);
    if (p.contains("tau_multipliers")) s.tau_multipliers = p["tau_multipliers"].get<std::vector<double>>();
    s.options.cells = integer(p, "cells", s.options.cells);
    s.options.trace_samples = integer(p, "trace_samples", s.options.trace_samples);
    s.refinement = integer(p, "refinement", s.refinement);
    if (s.options.cells < 1 || s.options.trace_samples < 8) config_error("cells must be >= 1 and trace_samples >= 8");
    const double tol = num(cfg.checks, "max_instability", 0.2);
    const auto records = carleman_suite(s);

    RunResult res;
    std::vector<Json> lines, curves;
    double worst = 0.0;
    for (const auto& r : records) {
        VerificationReport v = carleman_report(r.curve);
        v.id = "carleman-" + r.curve.pair;
        v.seed = cfg.seed.value_or(0);
        v.params["max_ratio_refined"] = r.refined.max_ratio;
        v.params["stability"] = r.stability;
        v.params["cells"] = s.options.cells;
        v.pass = r.curve.finite && r.refined.finite && r.stability <= tol;
        if (!*v.pass) res.failing.push_back(v.id);
        worst = std::max(worst, r.stability);
        lines.push_back(to_json(v));
        Json c = to_json(r.curve);
        c["refined"] = to_json(r.refined);
        c["stability"] = r.stability;
        curves.push_back(c);
    }
    write_file_atomic(out_path(cfg, "reports.jsonl"), jsonl(lines));
    write_file_atomic(out_path(cfg, "curves.jsonl"), jsonl(curves));
    res.exit_code = res.failing.empty() ? 0 : 1;
    res.summary = "carleman: " + std::to_string(records.size()) + " pairs, worst max-ratio change under " +
                  std::to_string(s.refinement) + "x quadrature refinement " + fmt(worst) + "\n";
    return res;
}

SizeFamilySettings family_settings(const ExperimentConfig& cfg) {
    const Json& p = cfg.params;
    SizeFamilySettings s;
    s.members = cfg.members;
    const Vec2 radii = pair(p, "radius_range", {s.r_min, s.r_max});
    s.r_min = radii.x;
    s.r_max = radii.y;
    s.margin = num(p, "margin", s.margin);
    s.contrast = num(p, "contrast", s.contrast);
    s.eta = num(p, "eta", s.eta);
    s.zeta = num(p, "zeta", s.zeta);
    s.fatness_h = num(p, "fatness_h", s.fatness_h);
    const std::string jump = p.value("jump", std::string("raise"));
    if (jump != "raise" && jump != "lower") config_error("params.jump must be raise or lower");
    s.jump = jump == "raise" ? JumpType::raise : JumpType::lower;
    return s;
}

std::string archive_path(const ExperimentConfig& cfg) {
    return cfg.archive ? *cfg.archive : out_path(cfg, "size_calibration.json");
}

RunResult run_calibrate(const ExperimentConfig& cfg) {
    only_keys(cfg.params, {"radius_range", "margin", "contrast", "eta", "zeta", "fatness_h", "jump", "mode"}, "params");
    only_keys(cfg.checks, {"min_containment", "max_energy_spread"}, "checks");
    const Scenario& sc = need_scenario(cfg);
    const double h = need_h(cfg);
    const std::uint64_t seed = need_seed(cfg);
    const SizeFamilySettings s = family_settings(cfg);
    const SizeMode mode = size_mode_from_string(cfg.params.value("mode", std::string("fat")));
    const auto family = size_family(sc, s, h, seed);

    std::vector<SizeSample> samples;
    std::vector<EnergyLemmaRecord> energy;
    for (const auto& m : family) {
        samples.push_back(m.sample);
        energy.push_back(m.energy);
    }
    SizeCalibration cal = calibrate_size(samples, mode, seed, cfg.safety, cfg.fit_fraction);
    cal.fingerprint = family_fingerprint(sc, h, s.jump, mode);
    const EnergyLemmaSummary es = summarize_energy_lemma(energy);

    RunResult res;
    std::vector<Json> members, ledger;
    std::size_t held = 0, contained = 0;
    const std::set<std::string> fit(cal.fit_ids.begin(), cal.fit_ids.end());
    const std::set<std::string> hold(cal.holdout_ids.begin(), cal.holdout_ids.end());
    const std::string name = std::string("size-") + to_string(mode);
    for (const auto& m : family) {
        const SizeBoundsResult b = bound_size(m.sample.power, cal, m.sample.true_size);
        const std::string split = fit.count(m.sample.id) ? "fit" : hold.count(m.sample.id) ? "holdout" : "excluded";
        Json j;
        j["id"] = m.sample.id;
        j["split"] = split;
        j["center"] = {m.center.x, m.center.y};
        j["radius"] = m.radius;
        j["true_size"] = m.sample.true_size;
        j["fat"] = m.sample.fat;
        j["power"] = to_json(m.sample.power);
        j["lower"] = b.lower;
        j["upper"] = b.upper;
        j["contained"] = *b.contained;
        j["energy_rho"] = m.energy.rho;
        j["energy_sign_ok"] = m.energy.sign_ok;
        members.push_back(j);

        VerificationReport v;
        v.id = m.sample.id;
        v.inequality = name;
        v.lhs = m.sample.true_size;
        v.m1 = m.sample.power.normalized_gap;
        v.m3 = 1.0;
        v.kappa1 = 1.0 / b.p;
        v.ratio = interpolation_ratio(v.lhs, v.m1, 1.0, v.kappa1, 0.0, &v.violation_candidate);
        v.split = split;
        v.mesh_h = h;
        v.seed = seed;
        v.params = {{"radius", m.radius}, {"lower", b.lower}, {"upper", b.upper}};
        if (split == "holdout") {
            v.pass = *b.contained;
            ++held;
            if (*b.contained) ++contained;
            else res.failing.push_back(m.sample.id);
        }
        ledger.push_back(to_json(v));

        VerificationReport e;
        e.id = m.sample.id;
        e.inequality = "energy-lemma";
        e.lhs = std::abs(m.sample.power.gap);
        e.m1 = m.sample.power.inclusion_energy;
        e.m3 = 1.0;
        e.kappa1 = 1.0;
        e.ratio = m.energy.rho;
        e.pass = m.energy.sign_ok && std::isfinite(m.energy.rho);
        e.mesh_h = h;
        e.seed = seed;
        ledger.push_back(to_json(e));
    }
    const double containment = held ? static_cast<double>(contained) / static_cast<double>(held) : 0.0;
    const double min_containment = num(cfg.checks, "min_containment", 0.9);
    const double max_spread = num(cfg.checks, "max_energy_spread", 10.0);
    const bool energy_ok = es.all_finite && es.all_signs_ok && es.spread <= max_spread;
    if (!energy_ok) res.failing.push_back("energy-lemma");
    if (containment >= min_containment && energy_ok) res.failing.clear();
    res.exit_code = res.failing.empty() ? 0 : 1;

    Json archive = to_json(cal);
    archive["mesh_h"] = h;
    archive["seed"] = seed;
    archive["holdout_containment"] = containment;
    Json el;
    el["count"] = es.count;
    el["min_rho"] = es.min_rho;
    el["max_rho"] = es.max_rho;
    el["spread"] = es.spread;
    el["all_finite"] = es.all_finite;
    el["all_signs_ok"] = es.all_signs_ok;
    archive["energy_lemma"] = el;
    write_file_atomic(archive_path(cfg), dump_json_pretty(archive));
    write_file_atomic(out_path(cfg, "family.jsonl"), jsonl(members));
    write_file_atomic(out_path(cfg, "reports.jsonl"), jsonl(ledger));
    CalibrationSet row;
    row.inequality = name;
    row.fit.resize(cal.fit_ids.size());
    row.holdout.resize(cal.holdout_ids.size());
    row.constant = mode == SizeMode::fat ? cal.K2 : cal.K2_general;
    row.holdout_pass_rate = containment;
    for (const auto& j : ledger)
        if (j["inequality"] == name && j["split"] == "holdout")
            row.max_holdout_ratio = std::max(row.max_holdout_ratio, j["ratio"].get<double>());
    write_file_atomic(out_path(cfg, "summary.csv"), summary_csv_header() + summary_csv_row(row));

    res.summary = name + ": K1 " + fmt(cal.K1) + ", K2 " + fmt(cal.K2) + ", p " + fmt(cal.p) + ", K2' " +
                  fmt(cal.K2_general) + ", excluded " + std::to_string(cal.excluded.size()) +
                  ", holdout containment " + fmt(containment) + "\n" + "energy lemma: rho in [" + fmt(es.min_rho) +
                  ", " + fmt(es.max_rho) + "], spread " + fmt(es.spread) +
                  (es.all_signs_ok ? ", signs consistent" : ", SIGN MISMATCH") + "\n" +
                  "archive written to " + archive_path(cfg) + "\n";
    return res;
}

RunResult run_size_estimate(const ExperimentConfig& cfg) {
    only_keys(cfg.checks, {"containment"}, "checks");
    const Scenario& sc = need_scenario(cfg);
    if (!sc.inclusion) config_error("size-estimate needs a scenario with an inclusion to synthesise the measurement");
    const std::string path = archive_path(cfg);
    if (!fs::exists(path))
        config_error("calibration archive '" + path + "' not found; run calibrate first");
    const SizeCalibration cal = size_calibration_from_json(read_json_file(path));
    const double h = need_h(cfg);
    const std::string fp = family_fingerprint(sc, h, sc.inclusion->jump, cal.mode);
    if (fp != cal.fingerprint)
        config_error("calibration archive '" + path + "' belongs to a different scenario family (fingerprint " +
                     cal.fingerprint + ", scenario " + fp + ")");
    SizeCalibration use = cal;
    use.safety = cfg.safety;
    const auto mesh = std::make_shared<const Mesh>(build_mesh(sc.mesh_spec(h, true)));
    const PowerReport pr = measure_gap(mesh, sc.problem(false), *sc.inclusion);
    const SizeBoundsResult b = bound_size(pr, use, sc.inclusion->shape.area());
    Json j = to_json(b);
    j["archive"] = path;
    j["fingerprint"] = fp;
    j["safety"] = use.safety;
    write_file_atomic(out_path(cfg, "size_estimate.json"), dump_json_pretty(j));
    RunResult res;
    if (cfg.checks.value("containment", false) && !*b.contained) res.failing.push_back("size-estimate-" + sc.name);
    res.exit_code = res.failing.empty() ? 0 : 1;
    res.summary = "size-estimate " + sc.name + " (" + to_string(b.mode) + "): |D| in [" + fmt(b.lower) + ", " +
                  fmt(b.upper) + "], true " + fmt(*b.true_size) + ", normalized gap " + fmt(b.normalized_gap) + "\n";
    return res;
}

RunResult run_report(const ExperimentConfig& cfg) {
    const LedgerSummary s = aggregate_ledgers(cfg.ledgers);
    const std::string table = ledger_table(s);
    write_file_atomic(out_path(cfg, "report.txt"), table);
    write_file_atomic(out_path(cfg, "report.csv"), ledger_csv(s));
    RunResult res;
    res.summary = table;
    return res;
}

}  // namespace

ExperimentConfig parse_experiment_config(const Json& doc, const std::string& base_dir) {
    try {
        if (!doc.is_object()) config_error("top level must be an object");
        only_keys(doc,
                  {"version", "command", "scenario", "scenario_file", "seed", "mesh_h", "members", "fit_fraction",
                   "holdout_fraction", "safety", "out", "archive", "ledgers", "params", "checks", "comment"},
                  "config");
        if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<int>() != 1)
            config_error("'version' must be 1");
        ExperimentConfig c;
        c.base_dir = base_dir;
        if (doc.contains("command")) {
            c.command = doc["command"].get<std::string>();
            if (std::find(experiment_commands.begin(), experiment_commands.end(), c.command) == experiment_commands.end())
                config_error("unknown command '" + c.command + "'");
        }
        if (doc.contains("scenario") && doc.contains("scenario_file"))
            config_error("give either 'scenario' or 'scenario_file', not both");
        if (doc.contains("scenario")) c.scenario = parse_scenario(doc["scenario"]);
        if (doc.contains("scenario_file"))
            c.scenario = load_scenario(resolve(base_dir, doc["scenario_file"].get<std::string>()));
        if (doc.contains("seed")) {
            if (!doc["seed"].is_number_unsigned()) config_error("'seed' must be a non-negative integer");
            c.seed = doc["seed"].get<std::uint64_t>();
        }
        if (doc.contains("mesh_h")) {
            c.mesh_h = num(doc, "mesh_h", 0.0);
            if (!(*c.mesh_h > 0.0)) config_error("'mesh_h' must be positive");
        }
        c.members = integer(doc, "members", c.members);
        if (c.members < 1) config_error("'members' must be positive");
        c.fit_fraction = num(doc, "fit_fraction", c.fit_fraction);
        const double holdout = num(doc, "holdout_fraction", 1.0 - c.fit_fraction);
        if (!(c.fit_fraction > 0.0 && c.fit_fraction < 1.0) || std::abs(c.fit_fraction + holdout - 1.0) > 1e-12)
            config_error("fit_fraction and holdout_fraction must lie in (0, 1) and sum to 1");
        c.safety = num(doc, "safety", c.safety);
        if (!(c.safety >= 1.0)) config_error("'safety' must be at least 1");
        if (doc.contains("out")) c.out_dir = resolve(base_dir, doc["out"].get<std::string>());
        if (doc.contains("archive")) c.archive = resolve(base_dir, doc["archive"].get<std::string>());
        if (doc.contains("ledgers"))
            for (const auto& p : doc["ledgers"]) c.ledgers.push_back(resolve(base_dir, p.get<std::string>()));
        if (doc.contains("params")) {
            if (!doc["params"].is_object()) config_error("'params' must be an object");
            c.params = doc["params"];
        }
        if (doc.contains("checks")) {
            if (!doc["checks"].is_object()) config_error("'checks' must be an object");
            c.checks = doc["checks"];
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        config_error(e.what());
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    const std::string base = fs::path(path).parent_path().string();
    return parse_experiment_config(read_json_file(path), base);
}

void apply_overrides(ExperimentConfig& cfg, const RunOverrides& o) {
    if (o.command) cfg.command = *o.command;
    if (o.seed) cfg.seed = o.seed;
    if (o.mesh_h) {
        if (!(*o.mesh_h > 0.0)) config_error("--mesh-h must be positive");
        cfg.mesh_h = o.mesh_h;
    }
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.safety) {
        if (!(*o.safety >= 1.0)) config_error("--safety must be at least 1");
        cfg.safety = *o.safety;
    }
    for (const auto& l : o.ledgers) cfg.ledgers.push_back(l);
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    try {
        if (cfg.command.empty()) config_error("no command given");
        const bool ensemble = cfg.command == "verify-three-region" || cfg.command == "verify-three-sphere" ||
                              cfg.command == "propagate" || cfg.command == "calibrate";
        if (ensemble && cfg.members < 10 && cfg.command != "propagate")
            config_error("'" + cfg.command + "' needs at least 10 members");
        if (cfg.command == "solve") return run_solve(cfg);
        if (cfg.command == "verify-three-region") return run_three_region(cfg);
        if (cfg.command == "verify-three-sphere") return run_three_sphere(cfg);
        if (cfg.command == "verify-carleman") return run_carleman(cfg);
        if (cfg.command == "propagate") return run_propagate(cfg);
        if (cfg.command == "size-estimate") return run_size_estimate(cfg);
        if (cfg.command == "calibrate") return run_calibrate(cfg);
        if (cfg.command == "report") return run_report(cfg);
        config_error("unknown command '" + cfg.command + "'");
    } catch (const nlohmann::json::exception& e) {
        config_error(e.what());
    }
}

}  // namespace tlab
