#include "tlab/tlab.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tlab/experiments.hpp"
#include "tlab/report_io.hpp"

struct tlab_config {
    tlab::ExperimentConfig cfg;
};

struct tlab_result {
    tlab::RunResult result;
};

struct tlab_scenario {
    tlab::Scenario scenario;
};

struct tlab_mesh {
    std::shared_ptr<const tlab::Mesh> mesh;
};

struct tlab_solution {
    tlab::DiscreteSolution sol;
    tlab::Problem problem;
    tlab::ScalarField exact;
};

namespace {

thread_local std::string last_error;

tlab_status status_of(tlab::ErrorCode c) {
    using tlab::ErrorCode;
    switch (c) {
        case ErrorCode::config: return TLAB_INVALID_CONFIG;
        case ErrorCode::solver_diverged:
        case ErrorCode::indefinite_system: return TLAB_SOLVER_FAILED;
        case ErrorCode::invalid_argument: return TLAB_INVALID_ARGUMENT;
        case ErrorCode::admissibility: return TLAB_ADMISSIBILITY;
        case ErrorCode::geometry: return TLAB_GEOMETRY;
        case ErrorCode::validation: return TLAB_VALIDATION;
        case ErrorCode::io: return TLAB_IO;
    }
    return TLAB_INTERNAL;
}

template <class F>
tlab_status guarded(F&& f) {
    try {
        last_error.clear();
        return f();
    } catch (const tlab::Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const nlohmann::json::exception& e) {
        last_error = e.what();
        return TLAB_INVALID_CONFIG;
    } catch (const std::exception& e) {
        last_error = e.what();
        return TLAB_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return TLAB_INTERNAL;
    }
}

tlab_status null_arg(const char* what) {
    last_error = std::string(what) + " is null";
    return TLAB_INVALID_ARGUMENT;
}

tlab::WeightParams raw_weights(const tlab_weight_config& w) {
    tlab::WeightParams p;
    p.alpha_plus = w.alpha_plus;
    p.alpha_minus = w.alpha_minus;
    p.beta = w.beta;
    p.delta = w.delta;
    p.separation = w.L;
    p.r0 = w.r0;
    p.delta0 = w.delta0;
    p.tau0 = w.tau0;
    return p;
}

}  // namespace

extern "C" {

const char* tlab_last_error(void) { return last_error.c_str(); }

const char* tlab_version(void) { return "1.0.0"; }

int tlab_exit_code(tlab_status status) {
    switch (status) {
        case TLAB_OK: return 0;
        case TLAB_CHECK_FAILED: return 1;
        case TLAB_SOLVER_FAILED: return 3;
        default: return 2;
    }
}

tlab_status tlab_config_load(const char* path, tlab_config** out) {
    if (!path || !out) return null_arg("path or out");
    return guarded([&] {
        *out = new tlab_config{tlab::load_experiment_config(path)};
        return TLAB_OK;
    });
}

tlab_status tlab_config_parse(const char* json, const char* base_dir, tlab_config** out) {
    if (!json || !out) return null_arg("json or out");
    return guarded([&] {
        tlab::Json doc;
        try {
            doc = tlab::Json::parse(json);
        } catch (const nlohmann::json::exception& e) {
            throw tlab::Error(tlab::ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
        }
        *out = new tlab_config{tlab::parse_experiment_config(doc, base_dir ? base_dir : "")};
        return TLAB_OK;
    });
}

void tlab_config_free(tlab_config* cfg) { delete cfg; }

tlab_status tlab_config_set_command(tlab_config* cfg, const char* command) {
    if (!cfg || !command) return null_arg("config or command");
    cfg->cfg.command = command;
    return TLAB_OK;
}

tlab_status tlab_config_set_seed(tlab_config* cfg, uint64_t seed) {
    if (!cfg) return null_arg("config");
    cfg->cfg.seed = seed;
    return TLAB_OK;
}

tlab_status tlab_config_set_mesh_h(tlab_config* cfg, double h) {
    if (!cfg) return null_arg("config");
    return guarded([&] {
        tlab::RunOverrides o;
        o.mesh_h = h;
        tlab::apply_overrides(cfg->cfg, o);
        return TLAB_OK;
    });
}

tlab_status tlab_config_set_out_dir(tlab_config* cfg, const char* dir) {
    if (!cfg || !dir) return null_arg("config or dir");
    cfg->cfg.out_dir = dir;
    return TLAB_OK;
}

tlab_status tlab_config_set_safety(tlab_config* cfg, double safety) {
    if (!cfg) return null_arg("config");
    return guarded([&] {
        tlab::RunOverrides o;
        o.safety = safety;
        tlab::apply_overrides(cfg->cfg, o);
        return TLAB_OK;
    });
}

tlab_status tlab_config_add_ledger(tlab_config* cfg, const char* path) {
    if (!cfg || !path) return null_arg("config or path");
    cfg->cfg.ledgers.emplace_back(path);
    return TLAB_OK;
}

tlab_status tlab_run(const tlab_config* cfg, tlab_result** out) {
    if (!cfg || !out) return null_arg("config or out");
    return guarded([&] {
        auto* r = new tlab_result{tlab::run_experiment(cfg->cfg)};
        *out = r;
        if (r->result.exit_code != 0) {
            last_error = "checks failed";
            return TLAB_CHECK_FAILED;
        }
        return TLAB_OK;
    });
}

void tlab_result_free(tlab_result* r) { delete r; }

const char* tlab_result_summary(const tlab_result* r) { return r ? r->result.summary.c_str() : ""; }

size_t tlab_result_failing_count(const tlab_result* r) { return r ? r->result.failing.size() : 0; }

const char* tlab_result_failing_id(const tlab_result* r, size_t i) {
    if (!r || i >= r->result.failing.size()) return nullptr;
    return r->result.failing[i].c_str();
}

tlab_status tlab_scenario_load(const char* path, tlab_scenario** out) {
    if (!path || !out) return null_arg("path or out");
    return guarded([&] {
        *out = new tlab_scenario{tlab::load_scenario(path)};
        return TLAB_OK;
    });
}

tlab_status tlab_scenario_parse(const char* json, tlab_scenario** out) {
    if (!json || !out) return null_arg("json or out");
    return guarded([&] {
        tlab::Json doc;
        try {
            doc = tlab::Json::parse(json);
        } catch (const nlohmann::json::exception& e) {
            throw tlab::Error(tlab::ErrorCode::config, std::string("scenario is not valid JSON: ") + e.what());
        }
        *out = new tlab_scenario{tlab::parse_scenario(doc)};
        return TLAB_OK;
    });
}

void tlab_scenario_free(tlab_scenario* s) { delete s; }

tlab_status tlab_mesh_build(const tlab_scenario* s, double h, tlab_mesh** out) {
    if (!s || !out) return null_arg("scenario or out");
    return guarded([&] {
        if (!(h > 0.0)) throw tlab::Error(tlab::ErrorCode::invalid_argument, "h must be positive");
        *out = new tlab_mesh{std::make_shared<const tlab::Mesh>(tlab::build_mesh(s->scenario.mesh_spec(h, true)))};
        return TLAB_OK;
    });
}

void tlab_mesh_free(tlab_mesh* m) { delete m; }

size_t tlab_mesh_vertex_count(const tlab_mesh* m) { return m ? m->mesh->num_vertices() : 0; }

size_t tlab_mesh_triangle_count(const tlab_mesh* m) { return m ? m->mesh->num_triangles() : 0; }

tlab_status tlab_mesh_quality(const tlab_mesh* m, double* min_angle_deg, double* max_diameter) {
    if (!m) return null_arg("mesh");
    const tlab::MeshQuality q = tlab::mesh_quality(*m->mesh);
    if (min_angle_deg) *min_angle_deg = q.min_angle_deg;
    if (max_diameter) *max_diameter = q.max_diameter;
    return TLAB_OK;
}

tlab_status tlab_mesh_write(const tlab_mesh* m, const char* path) {
    if (!m || !path) return null_arg("mesh or path");
    return guarded([&] {
        std::ostringstream os;
        tlab::write_mesh(*m->mesh, os);
        tlab::write_file_atomic(path, os.str());
        return TLAB_OK;
    });
}

tlab_status tlab_solve(const tlab_scenario* s, const tlab_mesh* m, int with_inclusion, tlab_solution** out) {
    if (!s || !m || !out) return null_arg("scenario, mesh or out");
    return guarded([&] {
        if (with_inclusion && !s->scenario.inclusion)
            throw tlab::Error(tlab::ErrorCode::invalid_argument, "scenario has no inclusion");
        tlab::Problem p = s->scenario.problem(with_inclusion != 0);
        tlab::DiscreteSolution sol = tlab::solve_dirichlet(m->mesh, p);
        *out = new tlab_solution{std::move(sol), std::move(p), s->scenario.exact};
        return TLAB_OK;
    });
}

void tlab_solution_free(tlab_solution* sol) { delete sol; }

size_t tlab_solution_values(const tlab_solution* sol, double* values, size_t n) {
    if (!sol) return 0;
    const auto& v = sol->sol.values;
    if (values)
        for (size_t i = 0; i < n && i < v.size(); ++i) values[i] = v[i];
    return v.size();
}

tlab_status tlab_solution_power(const tlab_solution* sol, double* volume, double* boundary) {
    if (!sol) return null_arg("solution");
    return guarded([&] {
        const tlab::PowerValues pw = tlab::power(sol->sol, sol->problem);
        if (volume) *volume = pw.volume;
        if (boundary) *boundary = pw.boundary;
        return TLAB_OK;
    });
}

tlab_status tlab_solution_max_error(const tlab_solution* sol, double* err) {
    if (!sol || !err) return null_arg("solution or err");
    if (!sol->exact) {
        last_error = "scenario has no exact solution";
        return TLAB_INVALID_ARGUMENT;
    }
    const tlab::Mesh& mesh = *sol->sol.mesh;
    double e = 0.0;
    for (size_t i = 0; i < mesh.num_vertices(); ++i)
        e = std::max(e, std::abs(sol->sol.values[i] - sol->exact(mesh.vertices[i])));
    *err = e;
    return TLAB_OK;
}

tlab_weight_config tlab_weight_defaults(void) {
    const tlab::WeightConfig w;
    return {w.alpha_plus, w.alpha_minus, w.beta, w.delta, w.separation, w.r0, w.delta0, w.tau0};
}

tlab_status tlab_weight_radii(const tlab_weight_config* w, double* r, double* R) {
    if (!w) return null_arg("weights");
    return guarded([&] {
        tlab::WeightConfig c;
        c.alpha_plus = w->alpha_plus;
        c.alpha_minus = w->alpha_minus;
        c.beta = w->beta;
        c.delta = w->delta;
        c.separation = w->L;
        c.r0 = w->r0;
        c.delta0 = w->delta0;
        c.tau0 = w->tau0;
        const tlab::WeightParams p = tlab::make_weight_params(c);
        if (r) *r = p.r;
        if (R) *R = p.R;
        return TLAB_OK;
    });
}

tlab_status tlab_weight_phi(const tlab_weight_config* w, double x, double y, double* out) {
    if (!w || !out) return null_arg("weights or out");
    *out = tlab::weight_phi(raw_weights(*w), x, y);
    return TLAB_OK;
}

tlab_status tlab_h_half_seminorm(const double* f, size_t n, double spacing, int closed, double* out) {
    if (!f || !out) return null_arg("samples or out");
    return guarded([&] {
        *out = tlab::h_half_seminorm(std::span<const double>(f, n), spacing, closed != 0);
        return TLAB_OK;
    });
}

}  // extern "C"
