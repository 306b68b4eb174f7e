#ifndef TLAB_TLAB_H
#define TLAB_TLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(TLAB_BUILDING_LIBRARY)
#define TLAB_API __attribute__((visibility("default")))
#else
#define TLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tlab_status {
    TLAB_OK = 0,
    TLAB_CHECK_FAILED = 1,
    TLAB_INVALID_CONFIG = 2,
    TLAB_SOLVER_FAILED = 3,
    TLAB_INVALID_ARGUMENT = 4,
    TLAB_ADMISSIBILITY = 5,
    TLAB_GEOMETRY = 6,
    TLAB_VALIDATION = 7,
    TLAB_IO = 8,
    TLAB_INTERNAL = 9
} tlab_status;

typedef struct tlab_config tlab_config;
typedef struct tlab_result tlab_result;
typedef struct tlab_scenario tlab_scenario;
typedef struct tlab_mesh tlab_mesh;
typedef struct tlab_solution tlab_solution;

/* Message of the last failing call on this thread, "" if none. */
TLAB_API const char* tlab_last_error(void);
TLAB_API const char* tlab_version(void);
/* Process exit code for a status: 0, 1, 3 for solver failures, 2 otherwise. */
TLAB_API int tlab_exit_code(tlab_status status);

/* Experiment configs. Relative paths inside a config file resolve against its directory. */
TLAB_API tlab_status tlab_config_load(const char* path, tlab_config** out);
TLAB_API tlab_status tlab_config_parse(const char* json, const char* base_dir, tlab_config** out);
TLAB_API void tlab_config_free(tlab_config* cfg);
TLAB_API tlab_status tlab_config_set_command(tlab_config* cfg, const char* command);
TLAB_API tlab_status tlab_config_set_seed(tlab_config* cfg, uint64_t seed);
TLAB_API tlab_status tlab_config_set_mesh_h(tlab_config* cfg, double h);
TLAB_API tlab_status tlab_config_set_out_dir(tlab_config* cfg, const char* dir);
TLAB_API tlab_status tlab_config_set_safety(tlab_config* cfg, double safety);
TLAB_API tlab_status tlab_config_add_ledger(tlab_config* cfg, const char* path);

/* Runs the configured command. TLAB_OK and TLAB_CHECK_FAILED both produce a result. */
TLAB_API tlab_status tlab_run(const tlab_config* cfg, tlab_result** out);
TLAB_API void tlab_result_free(tlab_result* r);
TLAB_API const char* tlab_result_summary(const tlab_result* r);
TLAB_API size_t tlab_result_failing_count(const tlab_result* r);
TLAB_API const char* tlab_result_failing_id(const tlab_result* r, size_t i);

/* Scenarios, meshes and solutions. */
TLAB_API tlab_status tlab_scenario_load(const char* path, tlab_scenario** out);
TLAB_API tlab_status tlab_scenario_parse(const char* json, tlab_scenario** out);
TLAB_API void tlab_scenario_free(tlab_scenario* s);

TLAB_API tlab_status tlab_mesh_build(const tlab_scenario* s, double h, tlab_mesh** out);
TLAB_API void tlab_mesh_free(tlab_mesh* m);
TLAB_API size_t tlab_mesh_vertex_count(const tlab_mesh* m);
TLAB_API size_t tlab_mesh_triangle_count(const tlab_mesh* m);
TLAB_API tlab_status tlab_mesh_quality(const tlab_mesh* m, double* min_angle_deg, double* max_diameter);
TLAB_API tlab_status tlab_mesh_write(const tlab_mesh* m, const char* path);

/* with_inclusion != 0 replaces A by A_hat on the inclusion. */
TLAB_API tlab_status tlab_solve(const tlab_scenario* s, const tlab_mesh* m, int with_inclusion, tlab_solution** out);
TLAB_API void tlab_solution_free(tlab_solution* sol);
/* Copies min(n, vertex count) nodal values; returns the vertex count. */
TLAB_API size_t tlab_solution_values(const tlab_solution* sol, double* values, size_t n);
TLAB_API tlab_status tlab_solution_power(const tlab_solution* sol, double* volume, double* boundary);
/* Max nodal error against the scenario's exact solution. */
TLAB_API tlab_status tlab_solution_max_error(const tlab_solution* sol, double* err);

/* Pure functions. */
typedef struct tlab_weight_config {
    double alpha_plus, alpha_minus, beta, delta, L, r0, delta0, tau0;
} tlab_weight_config;

TLAB_API tlab_weight_config tlab_weight_defaults(void);
/* Derives r and R; TLAB_ADMISSIBILITY names the violated constraint. */
TLAB_API tlab_status tlab_weight_radii(const tlab_weight_config* w, double* r, double* R);
TLAB_API tlab_status tlab_weight_phi(const tlab_weight_config* w, double x, double y, double* out);
TLAB_API tlab_status tlab_h_half_seminorm(const double* f, size_t n, double spacing, int closed, double* out);

#ifdef __cplusplus
}
#endif

#endif
