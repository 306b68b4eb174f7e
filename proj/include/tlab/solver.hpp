#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tlab/fields.hpp"
#include "tlab/mesh.hpp"

namespace tlab {

struct BoundaryData {
    ScalarField phi = [](Vec2) { return 0.0; };
    unsigned dirichlet_sides = all_sides;  // remaining sides carry zero conormal flux
};

/// div(A grad u) + W.grad u + V u = -f in the domain, u = phi on the Dirichlet sides.
/// With an inclusion, A is replaced by A_hat on triangles tagged `inclusion`.
struct Problem {
    PiecewiseCoefficient coefficient;
    std::optional<LowerOrderTerms> lower_order;
    std::optional<InclusionScenario> inclusion;
    ScalarField source;  // f, empty for the homogeneous equation
    BoundaryData boundary;
};

struct SolverOptions {
    double tolerance = 1e-10;
    std::size_t direct_limit = 100000;  // unknowns; above this, preconditioned CG
    int max_iterations = 20000;
};

struct SolveDiagnostics {
    std::string method;
    int iterations = 0;
    double residual = 0.0;  // |K u - f| / |f| on the free nodes
    std::vector<double> residual_history;
    std::size_t unknowns = 0;
    std::size_t dirichlet_nodes = 0;
};

struct DiscreteSolution {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> values;       // per vertex
    std::vector<Vec2> gradients;      // per triangle
    std::vector<Mat2> coefficients;   // per triangle, the averaged A used in assembly
    BoundaryData boundary;
    SolveDiagnostics diagnostics;
};

/// Element-averaged conductivity (3-point rule) for every triangle.
std::vector<Mat2> element_coefficients(const Mesh& mesh, const Problem& problem);

/// Throws Error(solver_diverged) or Error(indefinite_system).
DiscreteSolution solve_dirichlet(std::shared_ptr<const Mesh> mesh, const Problem& problem,
                                 const SolverOptions& opt = {});

const std::vector<Vec2>& gradient_field(const DiscreteSolution& sol);

/// Nodal interpolant of a field.
std::vector<double> interpolate(const Mesh& mesh, const ScalarField& f);

/// Per-triangle gradients of a nodal vector.
std::vector<Vec2> element_gradients(const Mesh& mesh, const std::vector<double>& values);

/// L2 norm of u_h - exact with a 7-point rule per triangle.
double l2_error(const DiscreteSolution& sol, const ScalarField& exact);

void write_solution_csv(const DiscreteSolution& sol, std::ostream& os);
void write_gradient_csv(const DiscreteSolution& sol, std::ostream& os);

}  // namespace tlab
