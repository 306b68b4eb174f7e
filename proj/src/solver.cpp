#include "tlab/solver.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace tlab {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct Element {
    std::array<Vec2, 3> p;
    std::array<Vec2, 3> grad;  // gradients of the barycentric coordinates
    double area;
};

Element element(const Mesh& mesh, std::size_t t) {
    const auto& tri = mesh.triangles[t];
    Element e;
    for (int k = 0; k < 3; ++k) e.p[k] = mesh.vertices[tri[k]];
    e.area = 0.5 * cross(e.p[1] - e.p[0], e.p[2] - e.p[0]);
    for (int k = 0; k < 3; ++k) {
        const Vec2 a = e.p[(k + 1) % 3], b = e.p[(k + 2) % 3];
        e.grad[k] = (1.0 / (2.0 * e.area)) * Vec2{a.y - b.y, b.x - a.x};
    }
    return e;
}

// interior 3-point rule, exact for quadratics
constexpr double q3[3][3] = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};

Vec2 at(const Element& e, const double* bary) {
    return bary[0] * e.p[0] + bary[1] * e.p[1] + bary[2] * e.p[2];
}

const MatrixField& field_for(const Problem& problem, Subdomain tag) {
    if (tag == Subdomain::minus) return problem.coefficient.minus;
    if (tag == Subdomain::inclusion && problem.inclusion) return problem.inclusion->a_hat;
    return problem.coefficient.plus;
}

double residual_norm(const SpMat& K, const Vec& u, const Vec& b) {
    const double r = (K * u - b).norm();
    const double nb = b.norm();
    return nb > 0.0 ? r / nb : r;
}

}  // namespace

std::vector<Mat2> element_coefficients(const Mesh& mesh, const Problem& problem) {
    std::vector<Mat2> out(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Element e = element(mesh, t);
        const MatrixField& A = field_for(problem, mesh.tags[t]);
        Mat2 sum;
        for (const auto& b : q3) sum = sum + A(at(e, b));
        out[t] = (1.0 / 3.0) * sum;
    }
    return out;
}

DiscreteSolution solve_dirichlet(std::shared_ptr<const Mesh> mesh_ptr, const Problem& problem,
                                 const SolverOptions& opt) {
    if (!mesh_ptr) throw Error(ErrorCode::invalid_argument, "no mesh");
    const Mesh& mesh = *mesh_ptr;
    const std::size_t nv = mesh.num_vertices();
    if (!problem.boundary.phi) throw Error(ErrorCode::invalid_argument, "missing boundary data");

    DiscreteSolution sol;
    sol.mesh = mesh_ptr;
    sol.boundary = problem.boundary;
    sol.coefficients = element_coefficients(mesh, problem);
    sol.values.assign(nv, 0.0);

    std::vector<int> free_index(nv, -1);
    std::size_t n_free = 0;
    for (std::size_t v = 0; v < nv; ++v) {
        if (mesh.boundary[v] & problem.boundary.dirichlet_sides) {
            sol.values[v] = problem.boundary.phi(mesh.vertices[v]);
            if (!std::isfinite(sol.values[v]))
                throw Error(ErrorCode::invalid_argument, "boundary data is not finite");
            ++sol.diagnostics.dirichlet_nodes;
        } else {
            free_index[v] = static_cast<int>(n_free++);
        }
    }
    sol.diagnostics.unknowns = n_free;

    if (n_free > 0) {
        const bool symmetric = !problem.lower_order.has_value();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(9 * mesh.num_triangles());
        Vec rhs = Vec::Zero(static_cast<Eigen::Index>(n_free));
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
            const Element e = element(mesh, t);
            const Mat2& A = sol.coefficients[t];
            double Ke[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) Ke[i][j] = e.area * dot(e.grad[i], A * e.grad[j]);
            if (problem.lower_order) {
                for (const auto& b : q3) {
                    const Vec2 x = at(e, b);
                    const Vec2 W = problem.lower_order->W(x);
                    const double V = problem.lower_order->V(x);
                    const double w = e.area / 3.0;
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j) Ke[i][j] -= w * (dot(W, e.grad[j]) + V * b[j]) * b[i];
                }
            }
            double Fe[3] = {0.0, 0.0, 0.0};
            if (problem.source)
                for (const auto& b : q3) {
                    const double f = problem.source(at(e, b));
                    for (int i = 0; i < 3; ++i) Fe[i] += e.area / 3.0 * f * b[i];
                }
            const auto& tri = mesh.triangles[t];
            for (int i = 0; i < 3; ++i) {
                const int gi = free_index[tri[i]];
                if (gi < 0) continue;
                rhs[gi] += Fe[i];
                for (int j = 0; j < 3; ++j) {
                    const int gj = free_index[tri[j]];
                    if (gj >= 0) trip.emplace_back(gi, gj, Ke[i][j]);
                    else rhs[gi] -= Ke[i][j] * sol.values[tri[j]];
                }
            }
        }
        SpMat K(static_cast<Eigen::Index>(n_free), static_cast<Eigen::Index>(n_free));
        K.setFromTriplets(trip.begin(), trip.end());
        K.makeCompressed();

        Vec u;
        auto& diag = sol.diagnostics;
        if (!symmetric) {
            diag.method = "sparse-lu";
            Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
            lu.compute(K);
            if (lu.info() != Eigen::Success)
                throw Error(ErrorCode::indefinite_system, "singular system: " + lu.lastErrorMessage());
            u = lu.solve(rhs);
            diag.iterations = 1;
        } else if (n_free <= opt.direct_limit) {
            diag.method = "sparse-ldlt";
            Eigen::SimplicialLDLT<SpMat> ldlt;
            ldlt.compute(K);
            if (ldlt.info() != Eigen::Success)
                throw Error(ErrorCode::indefinite_system, "factorization failed");
            if ((ldlt.vectorD().array() <= 0.0).any())
                throw Error(ErrorCode::indefinite_system, "stiffness matrix is not positive definite");
            u = ldlt.solve(rhs);
            diag.iterations = 1;
            diag.residual_history.push_back(residual_norm(K, u, rhs));
            if (diag.residual_history.back() > opt.tolerance) {
                u += ldlt.solve(rhs - K * u);
                ++diag.iterations;
            }
        } else {
            diag.method = "pcg-ichol";
            Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
            cg.setTolerance(opt.tolerance);
            cg.compute(K);
            if (cg.info() != Eigen::Success)
                throw Error(ErrorCode::indefinite_system, "incomplete Cholesky failed");
            u = Vec::Zero(static_cast<Eigen::Index>(n_free));
            while (diag.iterations < opt.max_iterations) {
                cg.setMaxIterations(std::min(50, opt.max_iterations - diag.iterations));
                u = cg.solveWithGuess(rhs, u);
                diag.iterations += static_cast<int>(cg.iterations());
                diag.residual_history.push_back(cg.error());
                if (cg.info() == Eigen::Success) break;
                if (cg.iterations() == 0) break;
            }
        }
        diag.residual = residual_norm(K, u, rhs);
        if (!std::isfinite(diag.residual) || diag.residual > opt.tolerance) {
            std::string hist;
            char buf[32];
            for (double r : diag.residual_history) {
                std::snprintf(buf, sizeof buf, " %.3g", r);
                hist += buf;
            }
            char msg[96];
            std::snprintf(msg, sizeof msg, "linear solve did not converge: residual %.3g after %d iterations;",
                          diag.residual, diag.iterations);
            throw Error(ErrorCode::solver_diverged, msg + std::string(" history") + hist);
        }
        for (std::size_t v = 0; v < nv; ++v)
            if (free_index[v] >= 0) sol.values[v] = u[free_index[v]];
    }
    sol.gradients = element_gradients(mesh, sol.values);
    return sol;
}

const std::vector<Vec2>& gradient_field(const DiscreteSolution& sol) { return sol.gradients; }

std::vector<double> interpolate(const Mesh& mesh, const ScalarField& f) {
    std::vector<double> out(mesh.num_vertices());
    for (std::size_t v = 0; v < out.size(); ++v) out[v] = f(mesh.vertices[v]);
    return out;
}

std::vector<Vec2> element_gradients(const Mesh& mesh, const std::vector<double>& values) {
    std::vector<Vec2> out(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Element e = element(mesh, t);
        const auto& tri = mesh.triangles[t];
        out[t] = values[tri[0]] * e.grad[0] + values[tri[1]] * e.grad[1] + values[tri[2]] * e.grad[2];
    }
    return out;
}

double l2_error(const DiscreteSolution& sol, const ScalarField& exact) {
    // 7-point degree-5 rule
    static const double a1 = 0.059715871789770, b1 = 0.470142064105115;
    static const double a2 = 0.797426985353087, b2 = 0.101286507323456;
    static const double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
    static const double pts[7][4] = {{1.0 / 3, 1.0 / 3, 1.0 / 3, w0}, {a1, b1, b1, w1}, {b1, a1, b1, w1},
                                     {b1, b1, a1, w1}, {a2, b2, b2, w2}, {b2, a2, b2, w2},
                                     {b2, b2, a2, w2}};
    const Mesh& mesh = *sol.mesh;
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Element e = element(mesh, t);
        const auto& tri = mesh.triangles[t];
        for (const auto& q : pts) {
            const double uh = q[0] * sol.values[tri[0]] + q[1] * sol.values[tri[1]] + q[2] * sol.values[tri[2]];
            const double d = uh - exact(at(e, q));
            sum += q[3] * e.area * d * d;
        }
    }
    return std::sqrt(sum);
}

void write_solution_csv(const DiscreteSolution& sol, std::ostream& os) {
    char buf[128];
    os << "vertex,x,y,value\n";
    for (std::size_t v = 0; v < sol.values.size(); ++v) {
        const Vec2 p = sol.mesh->vertices[v];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", v, p.x, p.y, sol.values[v]);
        os << buf;
    }
}

void write_gradient_csv(const DiscreteSolution& sol, std::ostream& os) {
    static const char* names[] = {"minus", "plus", "inclusion"};
    char buf[160];
    os << "triangle,cx,cy,gx,gy,subdomain\n";
    for (std::size_t t = 0; t < sol.gradients.size(); ++t) {
        const Vec2 c = sol.mesh->centroid(t);
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%s\n", t, c.x, c.y, sol.gradients[t].x,
                      sol.gradients[t].y, names[static_cast<int>(sol.mesh->tags[t])]);
        os << buf;
    }
}

}  // namespace tlab
