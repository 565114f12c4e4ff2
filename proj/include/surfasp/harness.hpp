#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "surfasp/assembly.hpp"
#include "surfasp/geometry.hpp"
#include "surfasp/krylov.hpp"
#include "surfasp/mesh.hpp"
#include "surfasp/precond.hpp"
#include "surfasp/quadrature.hpp"
#include "surfasp/transfer.hpp"

namespace surfasp {

enum class SurfaceKind { torus, s3, sphere2 };
enum class PrecondKind { fasp_add, fasp_mul, two_add, two_mul, jacobi };

inline std::string to_string(SurfaceKind s) {
    switch (s) {
        case SurfaceKind::torus: return "torus";
        case SurfaceKind::s3: return "s3";
        default: return "sphere2";
    }
}

inline std::string to_string(PrecondKind p) {
    switch (p) {
        case PrecondKind::fasp_add: return "fasp-add";
        case PrecondKind::fasp_mul: return "fasp-mul";
        case PrecondKind::two_add: return "two-add";
        case PrecondKind::two_mul: return "two-mul";
        default: return "jacobi";
    }
}

struct ExperimentConfig {
    SurfaceKind surface = SurfaceKind::torus;
    Discretization disc = Discretization::p1;
    int c = 1;
    int levels = 3;  // solve on refinement levels 1..levels
    std::vector<PrecondKind> preconditioners = {PrecondKind::fasp_mul};
    double alpha = 0.0;  // 0 picks the default: 10 for d = 2, 20 for d = 3
    double tol = 1e-6;
    int max_iterations = 400;
    std::string output_path;
    bool record_timing = false;     // when false the CSV seconds column is 0 (byte-deterministic output)
    bool override_cell_cap = false;
    bool compute_kappa = false;
    int smoothing_steps = 2;
};

struct ResultRow {
    long n_cells = 0;
    std::string precond;
    int iterations = 0;
    double final_residual = 0.0;
    std::optional<double> l2_error;
    std::optional<double> eoc;
    std::optional<double> kappa;
    double seconds = 0.0;
    bool converged = false;
};

/// u(x) = x1 + 2 x2 + 3 x3 + x4; an eigenfunction of the surface Laplacian on
/// the unit 3-sphere with -Delta u = 3 u, mean zero.
inline double exact_solution_s3(const Vec<4>& x) { return x[0] + 2.0 * x[1] + 3.0 * x[2] + x[3]; }

namespace detail {

template <int D>
double eval_local(const DofMap<D>& dofmap, const SurfaceMesh<D>& mesh, const Vector& u, int cell,
                  const std::array<double, D + 1>& bary) {
    double s = 0.0;
    for (int i = 0; i <= D; ++i) {
        const double phi = dofmap.kind == Discretization::cr ? 1.0 - D * bary[i] : bary[i];
        s += u[dofmap.global(mesh, cell, i)] * phi;
    }
    return s;
}

}  // namespace detail

/// || u o Phi - u_h ||_{L2(M_h)} by a degree >= 4 quadrature rule. For c = 0
/// both the exact pullback and the discrete solution are reduced to zero mean
/// on M_h before comparison (the solve returns a mean-free representative).
template <int D>
double l2_error(const SurfaceMesh<D>& mesh, const DofMap<D>& dofmap, const Vector& u_h,
                const std::function<double(const Vec<D + 1>&)>& u_exact,
                const ImplicitSurface<D>& surface, int c) {
    const auto& rule = simplex_rule<D>(4);
    double area = 0.0, int_u = 0.0, int_uh = 0.0;
    std::vector<double> volume(mesh.num_cells());
    for (int k = 0; k < mesh.num_cells(); ++k) {
        volume[k] = cell_geometry(mesh, k).volume;
        for (const auto& node : rule) {
            Vec<D + 1> x{};
            for (int i = 0; i <= D; ++i) x += node.bary[i] * mesh.vertices[mesh.cells[k][i]];
            const double w = node.weight * volume[k];
            area += w;
            int_u += w * u_exact(closest_point(surface, x));
            int_uh += w * detail::eval_local(dofmap, mesh, u_h, k, node.bary);
        }
    }
    const double shift_u = c == 0 ? int_u / area : 0.0;
    const double shift_uh = c == 0 ? int_uh / area : 0.0;
    double err2 = 0.0;
    for (int k = 0; k < mesh.num_cells(); ++k)
        for (const auto& node : rule) {
            Vec<D + 1> x{};
            for (int i = 0; i <= D; ++i) x += node.bary[i] * mesh.vertices[mesh.cells[k][i]];
            const double diff = (u_exact(closest_point(surface, x)) - shift_u) -
                                (detail::eval_local(dofmap, mesh, u_h, k, node.bary) - shift_uh);
            err2 += node.weight * volume[k] * diff * diff;
        }
    return std::sqrt(err2);
}

/// CSV export: header "N,precond,iters,resid,l2err,eoc,kappa,seconds", numbers
/// with 6 significant digits, empty fields for absent optionals. Byte output
/// is deterministic for fixed rows.
inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("emit_csv: cannot open " + path);
    os << "N,precond,iters,resid,l2err,eoc,kappa,seconds\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        os << r.n_cells << ',' << r.precond << ',' << r.iterations << ',' << num(r.final_residual) << ',';
        if (r.l2_error) os << num(*r.l2_error);
        os << ',';
        if (r.eoc) os << num(*r.eoc);
        os << ',';
        if (r.kappa) os << num(*r.kappa);
        os << ',' << num(r.seconds) << '\n';
    }
    if (!os) throw std::runtime_error("emit_csv: write failure on " + path);
}

struct KappaRow {
    long n_cells = 0;
    std::string precond;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

namespace detail {

inline long cell_cap(SurfaceKind s) {
    switch (s) {
        case SurfaceKind::torus: return 196608;
        case SurfaceKind::s3: return 65536;
        default: return 131072;
    }
}

template <int D>
struct ExperimentSpace {
    std::unique_ptr<ImplicitSurface<D>> surface;
    SurfaceMesh<D> initial;
};

template <int D>
ExperimentSpace<D> make_space(SurfaceKind kind);

template <>
inline ExperimentSpace<2> make_space<2>(SurfaceKind kind) {
    ExperimentSpace<2> s;
    if (kind == SurfaceKind::torus) {
        s.surface = std::make_unique<Torus>();
        s.initial = initial_mesh_torus();
    } else {
        s.surface = std::make_unique<UnitSphere<2>>();
        s.initial = initial_mesh_sphere2();
    }
    return s;
}

template <>
inline ExperimentSpace<3> make_space<3>(SurfaceKind kind) {
    if (kind != SurfaceKind::s3) throw std::invalid_argument("make_space: not a 3-dimensional surface");
    ExperimentSpace<3> s;
    s.surface = std::make_unique<UnitSphere<3>>();
    s.initial = initial_mesh_s3();
    return s;
}

template <int D>
std::function<double(const Vec<D + 1>&)> default_forcing(SurfaceKind kind, int c);

template <>
inline std::function<double(const Vec<3>&)> default_forcing<2>(SurfaceKind, int) {
    return [](const Vec<3>& x) { return x[0] + 2.0 * x[1] + 3.0 * x[2]; };
}

template <>
inline std::function<double(const Vec<4>&)> default_forcing<3>(SurfaceKind, int c) {
    // -Delta u + c u = (3 + c) u for the S^3 eigenfunction above
    return [c](const Vec<4>& x) { return (3.0 + c) * exact_solution_s3(x); };
}

/// Smallest-eigenvalue probe of the coarsest-level operator; rejects a penalty
/// parameter that fails the coercivity requirement numerically.
inline void coercivity_self_check(const SparseOperator& A, const Vector& kernel, double alpha) {
    IdentityPreconditioner id(A.rows());
    const int steps = std::min(A.rows() - (kernel.empty() ? 0 : 1), 160);
    const SpectrumEstimate est = lanczos_extremes(A, id, steps, kernel);
    if (!(est.lambda_min > 1e-10 * est.lambda_max))
        throw std::invalid_argument("DG operator fails the coercivity self-check at alpha = " +
                                    std::to_string(alpha) + " (smallest eigenvalue estimate " +
                                    std::to_string(est.lambda_min) + ")");
}

template <int D>
std::shared_ptr<Preconditioner> build_preconditioner(PrecondKind kind, const ExperimentConfig& cfg,
                                                     const AssembledProblem<D>& problem,
                                                     const SurfaceMesh<D>& mesh,
                                                     const MeshHierarchy<D>& hierarchy,
                                                     std::shared_ptr<const MultilevelOperators> ml,
                                                     int level, double alpha_eff) {
    const KernelPolicy policy = cfg.c == 0 ? KernelPolicy::project_mean : KernelPolicy::none;
    const SparseOperator mass = cfg.c == 0 ? problem.M : SparseOperator{};
    const Vector kernel = problem.kernel;

    switch (kind) {
        case PrecondKind::jacobi:
            return std::make_shared<JacobiPreconditioner>(problem.A, policy, mass, kernel);
        case PrecondKind::fasp_add:
        case PrecondKind::fasp_mul: {
            if (cfg.disc != Discretization::p1)
                throw std::invalid_argument("fasp preconditioners apply to the p1 discretization; "
                                            "use two-add/two-mul for cr and dg");
            const CycleKind cycle = kind == PrecondKind::fasp_add ? CycleKind::additive : CycleKind::multiplicative;
            return std::make_shared<FaspSurfacePreconditioner>(std::move(ml), cycle, level, cfg.smoothing_steps,
                                                               surface_transfer_p1(hierarchy, level), policy,
                                                               mass, kernel);
        }
        case PrecondKind::two_add:
        case PrecondKind::two_mul: {
            if (cfg.disc == Discretization::p1)
                throw std::invalid_argument("two-level preconditioners apply to cr/dg; use fasp-add/fasp-mul for p1");
            // smoothing and residual updates run on the SPD c = 1 form
            SparseOperator fine_spd = cfg.c == 1 ? problem.A
                                                 : assemble_operator(mesh, cfg.disc, /*c=*/1, alpha_eff);
            TransferOperator inclusion =
                cfg.disc == Discretization::cr ? inclusion_cr(mesh) : inclusion_dg(mesh);
            auto coarse = std::make_shared<FaspSurfacePreconditioner>(
                std::move(ml), CycleKind::multiplicative, level, cfg.smoothing_steps,
                surface_transfer_p1(hierarchy, level));
            if (kind == PrecondKind::two_add)
                return std::make_shared<TwoLevelAdditivePreconditioner>(fine_spd, std::move(inclusion),
                                                                        std::move(coarse), policy, mass, kernel);
            return std::make_shared<TwoLevelMultiplicativePreconditioner>(
                std::move(fine_spd), std::move(inclusion), std::move(coarse), cfg.smoothing_steps, policy,
                mass, kernel);
        }
    }
    throw std::invalid_argument("unknown preconditioner kind");
}

template <int D>
std::vector<KappaRow> probe_kappa_impl(const ExperimentConfig& cfg, int steps) {
    ExperimentSpace<D> space = make_space<D>(cfg.surface);
    const double alpha_eff = cfg.alpha > 0.0 ? cfg.alpha : (D == 2 ? 10.0 : 20.0);
    const auto f = default_forcing<D>(cfg.surface, cfg.c);
    MeshHierarchy<D> hierarchy = build_hierarchy(*space.surface, std::move(space.initial), cfg.levels + 1);
    auto ml = std::make_shared<const MultilevelOperators>(make_reference_operators(hierarchy));
    std::vector<KappaRow> rows;
    for (int level = 1; level <= cfg.levels; ++level) {
        const SurfaceMesh<D>& mesh = hierarchy.true_meshes[level];
        const AssembledProblem<D> problem =
            assemble_problem(mesh, cfg.disc, cfg.c, f, *space.surface, alpha_eff);
        for (const PrecondKind kind : cfg.preconditioners) {
            auto B = build_preconditioner<D>(kind, cfg, problem, mesh, hierarchy, ml, level, alpha_eff);
            const SpectrumEstimate est = lanczos_extremes(problem.A, *B, steps, problem.kernel);
            rows.push_back({mesh.num_cells(), to_string(kind), est.lambda_min, est.lambda_max});
        }
    }
    return rows;
}

template <int D>
std::vector<ResultRow> run_experiment_impl(const ExperimentConfig& cfg) {
    ExperimentSpace<D> space = make_space<D>(cfg.surface);
    const long finest_cells = static_cast<long>(space.initial.num_cells()) << (D * cfg.levels);
    if (finest_cells > cell_cap(cfg.surface) && !cfg.override_cell_cap)
        throw std::invalid_argument("finest level would have " + std::to_string(finest_cells) +
                                    " cells, above the default cap for " + to_string(cfg.surface) +
                                    "; pass the cap override to proceed");

    const double alpha_eff = cfg.alpha > 0.0 ? cfg.alpha : (D == 2 ? 10.0 : 20.0);
    const auto f = default_forcing<D>(cfg.surface, cfg.c);

    MeshHierarchy<D> hierarchy = build_hierarchy(*space.surface, std::move(space.initial), cfg.levels + 1);
    auto ml = std::make_shared<const MultilevelOperators>(make_reference_operators(hierarchy));

    if (cfg.disc == Discretization::dg) {
        const SparseOperator A0 = assemble_dg(hierarchy.true_meshes[0], cfg.c, alpha_eff);
        const Vector kernel0 = cfg.c == 0 ? Vector(A0.rows(), 1.0) : Vector{};
        coercivity_self_check(A0, kernel0, alpha_eff);
    }

    std::vector<ResultRow> rows;
    std::vector<std::optional<double>> previous_error(cfg.preconditioners.size());
    for (int level = 1; level <= cfg.levels; ++level) {
        const SurfaceMesh<D>& mesh = hierarchy.true_meshes[level];
        const AssembledProblem<D> problem =
            assemble_problem(mesh, cfg.disc, cfg.c, f, *space.surface, alpha_eff);
        for (std::size_t pi = 0; pi < cfg.preconditioners.size(); ++pi) {
            const PrecondKind kind = cfg.preconditioners[pi];
            auto B = build_preconditioner<D>(kind, cfg, problem, mesh, hierarchy, ml, level, alpha_eff);
            PcgResult result = pcg_solve(problem.A, *B, problem.b, {cfg.tol, cfg.max_iterations},
                                         problem.kernel, &problem.M);
            ResultRow row;
            row.n_cells = mesh.num_cells();
            row.precond = to_string(kind);
            row.iterations = result.report.iterations;
            row.final_residual = result.report.residual_history.back();
            row.converged = result.report.converged;
            row.seconds = cfg.record_timing ? result.report.wall_time : 0.0;
            if (cfg.surface == SurfaceKind::s3) {
                if constexpr (D == 3) {
                    row.l2_error = l2_error<3>(mesh, problem.dofmap, result.solution, exact_solution_s3,
                                               *space.surface, cfg.c);
                    if (previous_error[pi]) row.eoc = std::log2(*previous_error[pi] / *row.l2_error);
                    previous_error[pi] = row.l2_error;
                }
            }
            if (cfg.compute_kappa) {
                const SpectrumEstimate est = lanczos_extremes(problem.A, *B, 40, problem.kernel);
                row.kappa = est.lambda_max / est.lambda_min;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace detail

/// Runs one experiment: builds the hierarchy, assembles the chosen
/// discretization at every level from 1 to cfg.levels, solves with each
/// requested preconditioner, and (optionally) writes the CSV table.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.levels < 1) throw std::invalid_argument("run_experiment: levels must be >= 1");
    if (cfg.disc == Discretization::dg && cfg.alpha < 0.0)
        throw std::invalid_argument("run_experiment: alpha must be positive for dg");
    if (cfg.preconditioners.empty()) throw std::invalid_argument("run_experiment: no preconditioners");
    std::vector<ResultRow> rows = cfg.surface == SurfaceKind::s3 ? detail::run_experiment_impl<3>(cfg)
                                                                 : detail::run_experiment_impl<2>(cfg);
    if (!cfg.output_path.empty()) emit_csv(rows, cfg.output_path);
    return rows;
}

/// Extreme-eigenvalue probe of the preconditioned operators across levels,
/// without solving.
inline std::vector<KappaRow> probe_kappa(const ExperimentConfig& cfg, int steps = 40) {
    if (cfg.levels < 1) throw std::invalid_argument("probe_kappa: levels must be >= 1");
    if (cfg.preconditioners.empty()) throw std::invalid_argument("probe_kappa: no preconditioners");
    return cfg.surface == SurfaceKind::s3 ? detail::probe_kappa_impl<3>(cfg, steps)
                                          : detail::probe_kappa_impl<2>(cfg, steps);
}

}  // namespace surfasp
