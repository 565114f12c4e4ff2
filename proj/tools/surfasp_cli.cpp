// Command-line driver: `solve` reproduces the iteration/error tables at desk
// scale, `mesh` writes the reference and projected mesh hierarchies in the
// text format, `probe-kappa` estimates preconditioned extreme eigenvalues.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "surfasp/surfasp.hpp"

using namespace surfasp;

namespace {

const std::map<std::string, SurfaceKind> surface_names = {
    {"torus", SurfaceKind::torus}, {"s3", SurfaceKind::s3}, {"sphere2", SurfaceKind::sphere2}};
const std::map<std::string, Discretization> disc_names = {
    {"p1", Discretization::p1}, {"cr", Discretization::cr}, {"dg", Discretization::dg}};
const std::map<std::string, PrecondKind> precond_names = {{"fasp-add", PrecondKind::fasp_add},
                                                          {"fasp-mul", PrecondKind::fasp_mul},
                                                          {"two-add", PrecondKind::two_add},
                                                          {"two-mul", PrecondKind::two_mul},
                                                          {"jacobi", PrecondKind::jacobi}};

template <int D>
void write_hierarchy(const ImplicitSurface<D>& surface, SurfaceMesh<D> initial, int levels,
                     const std::string& dir) {
    const auto h = build_hierarchy<D>(surface, std::move(initial), levels + 1);
    std::filesystem::create_directories(dir);
    for (int j = 0; j < h.num_levels(); ++j) {
        for (int which = 0; which < 2; ++which) {
            const auto path = dir + "/" + (which ? "true_" : "reference_") + std::to_string(j) + ".txt";
            std::ofstream os(path, std::ios::binary);
            if (!os) throw std::runtime_error("cannot open " + path);
            write_mesh(os, which ? h.true_meshes[j] : h.reference_meshes[j]);
        }
    }
    std::printf("wrote %d levels to %s\n", h.num_levels(), dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multilevel auxiliary-space preconditioners for surface finite elements"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    std::string surface = "torus", disc = "p1", out;
    std::vector<std::string> preconds = {"fasp-mul"};
    int levels = 3;
    bool timing = false, force = false;

    auto* solve = app.add_subcommand("solve", "assemble and solve across refinement levels, write a CSV table");
    solve->add_option("--surface", surface)->check(CLI::IsMember({"torus", "s3", "sphere2"}));
    solve->add_option("--disc", disc)->check(CLI::IsMember({"p1", "cr", "dg"}));
    solve->add_option("--c", cfg.c)->check(CLI::IsMember({0, 1}));
    solve->add_option("--levels", levels)->check(CLI::PositiveNumber);
    solve->add_option("--precond", preconds, "preconditioners to run (repeatable)")
        ->check(CLI::IsMember({"fasp-add", "fasp-mul", "two-add", "two-mul", "jacobi"}));
    solve->add_option("--alpha", cfg.alpha, "dg penalty (0 = default: 10 in d=2, 20 in d=3)");
    solve->add_option("--tol", cfg.tol);
    solve->add_option("--maxit", cfg.max_iterations);
    solve->add_option("--out", out, "CSV output path");
    solve->add_flag("--timing", timing, "record wall times in the CSV (breaks byte determinism)");
    solve->add_flag("--force", force, "override the desk-scale cell cap");
    solve->add_flag("--kappa", cfg.compute_kappa, "estimate condition numbers per level");

    auto* mesh_cmd = app.add_subcommand("mesh", "write the reference and projected mesh hierarchy");
    std::string mesh_surface = "torus", mesh_dir = ".";
    int mesh_levels = 2;
    mesh_cmd->add_option("--surface", mesh_surface)->check(CLI::IsMember({"torus", "s3", "sphere2"}));
    mesh_cmd->add_option("--levels", mesh_levels)->check(CLI::NonNegativeNumber);
    mesh_cmd->add_option("--out", mesh_dir, "output directory")->required();

    auto* probe = app.add_subcommand("probe-kappa", "Lanczos extreme-eigenvalue estimates per level");
    int steps = 40;
    probe->add_option("--surface", surface)->check(CLI::IsMember({"torus", "s3", "sphere2"}));
    probe->add_option("--disc", disc)->check(CLI::IsMember({"p1", "cr", "dg"}));
    probe->add_option("--c", cfg.c)->check(CLI::IsMember({0, 1}));
    probe->add_option("--levels", levels)->check(CLI::PositiveNumber);
    probe->add_option("--precond", preconds)
        ->check(CLI::IsMember({"fasp-add", "fasp-mul", "two-add", "two-mul", "jacobi"}));
    probe->add_option("--alpha", cfg.alpha);
    probe->add_option("--steps", steps)->check(CLI::PositiveNumber);
    probe->add_flag("--force", force);

    CLI11_PARSE(app, argc, argv);

    try {
        if (mesh_cmd->parsed()) {
            const SurfaceKind kind = surface_names.at(mesh_surface);
            if (kind == SurfaceKind::s3) {
                UnitSphere<3> s3;
                write_hierarchy<3>(s3, initial_mesh_s3(), mesh_levels, mesh_dir);
            } else if (kind == SurfaceKind::torus) {
                Torus torus;
                write_hierarchy<2>(torus, initial_mesh_torus(), mesh_levels, mesh_dir);
            } else {
                UnitSphere<2> s2;
                write_hierarchy<2>(s2, initial_mesh_sphere2(), mesh_levels, mesh_dir);
            }
            return 0;
        }

        cfg.surface = surface_names.at(surface);
        cfg.disc = disc_names.at(disc);
        cfg.levels = levels;
        cfg.record_timing = timing;
        cfg.override_cell_cap = force;
        cfg.output_path = out;
        cfg.preconditioners.clear();
        for (const auto& name : preconds) cfg.preconditioners.push_back(precond_names.at(name));

        if (probe->parsed()) {
            const auto rows = probe_kappa(cfg, steps);
            std::printf("%-8s %-10s %14s %14s %10s\n", "N", "precond", "lambda_min", "lambda_max", "kappa");
            for (const auto& r : rows)
                std::printf("%-8ld %-10s %14.6g %14.6g %10.6g\n", r.n_cells, r.precond.c_str(),
                            r.lambda_min, r.lambda_max, r.lambda_max / r.lambda_min);
            return 0;
        }

        const auto rows = run_experiment(cfg);
        auto opt = [](const std::optional<double>& v) {
            char buf[32];
            if (!v) return std::string("-");
            std::snprintf(buf, sizeof buf, "%.6g", *v);
            return std::string(buf);
        };
        std::printf("%-8s %-10s %6s %12s %12s %8s %10s\n", "N", "precond", "iters", "resid", "l2err",
                    "eoc", "kappa");
        for (const auto& r : rows)
            std::printf("%-8ld %-10s %6d %12.4e %12s %8s %10s\n", r.n_cells, r.precond.c_str(),
                        r.iterations, r.final_residual, opt(r.l2_error).c_str(), opt(r.eoc).c_str(),
                        opt(r.kappa).c_str());
        for (const auto& r : rows)
            if (!r.converged) {
                std::fprintf(stderr, "non-convergence at N=%ld (%s)\n", r.n_cells, r.precond.c_str());
                return 2;
            }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
