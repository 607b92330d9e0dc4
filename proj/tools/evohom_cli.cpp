#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "evohom/self_check.hpp"
#include "evohom/study.hpp"

using namespace evohom;
namespace fs = std::filesystem;

namespace {

/// Writes to stdout and, when open, to the run log.
class Tee : public std::streambuf {
public:
    Tee(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

protected:
    int overflow(int c) override
    {
        if (c == EOF) {
            return 0;
        }
        a_->sputc(static_cast<char>(c));
        if (b_ != nullptr) {
            b_->sputc(static_cast<char>(c));
        }
        return c;
    }
    int sync() override
    {
        a_->pubsync();
        if (b_ != nullptr) {
            b_->pubsync();
        }
        return 0;
    }

private:
    std::streambuf* a_;
    std::streambuf* b_;
};

StudyConfig load(const std::string& path, const std::string& out)
{
    StudyConfig c = path.empty() ? parse_config_string("") : parse_config(path);
    if (!out.empty()) {
        c.output.dir = out;
    }
    for (const auto& w : c.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    return c;
}

std::string time_tag(double t)
{
    std::string s = detail::format_real(t);
    for (auto& ch : s) {
        if (ch == '.') {
            ch = 'p';
        }
    }
    return s;
}

int cmd_solve(const StudyConfig& c, int N, bool hom, const std::string& save)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto prob = hom ? homogenised_problem(c.rho, c.T) : rough_problem(N, c.rho, c.T);
    const auto d = study_discretisation(c, N);
    const SpatialProblem sp(prob, d.n, d.p);
    RunOptions opt;
    opt.loads = study_loads(sp);
    const auto sol = run(prob, sp, d, opt);
    std::cout << (hom ? "homogenised" : "rough") << " problem, N=" << N << " n=" << d.n << " p=" << d.p
              << " q=" << d.q << " tau=" << d.tau << " slabs=" << sol.slab_count() << "\n"
              << "unknowns per time node: " << sol.dim_u() + sol.dim_v() << "\n"
              << "E_sup(U) = " << e_sup(sol, sp.blocks) << "\nE_Q(U) = " << e_q(sol, sp.blocks) << "\n"
              << "solved in " << detail::seconds_since(t0) << " s\n";
    if (!save.empty()) {
        save_solution(save, sol, header_of(sol, c.rho, hom ? "hom" : "rough", hom ? 0 : N));
        std::cout << "saved " << save << "\n";
    }
    return 0;
}

int cmd_reference(StudyConfig c)
{
    if (c.reference.checkpoint_dir.empty()) {
        c.reference.checkpoint_dir = (fs::path(c.output.dir) / "references").string();
    }
    (void)solve_reference(c, hom_reference(c), &std::cout);
    for (int N : c.N_list) {
        (void)solve_reference(c, rough_reference(c, N), &std::cout);
    }
    return 0;
}

int cmd_study(const StudyConfig& c, int threads)
{
    fs::create_directories(c.output.dir);
    std::ofstream logfile(fs::path(c.output.dir) / c.output.log);
    Tee tee(std::cout.rdbuf(), logfile ? logfile.rdbuf() : nullptr);
    std::ostream log(&tee);
    log << "study: N_list=";
    for (int N : c.N_list) {
        log << N << " ";
    }
    log << "p=" << c.p << " q=" << c.q << " rho=" << c.rho << " T=" << c.T << " reference n=" << c.reference_cells()
        << " p=" << c.reference.degree << " q=" << c.reference.time_degree << " slabs=" << c.reference_time_cells()
        << "\n";
    log.flush();
    const auto table = run_study(c, &log, threads);
    const auto path = fs::path(c.output.dir) / c.output.table;
    write_text(path, table.to_csv());
    log << "table written to " << path.string() << "\n" << table.to_csv();
    log.flush();
    return 0;
}

int cmd_snapshot(const StudyConfig& c)
{
    auto export_all = [&](const ProblemData& prob, int N, const std::string& label) {
        const auto d = study_discretisation(c, N);
        const SpatialProblem sp(prob, d.n, d.p);
        RunOptions opt;
        opt.loads = study_loads(sp);
        const auto sol = run(prob, sp, d, opt);
        for (double t : c.output.snapshot_times) {
            const auto stem = fs::path(c.output.dir) / (label + "_t" + time_tag(t));
            (void)export_snapshot(sol, sp, t, c.output.raster, stem);
            std::cout << "wrote " << stem.string() << ".vtk and .csv\n";
        }
    };
    for (int N : c.N_list) {
        export_all(rough_problem(N, c.rho, c.T), N, "rough_N" + std::to_string(N));
    }
    export_all(homogenised_problem(c.rho, c.T), c.N_list.back(), "hom");
    return 0;
}

int cmd_check(std::uint64_t seed)
{
    bool ok = true;
    for (const auto& r : run_property_checks(seed)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Space-time mixed finite elements for a change-of-type evolutionary problem"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config, out;
    int threads = 1;
    std::uint64_t seed = 1;
    app.add_option("--config", config, "INI configuration file");
    app.add_option("--out", out, "output directory (overrides [output] dir)");
    app.add_option("--threads", threads, "worker threads for study rows")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "seed for randomised property checks");

    auto* solve = app.add_subcommand("solve", "solve one problem at the study resolution h = tau = 1/(2N)");
    int N = 8;
    bool hom = false;
    std::string save;
    solve->add_option("--N", N, "number of checkerboard cells per axis (even)");
    solve->add_flag("--hom", hom, "solve the homogenised problem instead");
    solve->add_option("--save", save, "write the solution checkpoint to this file");
    auto* reference = app.add_subcommand("reference", "solve and checkpoint all reference solutions");
    auto* study = app.add_subcommand("study", "run the convergence study and write the error table");
    auto* snapshot = app.add_subcommand("snapshot", "export u at the configured times");
    auto* check = app.add_subcommand("check", "run the property checks");

    CLI11_PARSE(app, argc, argv);
    try {
        if (check->parsed()) {
            return cmd_check(seed);
        }
        const auto c = load(config, out);
        if (solve->parsed()) {
            if (N < 2 || N % 2 != 0) {
                throw ConfigError("--N must be a positive even integer");
            }
            return cmd_solve(c, N, hom, save);
        }
        if (reference->parsed()) {
            return cmd_reference(c);
        }
        if (study->parsed()) {
            return cmd_study(c, threads);
        }
        if (snapshot->parsed()) {
            return cmd_snapshot(c);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
