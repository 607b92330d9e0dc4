#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "evohom/checkpoint.hpp"
#include "evohom/error_metrics.hpp"
#include "evohom/slab_solver.hpp"

namespace evohom {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReferenceSettings {
    int degree = 3;
    int time_degree = 1;
    int cells = 0;      ///< 0: four times the finest study mesh
    int time_cells = 0; ///< 0: T times the space cells
    std::string checkpoint_dir; ///< empty: no checkpoints
};

struct OutputSettings {
    std::string dir = ".";
    std::string table = "table.csv";
    std::string log = "run.log";
    std::vector<double> snapshot_times{0.025, 0.5, 1.0, 1.5};
    int raster = 128;
};

struct StudyConfig {
    std::vector<int> N_list{2, 4, 8, 16};
    int p = 2;
    int q = 1;
    double rho = 1.0;
    double T = 1.5;
    ReferenceSettings reference;
    OutputSettings output;
    std::vector<std::string> warnings;

    /// h = tau = 1/(2N).
    [[nodiscard]] static int study_cells(int N) { return 2 * N; }
    [[nodiscard]] static double study_tau(int N) { return 1.0 / (2.0 * N); }

    [[nodiscard]] int finest_cells() const { return study_cells(*std::max_element(N_list.begin(), N_list.end())); }

    [[nodiscard]] int reference_cells() const { return reference.cells > 0 ? reference.cells : 4 * finest_cells(); }

    [[nodiscard]] int reference_time_cells() const
    {
        if (reference.time_cells > 0) {
            return reference.time_cells;
        }
        const double m = T * reference_cells();
        if (std::abs(m - std::round(m)) > 1e-9 * m) {
            throw ConfigError("reference.time_cells: T * cells = " + std::to_string(m) +
                              " is not an integer; set time_cells explicitly");
        }
        return static_cast<int>(std::round(m));
    }

    [[nodiscard]] double reference_tau() const { return T / reference_time_cells(); }

    /// Throws ConfigError naming the offending key.
    void validate() const
    {
        if (N_list.empty()) {
            throw ConfigError("study.N_list: must not be empty");
        }
        for (int N : N_list) {
            if (N < 2 || N % 2 != 0) {
                throw ConfigError("study.N_list: N must be a positive even integer, got " + std::to_string(N));
            }
        }
        if (!std::is_sorted(N_list.begin(), N_list.end()) ||
            std::adjacent_find(N_list.begin(), N_list.end()) != N_list.end()) {
            throw ConfigError("study.N_list: values must be strictly increasing");
        }
        if (p < 1 || p > 6) {
            throw ConfigError("study.p: expected 1..6, got " + std::to_string(p));
        }
        if (q < 0 || q > 6) {
            throw ConfigError("study.q: expected 0..6, got " + std::to_string(q));
        }
        if (!(rho > 0.0) || !std::isfinite(rho)) {
            throw ConfigError("study.rho: must be positive");
        }
        if (!(T > 0.0) || !std::isfinite(T)) {
            throw ConfigError("study.T: must be positive");
        }
        if (reference.degree < 1 || reference.degree > 6) {
            throw ConfigError("reference.degree: expected 1..6, got " + std::to_string(reference.degree));
        }
        if (reference.time_degree < 0 || reference.time_degree > 6) {
            throw ConfigError("reference.time_degree: expected 0..6");
        }
        if (reference.cells < 0 || reference.time_cells < 0) {
            throw ConfigError("reference.cells / reference.time_cells: must be nonnegative");
        }
        const int nr = reference_cells();
        if (nr < 2 * finest_cells()) {
            throw ConfigError("reference.cells: " + std::to_string(nr) +
                              " is less than twice the finest study mesh (" + std::to_string(finest_cells()) + ")");
        }
        const double tr = reference_tau();
        for (int N : N_list) {
            if (nr % study_cells(N) != 0) {
                throw ConfigError("reference.cells: " + std::to_string(nr) + " is not a multiple of " +
                                  std::to_string(study_cells(N)) + " (N=" + std::to_string(N) + ")");
            }
            const double r = study_tau(N) / tr;
            if (r < 1.0 - 1e-9 || std::abs(r - std::round(r)) > 1e-9 * r) {
                throw ConfigError("reference.time_cells: reference slab length does not divide 1/(2N) for N=" +
                                  std::to_string(N));
            }
            (void)slab_count(T, study_tau(N));
        }
        if (output.raster < 1) {
            throw ConfigError("output.raster: must be positive");
        }
        for (double t : output.snapshot_times) {
            if (t < 0.0 || t > T) {
                throw ConfigError("output.snapshot_times: " + std::to_string(t) + " is outside [0, T]");
            }
        }
    }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s)
{
    std::string t = s;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream is(t);
    std::vector<std::string> out;
    for (std::string w; is >> w;) {
        out.push_back(w);
    }
    return out;
}

inline int parse_int(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    int r = 0;
    try {
        r = std::stoi(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return r;
}

inline double parse_real(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    double r = 0.0;
    try {
        r = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    return r;
}

} // namespace detail

/// Parses INI text with sections [study], [reference], [output]; missing keys keep their defaults.
inline StudyConfig parse_config_stream(std::istream& in, const std::string& name = "<config>")
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(name + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    StudyConfig c;
    const std::set<std::string> known{"study.N_list",      "study.p",          "study.q",
                                      "study.rho",         "study.T",          "reference.degree",
                                      "reference.time_degree", "reference.cells", "reference.time_cells",
                                      "reference.checkpoint_dir", "output.dir", "output.table",
                                      "output.log",        "output.snapshot_times", "output.raster"};
    for (const auto& [section, body] : tree) {
        if (section != "study" && section != "reference" && section != "output") {
            throw ConfigError(name + ": unknown section or key '" + section + "'");
        }
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            if (!known.count(full)) {
                throw ConfigError(name + ": unknown key '" + full + "'");
            }
            const std::string v = value.data();
            if (full == "study.N_list") {
                c.N_list.clear();
                for (const auto& w : detail::split_list(v)) {
                    c.N_list.push_back(detail::parse_int(full, w));
                }
            } else if (full == "study.p") {
                c.p = detail::parse_int(full, v);
            } else if (full == "study.q") {
                c.q = detail::parse_int(full, v);
            } else if (full == "study.rho") {
                c.rho = detail::parse_real(full, v);
            } else if (full == "study.T") {
                c.T = detail::parse_real(full, v);
            } else if (full == "reference.degree") {
                c.reference.degree = detail::parse_int(full, v);
            } else if (full == "reference.time_degree") {
                c.reference.time_degree = detail::parse_int(full, v);
            } else if (full == "reference.cells") {
                c.reference.cells = detail::parse_int(full, v);
            } else if (full == "reference.time_cells") {
                c.reference.time_cells = detail::parse_int(full, v);
            } else if (full == "reference.checkpoint_dir") {
                c.reference.checkpoint_dir = v;
            } else if (full == "output.dir") {
                c.output.dir = v;
            } else if (full == "output.table") {
                c.output.table = v;
            } else if (full == "output.log") {
                c.output.log = v;
            } else if (full == "output.snapshot_times") {
                c.output.snapshot_times.clear();
                for (const auto& w : detail::split_list(v)) {
                    c.output.snapshot_times.push_back(detail::parse_real(full, w));
                }
            } else if (full == "output.raster") {
                c.output.raster = detail::parse_int(full, v);
            }
        }
    }
    c.validate();
    const double rho0 = rough_problem(c.N_list.front()).rho0;
    if (c.rho <= rho0) {
        c.warnings.push_back("study.rho = " + detail::format_real(c.rho) + " does not exceed rho0 = " +
                             detail::format_real(rho0));
    }
    return c;
}

inline StudyConfig parse_config_string(const std::string& text)
{
    std::istringstream in(text);
    return parse_config_stream(in);
}

inline StudyConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    return parse_config_stream(in, path.string());
}

/// Loads of the study source 1_(0,1)(t) g(x), with the spatial part assembled once.
inline NodeLoadFunction study_loads(const SpatialProblem& sp)
{
    auto g = std::make_shared<FieldPair>(FieldPair::zeros(sp.blocks.dim_u(), sp.blocks.dim_v()));
    g->u = assemble_load(sp.su, [](Point2 x) { return source_f(0.5, x); });
    auto zero = std::make_shared<FieldPair>(FieldPair::zeros(sp.blocks.dim_u(), sp.blocks.dim_v()));
    return [g, zero](int, std::size_t, double t) { return source_f(t, {0.5, 0.5}) != 0.0 ? *g : *zero; };
}

/// Rough problem of the study at its own resolution h = tau = 1/(2N).
inline Discretisation study_discretisation(const StudyConfig& c, int N)
{
    return {StudyConfig::study_cells(N), c.p, c.q, StudyConfig::study_tau(N)};
}

inline Discretisation reference_discretisation(const StudyConfig& c)
{
    return {c.reference_cells(), c.reference.degree, c.reference.time_degree, c.reference_tau()};
}

/// A reference run: the rough problem for one N (kind "rough") or the homogenised one (kind "hom").
struct ReferenceJob {
    std::string kind;
    int N = 0;
    ProblemData problem;
};

inline ReferenceJob rough_reference(const StudyConfig& c, int N) { return {"rough", N, rough_problem(N, c.rho, c.T)}; }
inline ReferenceJob hom_reference(const StudyConfig& c) { return {"hom", 0, homogenised_problem(c.rho, c.T)}; }

inline std::filesystem::path checkpoint_path(const StudyConfig& c, const ReferenceJob& job)
{
    const auto d = reference_discretisation(c);
    const std::string name = job.kind + (job.kind == "rough" ? "_N" + std::to_string(job.N) : std::string()) + "_n" +
                             std::to_string(d.n) + "_p" + std::to_string(d.p) + "_q" + std::to_string(d.q) + "_m" +
                             std::to_string(c.reference_time_cells()) + ".ckpt";
    return std::filesystem::path(c.reference.checkpoint_dir) / name;
}

inline CheckpointHeader reference_header(const StudyConfig& c, const ReferenceJob& job, const SpatialProblem& sp)
{
    const auto d = reference_discretisation(c);
    return {job.kind, job.N, d.n, d.p, d.q, d.tau, c.rho, c.T, c.reference_time_cells(), sp.blocks.dim_u(),
            sp.blocks.dim_v()};
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/**
 * Runs a reference solve and streams its slabs into `visitor`. With a
 * checkpoint directory configured, an existing checkpoint is read instead of
 * solving, and a fresh solve is written to disk on the way.
 */
inline void stream_reference(const StudyConfig& c, const ReferenceJob& job, const SpatialProblem& sp,
                             const SlabVisitor& visitor, std::ostream* log = nullptr)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto header = reference_header(c, job, sp);
    std::unique_ptr<CheckpointWriter> writer;
    if (!c.reference.checkpoint_dir.empty()) {
        const auto path = checkpoint_path(c, job);
        if (std::filesystem::exists(path)) {
            read_checkpoint(path, header, visitor);
            if (log != nullptr) {
                *log << "reference " << header.describe() << ": loaded " << path.string() << " in "
                     << detail::seconds_since(t0) << " s" << std::endl;
            }
            return;
        }
        writer = std::make_unique<CheckpointWriter>(path, header);
    }
    RunOptions opt;
    opt.keep_slabs = false;
    opt.loads = study_loads(sp);
    opt.visitor = [&](int m, const std::vector<FieldPair>& nodal) {
        if (writer) {
            writer->write_slab(m, nodal);
        }
        if (visitor) {
            visitor(m, nodal);
        }
    };
    (void)run(job.problem, sp, reference_discretisation(c), opt);
    if (writer) {
        writer->finish();
    }
    if (log != nullptr) {
        *log << "reference " << header.describe() << ": solved in " << detail::seconds_since(t0) << " s"
             << (writer ? " (checkpoint " + checkpoint_path(c, job).string() + ")" : std::string()) << std::endl;
    }
}

/// Solves (or finds) the checkpoint of one reference; returns its path.
inline std::filesystem::path solve_reference(const StudyConfig& c, const ReferenceJob& job, std::ostream* log = nullptr)
{
    if (c.reference.checkpoint_dir.empty()) {
        throw ConfigError("reference.checkpoint_dir: required to store references");
    }
    const SpatialProblem sp(job.problem, c.reference_cells(), c.reference.degree);
    stream_reference(c, job, sp, {}, log);
    return checkpoint_path(c, job);
}

/// The study's rough solution for one N, with all slabs kept.
struct StudyRun {
    int N;
    std::unique_ptr<SpatialProblem> space;
    std::unique_ptr<DiscreteSolution> solution;
    double seconds = 0.0;
};

inline StudyRun solve_study_row(const StudyConfig& c, int N)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto prob = rough_problem(N, c.rho, c.T);
    const auto d = study_discretisation(c, N);
    StudyRun r{N, std::make_unique<SpatialProblem>(prob, d.n, d.p), nullptr, 0.0};
    RunOptions opt;
    opt.loads = study_loads(*r.space);
    r.solution = std::make_unique<DiscreteSolution>(run(prob, *r.space, d, opt));
    r.seconds = detail::seconds_since(t0);
    return r;
}

/**
 * The convergence study: rough runs for every N compared against the rough
 * reference of the same N and against the homogenised reference.
 * Rows run on up to `threads` threads; references run one at a time.
 */
inline ErrorTable run_study(const StudyConfig& c, std::ostream* log = nullptr, int threads = 1)
{
    c.validate();
    const auto t_start = std::chrono::steady_clock::now();
    std::vector<StudyRun> runs(c.N_list.size());
    {
        std::vector<std::exception_ptr> errors(runs.size());
        const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1,
                                                            runs.size());
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < runs.size(); i += workers) {
                    try {
                        runs[i] = solve_study_row(c, c.N_list[i]);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }
    if (log != nullptr) {
        for (const auto& r : runs) {
            *log << "row N=" << r.N << ": n=" << StudyConfig::study_cells(r.N) << " p=" << c.p << " q=" << c.q
                 << " tau=" << StudyConfig::study_tau(r.N) << " solved in " << r.seconds << " s\n";
        }
        log->flush();
    }

    const int nr = c.reference_cells();
    const SlabBasis rb(c.reference.time_degree, c.rho, c.reference_tau());
    const int rm = c.reference_time_cells();
    std::vector<ErrorRow> rows(runs.size());

    {
        const auto job = hom_reference(c);
        const SpatialProblem sp(job.problem, nr, c.reference.degree);
        const auto weight = CoefficientField::constant(homogenised_average(job.problem.s0));
        std::vector<std::unique_ptr<ReferenceComparison>> cmp;
        for (const auto& r : runs) {
            cmp.push_back(std::make_unique<ReferenceComparison>(*r.solution, *r.space, weight, sp, rb, rm, "hom"));
        }
        stream_reference(c, job, sp,
                         [&](int m, const std::vector<FieldPair>& nodal) {
                             for (auto& x : cmp) {
                                 x->visit(m, nodal);
                             }
                         },
                         log);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            rows[i].N = runs[i].N;
            rows[i].hom = cmp[i]->report();
            rows[i].hom.N = runs[i].N;
        }
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto job = rough_reference(c, runs[i].N);
        const SpatialProblem sp(job.problem, nr, c.reference.degree);
        ReferenceComparison cmp(*runs[i].solution, *runs[i].space, job.problem.s0, sp, rb, rm, "rough");
        stream_reference(c, job, sp, [&](int m, const std::vector<FieldPair>& nodal) { cmp.visit(m, nodal); }, log);
        rows[i].rough = cmp.report();
        rows[i].rough.N = runs[i].N;
    }

    ErrorTable table;
    for (auto& r : rows) {
        table.add(std::move(r));
    }
    if (log != nullptr) {
        *log << "study finished in " << detail::seconds_since(t_start) << " s" << std::endl;
    }
    return table;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

/// State at absolute time t; t = 0 gives the initial value (zero).
inline FieldPair state_at(const DiscreteSolution& sol, double t)
{
    const double T = sol.tau() * sol.slab_count();
    if (t < 0.0 || t > T * (1.0 + 1e-12)) {
        throw std::out_of_range("state_at: t = " + std::to_string(t) + " outside [0, " + std::to_string(T) + "]");
    }
    if (t == 0.0) {
        return FieldPair::zeros(sol.dim_u(), sol.dim_v());
    }
    int m = static_cast<int>(std::ceil(t / sol.tau() - 1e-12)) - 1;
    m = std::clamp(m, 0, sol.slab_count() - 1);
    return sol.value(m, std::clamp(t - sol.slab_start(m), 0.0, sol.tau()));
}

/// u sampled at the centres of a res x res raster; value (i, j) at index i + res j.
struct Raster {
    int res = 0;
    std::vector<double> values;

    [[nodiscard]] Point2 point(int i, int j) const { return {(i + 0.5) / res, (j + 0.5) / res}; }
};

inline Raster rasterise(const ScalarSpace& su, const Eigen::VectorXd& u, int res)
{
    if (res < 1) {
        throw std::invalid_argument("rasterise: resolution must be positive");
    }
    Raster r{res, std::vector<double>(static_cast<std::size_t>(res) * static_cast<std::size_t>(res))};
    for (int j = 0; j < res; ++j) {
        for (int i = 0; i < res; ++i) {
            r.values[static_cast<std::size_t>(i + res * j)] = eval_scalar(su, u, r.point(i, j));
        }
    }
    return r;
}

inline std::string to_vtk(const Raster& r, const std::string& title)
{
    std::ostringstream os;
    os.precision(10);
    os << "# vtk DataFile Version 3.0\n"
       << title << "\nASCII\nDATASET STRUCTURED_POINTS\n"
       << "DIMENSIONS " << r.res << " " << r.res << " 1\n"
       << "ORIGIN " << 0.5 / r.res << " " << 0.5 / r.res << " 0\n"
       << "SPACING " << 1.0 / r.res << " " << 1.0 / r.res << " 1\n"
       << "POINT_DATA " << r.values.size() << "\nSCALARS u double 1\nLOOKUP_TABLE default\n";
    for (double v : r.values) {
        os << v << "\n";
    }
    return os.str();
}

/// One line per raster row, bottom row first.
inline std::string to_csv_grid(const Raster& r)
{
    std::ostringstream os;
    os.precision(10);
    for (int j = 0; j < r.res; ++j) {
        for (int i = 0; i < r.res; ++i) {
            os << (i ? "," : "") << r.values[static_cast<std::size_t>(i + r.res * j)];
        }
        os << "\n";
    }
    return os.str();
}

/// Writes stem.vtk and stem.csv with u at time t.
inline Raster export_snapshot(const DiscreteSolution& sol, const SpatialProblem& sp, double t, int res,
                              const std::filesystem::path& stem)
{
    const Raster r = rasterise(sp.su, state_at(sol, t).u, res);
    write_text(stem.string() + ".vtk", to_vtk(r, "u at t=" + detail::format_real(t)));
    write_text(stem.string() + ".csv", to_csv_grid(r));
    return r;
}

} // namespace evohom
