#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "evohom/slab_solver.hpp"

namespace evohom {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Identity of a stored run. On disk: a text header of "key value" lines
 * terminated by "data", then the nodal values of every slab as raw native
 * doubles, node by node, u before v.
 */
struct CheckpointHeader {
    std::string kind = "solution";
    int N = 0; ///< coefficient background cells, 0 for constant coefficients
    int n = 0;
    int p = 0;
    int q = 0;
    double tau = 0.0;
    double rho = 0.0;
    double T = 0.0;
    int slabs = 0;
    Eigen::Index dim_u = 0;
    Eigen::Index dim_v = 0;

    [[nodiscard]] std::string describe() const
    {
        std::ostringstream os;
        os << kind << " N=" << N << " n=" << n << " p=" << p << " q=" << q << " tau=" << tau << " slabs=" << slabs;
        return os.str();
    }

    [[nodiscard]] std::size_t slab_values() const
    {
        return static_cast<std::size_t>(q + 1) * static_cast<std::size_t>(dim_u + dim_v);
    }

    /// Same run up to round-off in the real parameters.
    [[nodiscard]] bool matches(const CheckpointHeader& o) const
    {
        auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
        return kind == o.kind && N == o.N && n == o.n && p == o.p && q == o.q && close(tau, o.tau) &&
               close(rho, o.rho) && close(T, o.T) && slabs == o.slabs && dim_u == o.dim_u && dim_v == o.dim_v;
    }
};

namespace detail {

inline std::string format_real(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

constexpr const char* checkpoint_magic = "evohom-checkpoint 1";

} // namespace detail

/// Writes slabs in order to `path.part` and renames to `path` on finish().
class CheckpointWriter {
public:
    CheckpointWriter(std::filesystem::path path, CheckpointHeader header)
        : path_(std::move(path)), tmp_(path_.string() + ".part"), header_(std::move(header))
    {
        if (path_.has_parent_path()) {
            std::filesystem::create_directories(path_.parent_path());
        }
        out_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!out_) {
            throw CheckpointError("cannot open checkpoint file " + tmp_.string() + " for writing");
        }
        const auto& h = header_;
        out_ << detail::checkpoint_magic << "\n"
             << "kind " << h.kind << "\nN " << h.N << "\nn " << h.n << "\np " << h.p << "\nq " << h.q << "\ntau "
             << detail::format_real(h.tau) << "\nrho " << detail::format_real(h.rho) << "\nT "
             << detail::format_real(h.T) << "\nslabs " << h.slabs << "\ndim_u " << h.dim_u << "\ndim_v " << h.dim_v
             << "\ndata\n";
    }

    CheckpointWriter(const CheckpointWriter&) = delete;
    CheckpointWriter& operator=(const CheckpointWriter&) = delete;

    ~CheckpointWriter()
    {
        if (!finished_) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    void write_slab(int m, const std::vector<FieldPair>& nodal)
    {
        if (m != written_) {
            throw CheckpointError("checkpoint slabs must be written in order");
        }
        if (static_cast<int>(nodal.size()) != header_.q + 1) {
            throw CheckpointError("checkpoint slab has wrong node count");
        }
        for (const auto& f : nodal) {
            if (f.u.size() != header_.dim_u || f.v.size() != header_.dim_v) {
                throw CheckpointError("checkpoint slab has wrong dimension");
            }
            out_.write(reinterpret_cast<const char*>(f.u.data()), static_cast<std::streamsize>(f.u.size() * 8));
            out_.write(reinterpret_cast<const char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * 8));
        }
        if (!out_) {
            throw CheckpointError("write to " + tmp_.string() + " failed");
        }
        ++written_;
    }

    void finish()
    {
        if (written_ != header_.slabs) {
            throw CheckpointError("checkpoint incomplete: " + std::to_string(written_) + " of " +
                                  std::to_string(header_.slabs) + " slabs");
        }
        out_.close();
        if (!out_) {
            throw CheckpointError("closing " + tmp_.string() + " failed");
        }
        std::filesystem::rename(tmp_, path_);
        finished_ = true;
    }

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_;
    CheckpointHeader header_;
    std::ofstream out_;
    int written_ = 0;
    bool finished_ = false;
};

namespace detail {

inline CheckpointHeader read_header(std::istream& in, const std::string& where)
{
    std::string line;
    if (!std::getline(in, line) || line != checkpoint_magic) {
        throw CheckpointError(where + ": not a checkpoint file");
    }
    CheckpointHeader h;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line == "data") {
            return h;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        bool ok = true;
        if (key == "kind") {
            ok = static_cast<bool>(ls >> h.kind);
        } else if (key == "N") {
            ok = static_cast<bool>(ls >> h.N);
        } else if (key == "n") {
            ok = static_cast<bool>(ls >> h.n);
        } else if (key == "p") {
            ok = static_cast<bool>(ls >> h.p);
        } else if (key == "q") {
            ok = static_cast<bool>(ls >> h.q);
        } else if (key == "tau") {
            ok = static_cast<bool>(ls >> h.tau);
        } else if (key == "rho") {
            ok = static_cast<bool>(ls >> h.rho);
        } else if (key == "T") {
            ok = static_cast<bool>(ls >> h.T);
        } else if (key == "slabs") {
            ok = static_cast<bool>(ls >> h.slabs);
        } else if (key == "dim_u") {
            ok = static_cast<bool>(ls >> h.dim_u);
        } else if (key == "dim_v") {
            ok = static_cast<bool>(ls >> h.dim_v);
        } else {
            ok = false;
        }
        if (!ok) {
            throw CheckpointError(where + ":" + std::to_string(lineno) + ": corrupt header line '" + line + "'");
        }
    }
    throw CheckpointError(where + ": header not terminated");
}

} // namespace detail

[[nodiscard]] inline CheckpointHeader read_checkpoint_header(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint " + path.string());
    }
    return detail::read_header(in, path.string());
}

/// Streams the stored slabs into `visitor`; throws if the file is missing, corrupt or from another run.
inline void read_checkpoint(const std::filesystem::path& path, const CheckpointHeader& expected,
                            const SlabVisitor& visitor)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint " + path.string());
    }
    const auto h = detail::read_header(in, path.string());
    if (!h.matches(expected)) {
        throw CheckpointError(path.string() + " holds " + h.describe() + ", expected " + expected.describe());
    }
    const auto data_start = in.tellg();
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg() - data_start);
    if (bytes != h.slab_values() * static_cast<std::size_t>(h.slabs) * 8) {
        throw CheckpointError(path.string() + ": data size " + std::to_string(bytes) + " does not match the header");
    }
    in.seekg(data_start);
    std::vector<FieldPair> nodal(static_cast<std::size_t>(h.q + 1), FieldPair::zeros(h.dim_u, h.dim_v));
    for (int m = 0; m < h.slabs; ++m) {
        for (auto& f : nodal) {
            in.read(reinterpret_cast<char*>(f.u.data()), static_cast<std::streamsize>(f.u.size() * 8));
            in.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * 8));
        }
        if (!in) {
            throw CheckpointError(path.string() + ": truncated at slab " + std::to_string(m));
        }
        visitor(m, nodal);
    }
}

inline CheckpointHeader header_of(const DiscreteSolution& s, double rho, std::string kind = "solution", int N = 0)
{
    const auto& d = s.discretisation();
    return {std::move(kind), N, d.n, d.p, d.q, s.tau(), rho, s.tau() * s.slab_count(), s.slab_count(), s.dim_u(),
            s.dim_v()};
}

inline void save_solution(const std::filesystem::path& path, const DiscreteSolution& s, const CheckpointHeader& h)
{
    CheckpointWriter w(path, h);
    for (int m = 0; m < s.slab_count(); ++m) {
        w.write_slab(m, s.slab(m));
    }
    w.finish();
}

inline DiscreteSolution load_solution(const std::filesystem::path& path)
{
    const auto h = read_checkpoint_header(path);
    DiscreteSolution s({h.n, h.p, h.q, h.tau}, SlabBasis(h.q, h.rho, h.tau), h.slabs, h.dim_u, h.dim_v);
    read_checkpoint(path, h, [&](int, const std::vector<FieldPair>& nodal) { s.append(nodal, true); });
    return s;
}

} // namespace evohom
