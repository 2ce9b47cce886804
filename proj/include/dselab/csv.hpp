#pragma once

#include "dselab/dynamics.hpp"
#include "dselab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dselab {

/// Shortest round-trippable decimal rendering, locale independent.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary) {
        if (!out_) throw ParseError("cannot open for writing: " + path);
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << fmt_double(values[i]);
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name, const std::string& path) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw ParseError(path + ": missing column '" + name + "'");
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                double v = std::stod(cell, &pos);
                if (pos != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) +
                                 ": bad numeric cell '" + cell + "'");
            }
        }
        if (row.size() != table.header.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(table.header.size()) + " cells, got " +
                             std::to_string(row.size()));
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline void save_trajectory(const TruthTrajectory& traj, const std::string& path) {
    CsvWriter w(path, {"t", "delta", "omega", "eq_p", "ed_p", "tm", "ef", "u", "phi"});
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& x = traj.state[k];
        const auto& u = traj.input[k];
        w.row({traj.t[k], x.delta, x.omega, x.Eq_p, x.Ed_p, u.T_m, u.E_f, u.U, u.phi});
    }
}

/// Reads a trajectory CSV (schema: t, delta, omega, eq_p, ed_p, tm, ef, u, phi)
/// and validates the uniform time grid.
inline TruthTrajectory load_trajectory(const std::string& path) {
    CsvTable table = read_csv(path);
    const int ct = table.column("t", path);
    const int cd = table.column("delta", path);
    const int co = table.column("omega", path);
    const int cq = table.column("eq_p", path);
    const int ce = table.column("ed_p", path);
    const int cm = table.column("tm", path);
    const int cf = table.column("ef", path);
    const int cu = table.column("u", path);
    const int cp = table.column("phi", path);

    if (table.rows.size() < 2) throw GridError(path + ": need at least 2 samples");
    TruthTrajectory traj;
    traj.dt = table.rows[1][ct] - table.rows[0][ct];
    if (traj.dt <= 0.0) throw GridError(path + ": non-increasing timestamps");
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        const auto& r = table.rows[k];
        if (k > 0) {
            const double step = r[ct] - table.rows[k - 1][ct];
            if (std::abs(step - traj.dt) > 1e-9 * std::max(1.0, std::abs(traj.dt)))
                throw GridError(path + ": non-uniform grid at t=" + fmt_double(r[ct]));
        }
        traj.t.push_back(r[ct]);
        traj.state.push_back(MachineState{r[cd], r[co], r[cq], r[ce]});
        traj.input.push_back(ControlInput{r[cm], r[cf], r[cu], r[cp]});
    }
    return traj;
}

} // namespace dselab
