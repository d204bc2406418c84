#include "ktcs/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ktcs/parallel.hpp"
#include "ktcs/phase_space.hpp"
#include "ktcs/statistics.hpp"
#include "ktcs/version.hpp"

namespace ktcs::io {

using nlohmann::json;

std::string format_sig(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_csv(const std::string& path, const Table& table) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("write_csv: cannot open " + path);
    for (size_t i = 0; i < table.header.size(); ++i) {
        if (i) os << ',';
        os << table.header[i];
    }
    os << '\n';
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << format_sig(row[i]);
        }
        os << '\n';
    }
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("write_text: cannot open " + path);
    os << content;
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("read_text: cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

Table mandel_sweep(const KtcsParams& params, double z_min, double z_max, int steps) {
    if (steps < 1 || !(z_max > z_min) || !(z_min > 0.0))
        throw ValidationError("mandel_sweep: need 0 < z_min < z_max and steps >= 1");
    Table t;
    t.header = {"z", "Ma", "Mb", "Mc"};
    t.rows.assign(static_cast<size_t>(steps), {});
    parallel_for(steps, [&](long long i) {
        const double z =
            z_min + (z_max - z_min) * static_cast<double>(i) / std::max(1, steps - 1);
        const MandelTriple m = mandel(params, z);
        t.rows[static_cast<size_t>(i)] = {z, m.Ma, m.Mb, m.Mc};
    });
    return t;
}

Table csi_sweep(const KtcsParams& params, double z_min, double z_max, int steps) {
    if (steps < 1 || !(z_max > z_min) || !(z_min > 0.0))
        throw ValidationError("csi_sweep: need 0 < z_min < z_max and steps >= 1");
    Table t;
    t.header = {"z", "G_ab", "G_ac", "G_bc"};
    t.rows.assign(static_cast<size_t>(steps), {});
    parallel_for(steps, [&](long long i) {
        const double z =
            z_min + (z_max - z_min) * static_cast<double>(i) / std::max(1, steps - 1);
        const CsiMeasures c = csi_measures(params, z);
        t.rows[static_cast<size_t>(i)] = {z, c.G_ab, c.G_ac, c.G_bc};
    });
    return t;
}

Table numdist_table(const KtcsParams& params, int n_hi) {
    if (n_hi < 0) n_hi = auto_n_max(params);
    Table t;
    t.header = {"n", "P_n"};
    for (int n = 0; n <= n_hi; ++n)
        t.rows.push_back({static_cast<double>(n), number_distribution(params, n)});
    return t;
}

QGridFiles qgrid_files(const KtcsParams& params, double half_width, int n_grid) {
    QGridSpec spec = default_window(params, n_grid);
    if (half_width > 0.0) {
        spec.x_min = spec.y_min = -half_width;
        spec.x_max = spec.y_max = half_width;
    }
    const QGrid grid = q_slice(params, spec);

    QGridFiles out;
    {
        std::ostringstream os;
        for (int iy = 0; iy < spec.ny; ++iy) {
            for (int ix = 0; ix < spec.nx; ++ix) {
                if (ix) os << ',';
                os << format_sig(grid.at(ix, iy));
            }
            os << '\n';
        }
        out.csv = os.str();
    }
    json meta;
    meta["K"] = params.K;
    meta["j"] = params.j;
    meta["p"] = params.p;
    meta["q"] = params.q;
    meta["xi"] = {params.xi().real(), params.xi().imag()};
    meta["x_min"] = spec.x_min;
    meta["x_max"] = spec.x_max;
    meta["y_min"] = spec.y_min;
    meta["y_max"] = spec.y_max;
    meta["nx"] = spec.nx;
    meta["ny"] = spec.ny;
    meta["values"] = "pi^3 * Q(x, y), row-major, y rows";
    out.meta_json = meta.dump(2);
    return out;
}

Table fidelity_table(const iontrap::McwfRun& run) {
    Table t;
    t.header = {"gamma_t", "F0", "F1", "F0_err", "F1_err"};
    for (const auto& cp : run.checkpoints)
        t.rows.push_back({cp.gamma_t, cp.F0, cp.F1, cp.F0_err, cp.F1_err});
    return t;
}

Table fidelity_table(const iontrap::DensityRun& run) {
    Table t;
    t.header = {"gamma_t", "F0", "F1", "F0_err", "F1_err"};
    for (const auto& cp : run.checkpoints)
        t.rows.push_back({cp.gamma_t, cp.F0, cp.F1, 0.0, 0.0});
    return t;
}

Table snapshot_table(const iontrap::McwfCheckpoint& cp, const KtcsParams& target) {
    Table t;
    t.header = {"n", "Pi_n", "Pi_n_err", "P_n_target"};
    for (size_t n = 0; n < cp.Pi.size(); ++n) {
        t.rows.push_back({static_cast<double>(n), cp.Pi[n], cp.Pi_err[n],
                          number_distribution(target, static_cast<long long>(n))});
    }
    return t;
}

iontrap::SimConfig sim_config_from_json(const std::string& text) {
    json cfg;
    try {
        cfg = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("sim config: bad JSON: ") + e.what());
    }
    iontrap::SimConfig out;
    try {
        const auto xi = cfg.at("xi");
        out.xi = complexd{xi.at(0).get<double>(), xi.at(1).get<double>()};
        const auto z = cfg.at("zeta_over_gamma");
        if (z.is_array())
            out.zeta = complexd{z.at(0).get<double>(), z.at(1).get<double>()};
        else
            out.zeta = complexd{z.get<double>(), 0.0};
        out.p = cfg.at("p").get<int>();
        out.q = cfg.at("q").get<int>();
        out.w = cfg.at("w").get<double>();
        out.l = cfg.at("l").get<int>();
        out.m_max = cfg.value("m_max", -1);
        out.dt = cfg.value("dt_gamma", -1.0);
        out.t_max = cfg.at("t_max_gamma").get<double>();
        out.n_traj = cfg.value("n_traj", 1000);
        out.seed = cfg.value("seed", std::uint64_t{1});
        if (cfg.contains("checkpoints"))
            out.checkpoints = cfg.at("checkpoints").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("sim config: missing or bad field: ") + e.what());
    }
    out.validate();
    return out;
}

std::string sim_config_to_json(const iontrap::SimConfig& cfg) {
    json out;
    out["xi"] = {cfg.xi.real(), cfg.xi.imag()};
    if (cfg.zeta.imag() == 0.0)
        out["zeta_over_gamma"] = cfg.zeta.real();
    else
        out["zeta_over_gamma"] = {cfg.zeta.real(), cfg.zeta.imag()};
    out["p"] = cfg.p;
    out["q"] = cfg.q;
    out["w"] = cfg.w;
    out["l"] = cfg.l;
    out["m_max"] = cfg.m_max;
    out["dt_gamma"] = cfg.dt;
    out["t_max_gamma"] = cfg.t_max;
    out["n_traj"] = cfg.n_traj;
    out["seed"] = cfg.seed;
    if (!cfg.checkpoints.empty()) out["checkpoints"] = cfg.checkpoints;
    return out.dump(2);
}

std::string RunManifest::to_json() const {
    json out;
    out["command"] = command;
    out["library_version"] = ktcs::version;
    try {
        out["parameters"] = json::parse(parameters_json);
    } catch (const json::exception&) {
        out["parameters"] = parameters_json;
    }
    out["seed"] = seed;
    out["outputs"] = outputs;
    out["wall_time_s"] = wall_time_s;
    return out.dump(2);
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    write_text(path, manifest.to_json() + "\n");
}

}  // namespace ktcs::io
