// io.hpp
// CSV emitters, run configs, and run manifests. CSV files carry a header
// row, '.' decimal separator and 12 significant digits; reruns with the
// same inputs (seed included) produce byte-identical files.

#pragma once

#include <string>
#include <vector>

#include "ktcs/fock_core.hpp"
#include "ktcs/iontrap.hpp"

namespace ktcs::io {

std::string format_sig(double v);  // 12 significant digits

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const Table& table);
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

// ---- sweep builders (deterministic row order, internally parallel) ----

// (z, Ma, Mb, Mc) on a uniform z grid
Table mandel_sweep(const KtcsParams& params, double z_min, double z_max, int steps);

// (z, G_ab, G_ac, G_bc)
Table csi_sweep(const KtcsParams& params, double z_min, double z_max, int steps);

// (n, P_n) for n = 0..n_hi (n_hi < 0 selects the auto truncation)
Table numdist_table(const KtcsParams& params, int n_hi);

// grid CSV: ny rows x nx columns of pi^3 Q values; sidecar JSON metadata
struct QGridFiles {
    std::string csv;
    std::string meta_json;
};
QGridFiles qgrid_files(const KtcsParams& params, double half_width, int n_grid);

// (gamma_t, F0, F1, F0_err, F1_err) from either solver's checkpoints
Table fidelity_table(const iontrap::McwfRun& run);
Table fidelity_table(const iontrap::DensityRun& run);

// (n, Pi_n, Pi_n_err, P_n_target) at one checkpoint; target taken from the
// stationary family member of the matching parity
Table snapshot_table(const iontrap::McwfCheckpoint& cp, const KtcsParams& target);

// ---- run configs ----

// JSON schema: {xi:[re,im], zeta_over_gamma, p, q, w, l, m_max, dt_gamma,
// t_max_gamma, n_traj, seed, checkpoints?}; zeta may be a number or [re,im].
iontrap::SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const iontrap::SimConfig& cfg);

// ---- manifests ----

struct RunManifest {
    std::string command;
    std::string parameters_json;  // full parameter echo
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    double wall_time_s = 0.0;
    std::string to_json() const;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace ktcs::io
