// ktcs.cpp
// Command-line front end: maps figure recipes and ad-hoc queries onto the
// library and writes CSV/JSON artifacts with run manifests.
//
// Exit codes: 0 success, 2 validation error, 3 numerical-convergence error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "ktcs/completeness.hpp"
#include "ktcs/io.hpp"
#include "ktcs/iontrap.hpp"
#include "ktcs/phase_space.hpp"
#include "ktcs/statistics.hpp"
#include "ktcs/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using ktcs::complexd;
using ktcs::KtcsParams;

namespace {

struct CommonFlags {
    int K = 1, j = 0, p = 0, q = 0;
    double xi_re = 1.0, xi_im = 0.0;
    double z = -1.0, z_min = -1.0, z_max = -1.0;
    int steps = 200;
    std::string out;
    std::uint64_t seed = 1;
    std::string config_path;
};

KtcsParams params_of(const CommonFlags& f) {
    KtcsParams prm;
    const complexd xi{f.xi_re, f.xi_im};
    prm.xi_mod = std::abs(xi);
    prm.xi_arg = std::arg(xi);
    prm.p = f.p;
    prm.q = f.q;
    prm.K = f.K;
    prm.j = f.j;
    prm.validate();
    return prm;
}

void add_state_flags(CLI::App* cmd, CommonFlags& f, bool with_xi = true) {
    cmd->add_option("--K", f.K, "family order K");
    cmd->add_option("--j", f.j, "residue class index");
    cmd->add_option("--p", f.p, "charge p");
    cmd->add_option("--q", f.q, "charge q");
    if (with_xi) {
        cmd->add_option("--xi-re", f.xi_re, "Re xi");
        cmd->add_option("--xi-im", f.xi_im, "Im xi");
    }
}

void add_sweep_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--z", f.z, "single z = r^2 evaluation");
    cmd->add_option("--z-min", f.z_min, "sweep start");
    cmd->add_option("--z-max", f.z_max, "sweep end");
    cmd->add_option("--steps", f.steps, "sweep points");
}

struct ManifestScope {
    ktcs::io::RunManifest manifest;
    std::string dir;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    ManifestScope(std::string command, std::string params, std::string out_dir)
        : dir(std::move(out_dir)) {
        manifest.command = std::move(command);
        manifest.parameters_json = std::move(params);
    }
    std::string path(const std::string& name) {
        manifest.outputs.push_back(name);
        return (fs::path(dir) / name).string();
    }
    void finish() {
        manifest.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ktcs::io::write_manifest((fs::path(dir) / (manifest.command + ".manifest.json")).string(),
                                 manifest);
    }
};

std::string exe_dir(const char* argv0) {
    char buf[4096];
    const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof buf - 1);
    if (n > 0) {
        buf[n] = '\0';
        return fs::path(buf).parent_path().string();
    }
    return fs::path(argv0).parent_path().string();
}

std::string find_recipes(const std::string& explicit_path, const char* argv0) {
    if (!explicit_path.empty()) return explicit_path;
    if (const char* env = std::getenv("KTCS_FIGURES")) return env;
    const fs::path beside = fs::path(exe_dir(argv0)) / "figures.json";
    if (fs::exists(beside)) return beside.string();
    if (fs::exists("figures.json")) return "figures.json";
#ifdef KTCS_DATA_DIR
    const fs::path source = fs::path(KTCS_DATA_DIR) / "figures.json";
    if (fs::exists(source)) return source.string();
#endif
    throw ktcs::ValidationError("figure recipes not found; pass --recipes");
}

// mixture target for a snapshot comparison column:
// (1-w) P_n(xi,p,q,2,0) + w P_n(xi,p,q,2,1)
double snapshot_target(const ktcs::iontrap::SimConfig& cfg, long long n) {
    double value = 0.0;
    for (int jp = 0; jp <= 1; ++jp) {
        const double wgt = (jp == 0) ? 1.0 - cfg.w : cfg.w;
        if (wgt == 0.0) continue;
        KtcsParams t;
        t.xi_mod = std::abs(cfg.xi);
        t.xi_arg = std::arg(cfg.xi);
        t.p = cfg.p;
        t.q = cfg.q;
        t.K = 2;
        t.j = jp;
        value += wgt * ktcs::number_distribution(t, n);
    }
    return value;
}

ktcs::io::Table snapshot_with_mixture(const ktcs::iontrap::McwfCheckpoint& cp,
                                      const ktcs::iontrap::SimConfig& cfg) {
    ktcs::io::Table t;
    t.header = {"n", "Pi_n", "Pi_n_err", "P_n_target"};
    for (size_t n = 0; n < cp.Pi.size(); ++n)
        t.rows.push_back({static_cast<double>(n), cp.Pi[n], cp.Pi_err[n],
                          snapshot_target(cfg, static_cast<long long>(n))});
    return t;
}

std::string format_time_tag(double gamma_t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", gamma_t);
    return buf;
}

void run_mcwf_job(const ktcs::iontrap::SimConfig& cfg, ManifestScope& scope,
                  const std::string& fidelity_out, const std::string& snapshot_prefix) {
    const auto run = ktcs::iontrap::mcwf_run(cfg);
    ktcs::io::write_csv(scope.path(fidelity_out), ktcs::io::fidelity_table(run));
    for (const auto& cp : run.checkpoints) {
        const std::string name =
            snapshot_prefix + "_t" + format_time_tag(cp.gamma_t) + ".csv";
        ktcs::io::write_csv(scope.path(name), snapshot_with_mixture(cp, cfg));
    }
}

void run_density_job(const ktcs::iontrap::SimConfig& cfg, ManifestScope& scope,
                     const std::string& out) {
    const auto run = ktcs::iontrap::evolve_density(cfg);
    ktcs::io::write_csv(scope.path(out), ktcs::io::fidelity_table(run));
}

ktcs::iontrap::SimConfig job_config(const json& job) {
    auto cfg = ktcs::io::sim_config_from_json(job.at("config").dump());
    if (job.at("config").contains("checkpoint_every")) {
        const double every = job.at("config").at("checkpoint_every").get<double>();
        cfg.checkpoints.clear();
        for (double t = every; t <= cfg.t_max + 1e-9; t += every) cfg.checkpoints.push_back(t);
    }
    return cfg;
}

int run_figure(int fig, const std::string& recipes_path, const std::string& out_dir) {
    const json recipes = json::parse(ktcs::io::read_text(recipes_path));
    char key[16];
    std::snprintf(key, sizeof key, "fig%02d", fig);
    if (!recipes.contains(key))
        throw ktcs::ValidationError(std::string("no recipe for ") + key);

    fs::create_directories(out_dir);
    ManifestScope scope(key, recipes.at(key).dump(), out_dir);

    for (const auto& job : recipes.at(key).at("jobs")) {
        const std::string type = job.at("type").get<std::string>();
        if (type == "numdist") {
            CommonFlags f;
            f.K = job.at("K");
            f.j = job.at("j");
            f.p = job.at("p");
            f.q = job.at("q");
            f.xi_re = job.at("xi").at(0);
            f.xi_im = job.at("xi").at(1);
            ktcs::io::write_csv(scope.path(job.at("out")),
                                ktcs::io::numdist_table(params_of(f), job.value("n_hi", -1)));
        } else if (type == "mandel" || type == "csi") {
            CommonFlags f;
            f.K = job.at("K");
            f.j = job.at("j");
            f.p = job.at("p");
            f.q = job.at("q");
            f.xi_re = 1.0;
            KtcsParams prm = params_of(f);
            const double z0 = job.at("z_min"), z1 = job.at("z_max");
            const int steps = job.at("steps");
            ktcs::io::write_csv(scope.path(job.at("out")),
                                type == "mandel"
                                    ? ktcs::io::mandel_sweep(prm, z0, z1, steps)
                                    : ktcs::io::csi_sweep(prm, z0, z1, steps));
        } else if (type == "qslice") {
            CommonFlags f;
            f.K = job.at("K");
            f.j = job.at("j");
            f.p = job.at("p");
            f.q = job.at("q");
            f.xi_re = job.at("xi").at(0);
            f.xi_im = job.at("xi").at(1);
            const auto files = ktcs::io::qgrid_files(params_of(f), job.value("half_width", -1.0),
                                                     job.value("n_grid", 401));
            ktcs::io::write_text(scope.path(job.at("out")), files.csv);
            ktcs::io::write_text(scope.path(job.at("meta_out")), files.meta_json);
        } else if (type == "mcwf") {
            const auto cfg = job_config(job);
            scope.manifest.seed = cfg.seed;
            run_mcwf_job(cfg, scope, job.at("fidelity_out"), job.at("snapshot_prefix"));
        } else if (type == "density") {
            run_density_job(job_config(job), scope, job.at("out"));
        } else {
            throw ktcs::ValidationError("unknown job type: " + type);
        }
    }
    scope.finish();
    std::cout << key << ": wrote " << scope.manifest.outputs.size() << " files to " << out_dir
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for K-dimensional trio coherent states"};
    app.set_version_flag("--version", std::string("ktcs ") + ktcs::version);
    app.require_subcommand(1);

    CommonFlags f;
    std::string out_dir = ".";
    std::string recipes;
    int fig_number = 0;
    int n_hi = -1;
    int n_max_check = 8;
    double tolerance = 1e-6;
    double x_value = 1.0;
    double half_width = -1.0;
    int n_grid = 401;
    int identity_nmax = 6, identity_trials = 20;
    long long n_probe = 1000000;
    double z_hi = 50.0;
    std::string mode_name = "c";
    bool use_oracle = false;
    std::string out_prefix = "run";

    std::string state_out;
    auto* cmd_numdist = app.add_subcommand("numdist", "number distribution P_n");
    add_state_flags(cmd_numdist, f);
    cmd_numdist->add_option("--n-hi", n_hi, "highest n (default: auto truncation)");
    cmd_numdist->add_option("--out", f.out, "CSV path (default: stdout)");
    cmd_numdist->add_option("--state-out", state_out, "also dump the state vector as JSON");

    auto* cmd_mandel = app.add_subcommand("mandel", "Mandel parameters");
    add_state_flags(cmd_mandel, f, false);
    add_sweep_flags(cmd_mandel, f);
    cmd_mandel->add_option("--out", f.out, "CSV path for sweeps");
    cmd_mandel->add_option("--crossover-mode", mode_name,
                           "also locate the zero crossing of this mode (a|b|c)")
        ->expected(1);
    cmd_mandel->add_option("--z-hi", z_hi, "crossover bracket upper bound");

    auto* cmd_csi = app.add_subcommand("csi", "Cauchy-Schwarz violation measures");
    add_state_flags(cmd_csi, f, false);
    add_sweep_flags(cmd_csi, f);
    cmd_csi->add_option("--out", f.out, "CSV path for sweeps");

    auto* cmd_qfunc = app.add_subcommand("qfunc", "Husimi Q slice on alpha=beta=gamma");
    add_state_flags(cmd_qfunc, f);
    cmd_qfunc->add_option("--half-width", half_width, "window half width (default: auto)");
    cmd_qfunc->add_option("--n-grid", n_grid, "grid nodes per axis");
    cmd_qfunc->add_option("--out", f.out, "CSV path")->required();

    auto* cmd_weight = app.add_subcommand("weight", "moment-problem weight function");
    cmd_weight->add_option("--p", f.p);
    cmd_weight->add_option("--q", f.q);
    cmd_weight->add_option("--x", x_value, "single evaluation point");
    cmd_weight->add_option("--z-min", f.z_min, "sweep start (log-spaced)");
    cmd_weight->add_option("--z-max", f.z_max, "sweep end");
    cmd_weight->add_option("--steps", f.steps);
    cmd_weight->add_option("--out", f.out, "CSV path for sweeps");

    auto* cmd_unity = app.add_subcommand("unity",
                                         "moment verification and resolution-of-unity checks");
    add_state_flags(cmd_unity, f);
    cmd_unity->add_option("--n-max-check", n_max_check, "moments 0..n to verify");
    cmd_unity->add_option("--tolerance", tolerance, "relative tolerance");
    cmd_unity->add_option("--out", f.out, "JSON report path (default: stdout)");

    auto* cmd_carleman = app.add_subcommand("carleman", "uniqueness test for the moment problem");
    add_state_flags(cmd_carleman, f, false);
    cmd_carleman->add_option("--n-probe", n_probe, "probe index (>= 1e4)");

    auto* cmd_identity = app.add_subcommand("identity", "thirteen-laser operator identity check");
    cmd_identity->add_option("--n-max", identity_nmax, "per-mode truncation (<= 8)");
    cmd_identity->add_option("--trials", identity_trials, "random vectors");
    cmd_identity->add_option("--seed", f.seed);

    auto* cmd_mcwf = app.add_subcommand("mcwf", "trapped-ion generation run (K = 2)");
    cmd_mcwf->add_option("--config", f.config_path, "JSON run config")->required();
    cmd_mcwf->add_flag("--oracle", use_oracle, "deterministic density evolution instead of MCWF");
    cmd_mcwf->add_option("--out-dir", out_dir, "output directory");
    cmd_mcwf->add_option("--out-prefix", out_prefix, "output file prefix");

    auto* cmd_figure = app.add_subcommand("figure", "reproduce a canonical dataset (1..12)");
    cmd_figure->add_option("number", fig_number, "figure number")->required();
    cmd_figure->add_option("--out-dir", out_dir, "output directory (default: figures/figNN)");
    cmd_figure->add_option("--recipes", recipes, "recipe manifest path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (cmd_numdist->parsed()) {
            const auto table = ktcs::io::numdist_table(params_of(f), n_hi);
            if (!state_out.empty())
                ktcs::io::write_text(state_out,
                                     ktcs::build_ktcs(params_of(f)).to_json() + "\n");
            if (f.out.empty()) {
                for (const auto& row : table.rows)
                    std::printf("%3d %s\n", static_cast<int>(row[0]),
                                ktcs::io::format_sig(row[1]).c_str());
            } else {
                ManifestScope scope("numdist", "{}", ".");
                ktcs::io::write_csv(f.out, table);
                scope.manifest.outputs.push_back(f.out);
                scope.finish();
            }
        } else if (cmd_mandel->parsed()) {
            KtcsParams prm = params_of(f);
            if (f.z > 0.0) {
                const auto m = ktcs::mandel(prm, f.z);
                std::printf("z=%s Ma=%s Mb=%s Mc=%s (path discrepancy %.2e)\n",
                            ktcs::io::format_sig(f.z).c_str(),
                            ktcs::io::format_sig(m.Ma).c_str(),
                            ktcs::io::format_sig(m.Mb).c_str(),
                            ktcs::io::format_sig(m.Mc).c_str(), m.path_discrepancy);
            } else if (f.z_min > 0.0 && f.z_max > f.z_min) {
                const auto table = ktcs::io::mandel_sweep(prm, f.z_min, f.z_max, f.steps);
                if (f.out.empty())
                    throw ktcs::ValidationError("mandel sweep needs --out");
                ktcs::io::write_csv(f.out, table);
            } else if (cmd_mandel->count("--crossover-mode") == 0) {
                throw ktcs::ValidationError("mandel: pass --z or --z-min/--z-max/--steps");
            }
            if (cmd_mandel->count("--crossover-mode")) {
                const ktcs::ModeId mode = mode_name == "a"   ? ktcs::ModeId::a
                                          : mode_name == "b" ? ktcs::ModeId::b
                                                             : ktcs::ModeId::c;
                const double zc = ktcs::find_crossover(prm, mode, z_hi);
                std::printf("z_cross(%s) = %s\n", mode_name.c_str(),
                            ktcs::io::format_sig(zc).c_str());
            }
        } else if (cmd_csi->parsed()) {
            KtcsParams prm = params_of(f);
            if (f.z > 0.0) {
                const auto c = ktcs::csi_measures(prm, f.z);
                std::printf(
                    "z=%s J_ab=%s J_ac=%s J_bc=%s G_ab=%s G_ac=%s G_bc=%s (path discrepancy "
                    "%.2e)\n",
                    ktcs::io::format_sig(f.z).c_str(), ktcs::io::format_sig(c.J_ab).c_str(),
                    ktcs::io::format_sig(c.J_ac).c_str(), ktcs::io::format_sig(c.J_bc).c_str(),
                    ktcs::io::format_sig(c.G_ab).c_str(), ktcs::io::format_sig(c.G_ac).c_str(),
                    ktcs::io::format_sig(c.G_bc).c_str(), c.path_discrepancy);
            } else {
                if (!(f.z_min > 0.0) || !(f.z_max > f.z_min) || f.out.empty())
                    throw ktcs::ValidationError("csi: pass --z or --z-min/--z-max/--out");
                ktcs::io::write_csv(f.out, ktcs::io::csi_sweep(prm, f.z_min, f.z_max, f.steps));
            }
        } else if (cmd_qfunc->parsed()) {
            const auto files = ktcs::io::qgrid_files(params_of(f), half_width, n_grid);
            ktcs::io::write_text(f.out, files.csv);
            ktcs::io::write_text(f.out + ".meta.json", files.meta_json);
        } else if (cmd_weight->parsed()) {
            if (f.z_min > 0.0 && f.z_max > f.z_min) {
                ktcs::io::Table table;
                table.header = {"x", "W_tilde"};
                const double ratio = std::log(f.z_max / f.z_min);
                for (int i = 0; i < f.steps; ++i) {
                    const double x =
                        f.z_min * std::exp(ratio * i / std::max(1, f.steps - 1));
                    table.rows.push_back({x, ktcs::weight_tilde(x, f.p, f.q)});
                }
                if (f.out.empty()) throw ktcs::ValidationError("weight sweep needs --out");
                ktcs::io::write_csv(f.out, table);
            } else {
                std::printf("W~(%s; p=%d, q=%d) = %s\n", ktcs::io::format_sig(x_value).c_str(),
                            f.p, f.q,
                            ktcs::io::format_sig(ktcs::weight_tilde(x_value, f.p, f.q)).c_str());
            }
        } else if (cmd_unity->parsed()) {
            ktcs::MomentProblem problem;
            problem.p = f.p;
            problem.q = f.q;
            problem.n_max_check = n_max_check;
            problem.tolerance = tolerance;
            const auto report = ktcs::verify_moments(problem);

            const auto dev = ktcs::unity_deviation(f.K, f.p, f.q, 6, 400, 64);
            double worst_unity = 0.0;
            for (const auto& row : dev)
                for (double v : row) worst_unity = std::max(worst_unity, v);

            json out = json::parse(report.to_json());
            out["unity_submatrix_n"] = 6;
            out["unity_worst_deviation"] = worst_unity;
            out["K"] = f.K;
            const std::string text = out.dump(2) + "\n";
            if (f.out.empty())
                std::cout << text;
            else
                ktcs::io::write_text(f.out, text);
        } else if (cmd_carleman->parsed()) {
            const auto r = ktcs::carleman_test(f.K, f.j, f.p, f.q, n_probe);
            std::printf("ratio(n=%lld) = %s, extrapolated = %s, verdict: %s\n",
                        n_probe, ktcs::io::format_sig(r.ratio_at_probe).c_str(),
                        ktcs::io::format_sig(r.estimate).c_str(),
                        r.non_unique ? "non-unique" : "unique");
        } else if (cmd_identity->parsed()) {
            const double residual =
                ktcs::iontrap::verify_laser_identity(identity_nmax, identity_trials, f.seed);
            std::printf("max relative residual over %d vectors at n_max=%d: %s\n",
                        identity_trials, identity_nmax,
                        ktcs::io::format_sig(residual).c_str());
        } else if (cmd_mcwf->parsed()) {
            const auto cfg = ktcs::io::sim_config_from_json(ktcs::io::read_text(f.config_path));
            fs::create_directories(out_dir);
            ManifestScope scope(use_oracle ? "mcwf-oracle" : "mcwf",
                                ktcs::io::sim_config_to_json(cfg), out_dir);
            scope.manifest.seed = cfg.seed;
            if (use_oracle) {
                run_density_job(cfg, scope, out_prefix + "_fid.csv");
            } else {
                run_mcwf_job(cfg, scope, out_prefix + "_fid.csv", out_prefix);
            }
            scope.finish();
        } else if (cmd_figure->parsed()) {
            if (fig_number < 1 || fig_number > 12)
                throw ktcs::ValidationError("figure number must be in 1..12");
            std::string dir = out_dir;
            if (cmd_figure->count("--out-dir") == 0) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "figures/fig%02d", fig_number);
                dir = buf;
            }
            return run_figure(fig_number, find_recipes(recipes, argv[0]), dir);
        }
    } catch (const ktcs::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ktcs::QuadratureNotConverged& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const ktcs::MomentMismatch& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const ktcs::NoSignChange& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const ktcs::StepTooLarge& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const ktcs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
