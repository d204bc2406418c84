#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "ktcs/io.hpp"
#include "ktcs/statistics.hpp"

namespace fs = std::filesystem;
namespace io = ktcs::io;

namespace {
std::string temp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}
}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_sig: 12 significant digits, dot separator") {
    CHECK(io::format_sig(1.0) == "1");
    CHECK(io::format_sig(0.125) == "0.125");
    CHECK(io::format_sig(1.0 / 3.0) == "0.333333333333");
    CHECK(io::format_sig(-2.5e-7) == "-2.5e-07");
}

TEST_CASE("csv writer: header row and row layout") {
    io::Table t;
    t.header = {"a", "b"};
    t.rows = {{1.0, 2.0}, {0.5, -1.0}};
    const std::string path = temp_path("ktcs_io_test.csv");
    io::write_csv(path, t);
    CHECK(io::read_text(path) == "a,b\n1,2\n0.5,-1\n");
    fs::remove(path);
}

TEST_CASE("sweep emitters match pointwise evaluation in order") {
    ktcs::KtcsParams prm;
    prm.xi_mod = 1.0;
    prm.K = 2;
    prm.j = 0;
    prm.p = 1;
    const auto table = io::mandel_sweep(prm, 0.5, 5.0, 10);
    REQUIRE(table.rows.size() == 10);
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const double z = 0.5 + (5.0 - 0.5) * static_cast<double>(i) / 9.0;
        CHECK(table.rows[i][0] == doctest::Approx(z).epsilon(1e-14));
        const auto m = ktcs::mandel(prm, table.rows[i][0]);
        CHECK(table.rows[i][3] == doctest::Approx(m.Mc).epsilon(1e-14));
    }
}

TEST_CASE("stochastic runs are byte-identical under a fixed seed") {
    ktcs::iontrap::SimConfig cfg;
    cfg.xi = {3.0, 0.0};
    cfg.zeta = {0.02, 0.0};
    cfg.t_max = 10.0;
    cfg.n_traj = 20;
    cfg.seed = 31337;
    cfg.checkpoints = {5.0, 10.0};

    const std::string p1 = temp_path("ktcs_run1.csv");
    const std::string p2 = temp_path("ktcs_run2.csv");
    io::write_csv(p1, io::fidelity_table(ktcs::iontrap::mcwf_run(cfg)));
    io::write_csv(p2, io::fidelity_table(ktcs::iontrap::mcwf_run(cfg)));
    CHECK(io::read_text(p1) == io::read_text(p2));

    cfg.seed = 31338;
    io::write_csv(p2, io::fidelity_table(ktcs::iontrap::mcwf_run(cfg)));
    CHECK(io::read_text(p1) != io::read_text(p2));
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("sim config JSON round trip") {
    ktcs::iontrap::SimConfig cfg;
    cfg.xi = {8.0, -1.0};
    cfg.zeta = {0.02, 0.0};
    cfg.p = 1;
    cfg.q = 2;
    cfg.w = 0.25;
    cfg.l = 3;
    cfg.t_max = 55.0;
    cfg.n_traj = 77;
    cfg.seed = 99;
    cfg.checkpoints = {10.0, 55.0};
    const auto back = io::sim_config_from_json(io::sim_config_to_json(cfg));
    CHECK(back.xi == cfg.xi);
    CHECK(back.zeta == cfg.zeta);
    CHECK(back.p == cfg.p);
    CHECK(back.w == cfg.w);
    CHECK(back.l == cfg.l);
    CHECK(back.t_max == cfg.t_max);
    CHECK(back.n_traj == cfg.n_traj);
    CHECK(back.seed == cfg.seed);
    CHECK(back.checkpoints == cfg.checkpoints);

    CHECK_THROWS_AS(io::sim_config_from_json("{not json"), ktcs::ValidationError);
    CHECK_THROWS_AS(io::sim_config_from_json("{\"xi\":[1,0]}"), ktcs::ValidationError);
    // validation applies on load: w out of range
    CHECK_THROWS_AS(
        io::sim_config_from_json(
            R"({"xi":[1,0],"zeta_over_gamma":0.01,"p":0,"q":0,"w":2.0,"l":0,"t_max_gamma":10})"),
        ktcs::ValidationError);
}

TEST_CASE("manifest carries command echo, outputs and version") {
    io::RunManifest m;
    m.command = "mandel";
    m.parameters_json = R"({"K":3})";
    m.seed = 5;
    m.outputs = {"a.csv", "b.csv"};
    m.wall_time_s = 0.25;
    const std::string j = m.to_json();
    CHECK(j.find("\"command\": \"mandel\"") != std::string::npos);
    CHECK(j.find("\"library_version\"") != std::string::npos);
    CHECK(j.find("a.csv") != std::string::npos);
    CHECK(j.find("\"K\": 3") != std::string::npos);
}

TEST_CASE("snapshot table pairs bars with the target distribution") {
    ktcs::iontrap::SimConfig cfg;
    cfg.xi = {3.0, 0.0};
    cfg.zeta = {0.02, 0.0};
    cfg.t_max = 5.0;
    cfg.n_traj = 10;
    cfg.checkpoints = {5.0};
    const auto run = ktcs::iontrap::mcwf_run(cfg);
    ktcs::KtcsParams target;
    target.xi_mod = 3.0;
    target.K = 2;
    target.j = 0;
    const auto t = io::snapshot_table(run.checkpoints.back(), target);
    REQUIRE(!t.rows.empty());
    CHECK(t.header[3] == "P_n_target");
    CHECK(t.rows[0][3] ==
          doctest::Approx(ktcs::number_distribution(target, 0)).epsilon(1e-12));
    CHECK(t.rows[1][3] == 0.0);  // wrong parity
}

}  // TEST_SUITE
