#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "modcav/scenarios.hpp"

using namespace modcav;
using ops::Matrix;
using scen::ScenarioSpec;

namespace {

constexpr double pi = std::numbers::pi;

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::filesystem::path fresh_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("modcav_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Small, fast scenario used by the runner tests.
ScenarioSpec tiny_spec(const std::string& name) {
    ScenarioSpec s;
    s.name = name;
    s.config.g = {0.05, 0.05};
    s.config.kappa = 0.02;
    s.config.modulation = {model::mirror_to_mirror(1.0), model::mirror_to_mirror(1.0)};
    s.config.n_fock = 3;
    s.initial_state = scen::InitialState::ge0;
    s.t_final = 1.0;
    s.samples = 7;
    return s;
}

}  // namespace

// ---- presets ----

TEST_CASE("all presets construct and validate") {
    REQUIRE(scen::preset_names().size() == 13);
    for (const auto& name : scen::preset_names()) {
        const auto s = scen::preset(name);
        CHECK(s.name == name);
        CHECK_NOTHROW(scen::validate(s));
        CHECK(!scen::expand_sweep(s).empty());
    }
    CHECK_THROWS_AS(scen::preset("fig9z"), std::invalid_argument);
}

TEST_CASE("preset parameters spot checks") {
    const auto fig2a = scen::preset("fig2a");
    CHECK(fig2a.config.g[0] == 0.02);
    CHECK(fig2a.config.kappa == 0.002);
    CHECK(fig2a.config.gamma[0] == 0.002);
    CHECK(fig2a.config.gamma_phi[0] == Catch::Approx(0.002 / 0.67));
    CHECK(fig2a.t_final == 40.0);
    CHECK(fig2a.samples == 801);
    CHECK(fig2a.initial_state == scen::InitialState::gg0);
    CHECK(scen::expand_sweep(fig2a).size() == 6);

    const auto fig2b = scen::preset("fig2b");
    CHECK(fig2b.config.kappa == 0.2);

    const auto fig3a = scen::preset("fig3a");
    CHECK(fig3a.config.g[0] == 0.0);  // only the second qubit couples
    CHECK(fig3a.config.g[1] == 0.02);
    CHECK(fig3a.initial_state == scen::InitialState::ge0);
    CHECK(scen::expand_sweep(fig3a).size() == 5);

    const auto fig4b = scen::preset("fig4b");
    CHECK(fig4b.config.kappa == 0.2);
    CHECK(fig4b.config.modulation[1].omega_d == 1.0);

    const auto fig5a = scen::preset("fig5a");
    const auto fig5b = scen::preset("fig5b");
    CHECK(fig5a.config.omega_q[0] == Catch::Approx(1.1));
    CHECK(fig5a.config.modulation[0].delta_f == Catch::Approx(pi / 4));
    CHECK(fig5b.config.modulation[0].delta_f == Catch::Approx(pi / 16));
    CHECK(fig5b.config.g[0] == 0.01);
    CHECK(fig5b.config.kappa == 0.1);
    CHECK(fig5b.sweep.empty());

    const auto s1a = scen::preset("s1a");
    CHECK(s1a.config.omega == Catch::Approx(0.4));
    const auto s1_points = scen::expand_sweep(s1a);
    REQUIRE(s1_points.size() == 3);  // zipped axis moves both drives together
    CHECK(s1_points[1].at(0).first == "modulation.1.omega_d");
    CHECK(s1_points[1].at(1).first == "modulation.2.omega_d");
    CHECK(s1_points[1].at(0).second == s1_points[1].at(1).second);

    const auto s3 = scen::preset("s3");
    CHECK(scen::expand_sweep(s3).size() == 8);  // kappa x initial state x motion
    CHECK(s3.config.gamma[0] == 0.001);
}

// ---- field access and config round trip ----

TEST_CASE("set_field and get_field cover the schema") {
    ScenarioSpec s;
    scen::set_field(s, "system.omega_q.2", "1.25");
    CHECK(s.config.omega_q[1] == 1.25);
    scen::set_field(s, "modulation.2.delta_f", "0.5");
    CHECK(s.config.modulation[1].delta_f == 0.5);
    scen::set_field(s, "modulation.1.enabled", "false");
    CHECK_FALSE(s.config.modulation[0].enabled);
    scen::set_field(s, "scenario.initial_state", "pp0");
    CHECK(s.initial_state == scen::InitialState::pp0);
    scen::set_field(s, "scenario.samples", "21");
    CHECK(s.samples == 21);
    scen::set_field(s, "scenario.output_path", "/tmp/somewhere");
    CHECK(s.output_path == "/tmp/somewhere");

    CHECK(scen::get_field(s, "system.omega_q.2") == "1.25");
    CHECK(scen::get_field(s, "modulation.1.enabled") == "false");
    CHECK(scen::get_field(s, "scenario.initial_state") == "pp0");

    CHECK_THROWS_AS(scen::set_field(s, "system.nonsense", "1"), std::invalid_argument);
    CHECK_THROWS_AS(scen::get_field(s, "modulation.3.f0"), std::invalid_argument);
    CHECK_THROWS_AS(scen::set_field(s, "system.kappa", "abc"), std::invalid_argument);
    CHECK_THROWS_AS(scen::set_field(s, "scenario.samples", "2.5"), std::invalid_argument);
    CHECK_THROWS_AS(scen::set_field(s, "modulation.1.enabled", "maybe"), std::invalid_argument);
    CHECK_THROWS_AS(scen::set_field(s, "scenario.initial_state", "xx0"), std::invalid_argument);

    CHECK(scen::is_sweepable_field("system.g.1"));
    CHECK(scen::is_sweepable_field("scenario.initial_state"));
    CHECK_FALSE(scen::is_sweepable_field("scenario.name"));
    CHECK_FALSE(scen::is_sweepable_field("bogus.key"));
}

TEST_CASE("every preset round-trips through the config format") {
    for (const auto& name : scen::preset_names()) {
        const auto original = scen::preset(name);
        const std::string text = scen::serialize_config(original);
        const auto reparsed = scen::parse_config(text);
        CHECK(scen::serialize_config(reparsed) == text);
        CHECK(reparsed.name == original.name);
        CHECK(reparsed.samples == original.samples);
        CHECK(reparsed.t_final == original.t_final);
        CHECK(reparsed.config.omega == original.config.omega);
        CHECK(reparsed.config.gamma_phi[1] == original.config.gamma_phi[1]);
        CHECK(reparsed.config.modulation[0].f0 == original.config.modulation[0].f0);
        REQUIRE(reparsed.sweep.size() == original.sweep.size());
        for (size_t a = 0; a < original.sweep.size(); ++a) {
            CHECK(reparsed.sweep[a].fields == original.sweep[a].fields);
            CHECK(reparsed.sweep[a].values == original.sweep[a].values);
        }
    }
}

TEST_CASE("config parser handles comments and rejects malformed input") {
    const auto spec = scen::parse_config(
        "# leading comment\n"
        "scenario.name = demo   # trailing comment\n"
        "\n"
        "system.g.1 = 0.02\n"
        "sweep.1.fields = modulation.1.omega_d\n"
        "sweep.1.values = 0, 1, 2\n");
    CHECK(spec.name == "demo");
    CHECK(spec.config.g[0] == 0.02);
    REQUIRE(spec.sweep.size() == 1);
    CHECK(spec.sweep[0].values.size() == 3);

    CHECK_THROWS_AS(scen::parse_config("just some words\n"), std::invalid_argument);
    CHECK_THROWS_AS(scen::parse_config("unknown.key = 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(scen::parse_config("system.kappa = -1\n"), std::invalid_argument);
    CHECK_THROWS_AS(scen::parse_config("sweep.1.fields = system.g.1\n"
                                       "sweep.1.values = 1:2, 3:4\n"),
                    std::invalid_argument);  // arity mismatch
    CHECK_THROWS_AS(scen::parse_config("sweep.1.rows = 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(scen::parse_config("sweep.0.fields = system.g.1\n"
                                       "sweep.0.values = 1\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(scen::parse_config("sweep.1.fields = scenario.name\n"
                                       "sweep.1.values = a,b\n"),
                    std::invalid_argument);  // not sweepable
}

// ---- initial states and sweep expansion ----

TEST_CASE("initial densities are the named product states") {
    model::SystemConfig cfg;
    cfg.n_fock = 2;
    const Matrix gg = scen::initial_density(cfg, scen::InitialState::gg0);
    CHECK(gg(model::basis_index(cfg, 0, 0, 0), model::basis_index(cfg, 0, 0, 0)).real() == 1.0);
    CHECK(std::abs(gg.trace() - ops::Complex(1.0)) < 1e-15);

    const Matrix eg = scen::initial_density(cfg, scen::InitialState::eg0);
    CHECK(eg(model::basis_index(cfg, 1, 0, 0), model::basis_index(cfg, 1, 0, 0)).real() == 1.0);

    const Matrix pp = scen::initial_density(cfg, scen::InitialState::pp0);
    for (int q1 = 0; q1 < 2; ++q1)
        for (int q2 = 0; q2 < 2; ++q2) {
            const int i = model::basis_index(cfg, q1, q2, 0);
            CHECK(pp(i, i).real() == Catch::Approx(0.25));
        }
    CHECK(obs::purity(pp) == Catch::Approx(1.0).margin(1e-14));  // pure superposition

    CHECK(scen::to_string(scen::InitialState::pp0) == "pp0");
    CHECK(scen::initial_state_from_string("eg0") == scen::InitialState::eg0);
    CHECK_THROWS_AS(scen::initial_state_from_string("bad"), std::invalid_argument);
}

TEST_CASE("sweep expansion crosses axes and zips fields") {
    ScenarioSpec s = tiny_spec("cross");
    CHECK(scen::expand_sweep(s).size() == 1);  // no sweep -> single point
    CHECK(scen::expand_sweep(s)[0].empty());

    scen::SweepAxis a;
    a.fields = {"system.kappa"};
    a.values = {{"0.1"}, {"0.2"}};
    scen::SweepAxis b;
    b.fields = {"system.g.1", "system.g.2"};
    b.values = {{"0.01", "0.02"}, {"0.03", "0.04"}, {"0.05", "0.06"}};
    s.sweep = {a, b};
    const auto points = scen::expand_sweep(s);
    REQUIRE(points.size() == 6);
    // first axis varies slowest; zipped fields stay paired
    CHECK(points[0] == scen::PointCoords{{"system.kappa", "0.1"},
                                         {"system.g.1", "0.01"},
                                         {"system.g.2", "0.02"}});
    CHECK(points[5] == scen::PointCoords{{"system.kappa", "0.2"},
                                         {"system.g.1", "0.05"},
                                         {"system.g.2", "0.06"}});
}

// ---- runner: CSV + manifest ----

TEST_CASE("run writes per-point CSVs and a manifest with diagnostics") {
    auto spec = tiny_spec("runner");
    scen::SweepAxis ax;
    ax.fields = {"modulation.2.omega_d"};
    ax.values = {{"0"}, {"1"}};
    spec.sweep = {ax};
    const auto dir = fresh_dir("runner");
    spec.output_path = dir.string();

    const auto summary = scen::run(spec);
    CHECK_FALSE(summary.any_failed);
    REQUIRE(summary.points.size() == 2);
    CHECK(summary.output_dir == dir.string());

    for (const auto& p : summary.points) {
        CHECK_FALSE(p.failed);
        CHECK(p.trace_drift < 1e-10);
        CHECK(p.hermiticity_defect < 1e-12);
        CHECK(p.min_eigenvalue > -1e-9);
        CHECK(p.fock_delta < 1e-3);
        CHECK(p.error.empty());
        const auto rows = lines_of(slurp(dir / p.csv_file));
        REQUIRE(rows.size() == 8);  // header + samples
        CHECK(rows[0] == "time,concurrence,p_q1,p_q2,n_photons,purity");
        // 12 significant digits, comma-separated, no trailing delimiter
        CHECK(rows[2].substr(0, 15) == "0.166666666667,");
        CHECK(rows[1].back() != ',');
        for (size_t r = 1; r < rows.size(); ++r)
            CHECK(std::count(rows[r].begin(), rows[r].end(), ',') == 5);
    }

    const std::string manifest = slurp(summary.manifest_path);
    CHECK(manifest.find("scenario.name = runner") != std::string::npos);
    CHECK(manifest.find("points = 2") != std::string::npos);
    CHECK(manifest.find("point.0.coord.modulation.2.omega_d = 0") != std::string::npos);
    CHECK(manifest.find("point.1.coord.modulation.2.omega_d = 1") != std::string::npos);
    CHECK(manifest.find("point.0.csv = runner_point0.csv") != std::string::npos);
    CHECK(manifest.find("point.0.trace_drift = ") != std::string::npos);
    CHECK(manifest.find("point.0.hermiticity_defect = ") != std::string::npos);
    CHECK(manifest.find("point.0.fock_delta = ") != std::string::npos);
    CHECK(manifest.find("point.0.status = OK") != std::string::npos);
    CHECK(manifest.find("point.1.status = OK") != std::string::npos);
    CHECK(manifest.find("FAILED") == std::string::npos);
}

TEST_CASE("reruns are deterministic byte for byte") {
    auto spec = tiny_spec("repeat");
    const auto dir1 = fresh_dir("repeat1");
    const auto dir2 = fresh_dir("repeat2");
    spec.output_path = dir1.string();
    scen::run(spec);
    spec.output_path = dir2.string();
    scen::run(spec);
    CHECK(slurp(dir1 / "repeat_point0.csv") == slurp(dir2 / "repeat_point0.csv"));
}

TEST_CASE("truncation failure is flagged FAILED in the manifest") {
    // deliberately starved truncation: strong resonant coupling with n_fock=2
    auto spec = tiny_spec("starved");
    spec.config.g = {0.4, 0.4};
    spec.config.n_fock = 2;
    spec.t_final = 3.0;
    spec.samples = 7;
    const auto dir = fresh_dir("starved");
    spec.output_path = dir.string();

    const auto summary = scen::run(spec);
    REQUIRE(summary.points.size() == 1);
    CHECK(summary.any_failed);
    CHECK(summary.points[0].failed);
    CHECK(summary.points[0].fock_delta > 1e-3);
    CHECK(slurp(summary.manifest_path).find("point.0.status = FAILED") != std::string::npos);
}

TEST_CASE("a point that cannot run is recorded and does not abort the rest") {
    auto spec = tiny_spec("mixedbag");
    scen::SweepAxis ax;
    ax.fields = {"system.g.1"};
    ax.values = {{"-1"}, {"0.05"}};  // first point fails validation
    spec.sweep = {ax};
    const auto dir = fresh_dir("mixedbag");
    spec.output_path = dir.string();

    const auto summary = scen::run(spec);
    REQUIRE(summary.points.size() == 2);
    CHECK(summary.any_failed);
    CHECK(summary.points[0].failed);
    CHECK(summary.points[0].csv_file.empty());
    CHECK_FALSE(summary.points[0].error.empty());
    CHECK_FALSE(summary.points[1].failed);
    CHECK(std::filesystem::exists(dir / summary.points[1].csv_file));
    const std::string manifest = slurp(summary.manifest_path);
    CHECK(manifest.find("point.0.status = FAILED") != std::string::npos);
    CHECK(manifest.find("point.0.error = ") != std::string::npos);
}

TEST_CASE("output directory resolution: explicit path, environment, default") {
    ScenarioSpec s = tiny_spec("outdir");
    s.output_path = "/explicit/path";
    CHECK(scen::output_directory(s) == "/explicit/path");

    s.output_path.clear();
    setenv("MODCAV_OUTPUT_DIR", "/env/override", 1);
    CHECK(scen::output_directory(s) == "/env/override");
    unsetenv("MODCAV_OUTPUT_DIR");
    CHECK(scen::output_directory(s) == "out");
}

TEST_CASE("environment override steers run output") {
    auto spec = tiny_spec("envrun");
    spec.samples = 3;
    const auto dir = fresh_dir("envrun");
    setenv("MODCAV_OUTPUT_DIR", dir.string().c_str(), 1);
    const auto summary = scen::run(spec);
    unsetenv("MODCAV_OUTPUT_DIR");
    CHECK(summary.output_dir == dir.string());
    CHECK(std::filesystem::exists(dir / "envrun_manifest.txt"));
    CHECK(std::filesystem::exists(dir / "envrun_point0.csv"));
}

// ---- map and convergence runners ----

TEST_CASE("sweep_concurrence_map writes the grid in long format") {
    auto spec = tiny_spec("map");
    const auto dir = fresh_dir("map");
    spec.output_path = dir.string();
    const auto path = scen::sweep_concurrence_map(spec, {0.0, 1.0}, {1.0}, spec.t_final);
    const auto rows = lines_of(slurp(path));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "omega_d1,omega_d2,c_at_probe,c_max");
    CHECK(rows[1].substr(0, 4) == "0,1,");
    CHECK(rows[2].substr(0, 4) == "1,1,");
    // c_max bounds c_at_probe per cell
    for (int r = 1; r <= 2; ++r) {
        std::istringstream ss(rows[r]);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        REQUIRE(vals.size() == 4);
        CHECK(vals[3] >= vals[2] - 1e-12);
        CHECK(vals[2] >= 0.0);
    }

    CHECK_THROWS_AS(scen::sweep_concurrence_map(spec, {3.0}, {0.0}, 1.0), std::out_of_range);
    CHECK_THROWS_AS(scen::sweep_concurrence_map(spec, {1.0}, {}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(scen::sweep_concurrence_map(spec, {1.0}, {1.0}, 99.0), std::invalid_argument);
}

TEST_CASE("convergence report on an uncoupled scenario has zero deltas") {
    auto spec = tiny_spec("conv");
    spec.config.g = {0.0, 0.0};
    spec.config.kappa = 0.0;
    const auto dir = fresh_dir("conv");
    spec.output_path = dir.string();
    const auto report = scen::convergence_report(spec);

    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].label == "fock_plus_5");
    CHECK(report.rows[1].label == "half_tolerance");
    CHECK(report.rows[2].label == "combined");
    for (const auto& row : report.rows) {
        CHECK(row.d_concurrence < 1e-12);
        CHECK(row.d_p_q1 < 1e-12);
        CHECK(row.d_p_q2 < 1e-12);
        CHECK(row.d_n_photons < 1e-12);
        CHECK(row.d_purity < 1e-12);
    }
    const std::string text = slurp(report.path);
    CHECK(text.find("baseline.concurrence = ") != std::string::npos);
    CHECK(text.find("fock_plus_5.delta.n_photons = ") != std::string::npos);
    CHECK(text.find("half_tolerance.delta.purity = ") != std::string::npos);
    CHECK(text.find("combined.delta.concurrence = ") != std::string::npos);
}

TEST_CASE("convergence report on a coupled scenario stays self-consistent") {
    auto spec = tiny_spec("convc");
    const auto dir = fresh_dir("convc");
    spec.output_path = dir.string();
    const auto report = scen::convergence_report(spec);
    CHECK(report.baseline.pur <= 1.0 + 1e-9);
    for (const auto& row : report.rows) CHECK(row.d_concurrence <= 1e-4);
}
