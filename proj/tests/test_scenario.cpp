#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "geofreq/pipeline.hpp"
#include "geofreq/scenario.hpp"
#include "support.hpp"

using namespace geofreq;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("geofreq_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

// random double with a random exponent, so shortest formatting gets exercised
double awkward(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> m(0.1, 10.0);
    std::uniform_int_distribution<int> e(-12, 12);
    return m(rng) * std::pow(10.0, e(rng));
}

Scenario random_scenario(std::mt19937_64& rng, int i) {
    Scenario s;
    s.name = "gen-" + std::to_string(i);
    if (i % 2) s.description = "generated scenario " + std::to_string(i);
    switch (i % 5) {
    case 0: s.system = RcParams{awkward(rng), awkward(rng), awkward(rng)}; break;
    case 1: s.system = RlcParams{awkward(rng), awkward(rng), awkward(rng), awkward(rng)}; break;
    case 2:
        s.system = ThirdOrderParams{awkward(rng), awkward(rng), awkward(rng), awkward(rng), awkward(rng), awkward(rng)};
        break;
    case 3: {
        TunnelDiodeParams p;
        p.L = awkward(rng);
        p.V_dc = awkward(rng);
        p.diode_poly = {awkward(rng), -awkward(rng), awkward(rng)};
        p.v_max = 1.0 + awkward(rng);
        s.system = p;
        break;
    }
    default: {
        const Eigen::Index n = 1 + i % 4;
        s.system = LinearParams{testsupport::random_mat(rng, n), testsupport::random_vec(rng, n)};
    }
    }
    s.x0 = testsupport::random_vec(rng, static_cast<Eigen::Index>(system_dim(s.system)), 1e-3);
    s.t_end = awkward(rng);
    s.step = awkward(rng);
    s.analysis.modal = i % 3 == 0;
    s.analysis.check = static_cast<CheckKind>(i % 3);
    s.analysis.tail_window = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    s.analysis.rho_tol = awkward(rng);
    s.analysis.omega_tol = awkward(rng);
    s.analysis.min_sign_changes = i % 4;
    s.analysis.transient_fraction = 0.3 + 0.01 * i;
    s.analysis.loop_tol = awkward(rng);
    s.analysis.periodicity_tol = awkward(rng);
    if (i % 7 == 0) s.output_prefix = "out_" + std::to_string(i);
    return s;
}

}  // namespace

TEST_CASE("built-in scenarios are valid and round-trip through the config format", "[scenario]") {
    const auto all = builtin_scenarios();
    REQUIRE(all.size() == 9);
    for (const auto& s : all) {
        INFO(s.name);
        CHECK_NOTHROW(validate_scenario(s));
        const Scenario back = parse_config(to_config(s));
        CHECK(back == s);
        CHECK(to_config(back) == to_config(s));
    }
    for (const char* n : {"rc", "rlc", "third-order", "td-monotonic", "td-oscillatory", "td-isotropic",
                          "td-limit-cycle", "td-two-equilibria-a", "td-two-equilibria-b"}) {
        CHECK(find_builtin(n).has_value());
    }
    CHECK_FALSE(find_builtin("nope").has_value());
}

TEST_CASE("generated scenarios round-trip losslessly", "[scenario][property]") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 200; ++i) {
        const Scenario s = random_scenario(rng, i);
        const std::string text = to_config(s);
        INFO(text);
        CHECK(parse_config(text) == s);
    }
}

TEST_CASE("config comments, spacing and defaults", "[scenario]") {
    const Scenario s = parse_config(R"(
# hand-written
[scenario]
name=demo
system   =   linear
t_end = 4

; matrix rows separated by semicolons
[params]
A = 0 1; -1 -0.5

[initial]
x0 = 1 0
)");
    CHECK(s.name == "demo");
    CHECK(s.step == 1e-3);
    const auto& lp = std::get<LinearParams>(s.system);
    CHECK(lp.A(1, 1) == -0.5);
    CHECK(lp.b.isZero());
    CHECK(s.analysis.check == CheckKind::None);
    CHECK(s.analysis.tail_window == 0.2);
    CHECK(s.prefix() == "demo");
}

TEST_CASE("parse errors carry line and field", "[scenario]") {
    auto error_of = [](const std::string& text) -> std::pair<int, std::string> {
        try {
            parse_config(text);
        } catch (const ParseError& e) {
            return {e.line, e.field};
        }
        return {-1, ""};
    };
    const std::string head = "[scenario]\nname = x\nsystem = rc\nt_end = 1\n[params]\n";
    CHECK(error_of(head + "R = 1\nC = abc\nV_dc = 1\n[initial]\nx0 = 0\n") == std::pair<int, std::string>{7, "C"});
    CHECK(error_of(head + "R = 1\nC = 1\nV_dc = 1\nbogus = 2\n[initial]\nx0 = 0\n") ==
          std::pair<int, std::string>{9, "bogus"});
    CHECK(error_of(head + "R = 1\nC = 1\nV_dc = 1\n[initial]\nx0 = 0 1\n") == std::pair<int, std::string>{10, "x0"});
    CHECK(error_of(head + "R = 1\nR = 2\n") == std::pair<int, std::string>{7, "R"});
    CHECK(error_of(head + "R = 1\nV_dc = 1\n[initial]\nx0 = 0\n").second == "C");
    CHECK(error_of("[nowhere]\n").first == 1);
    CHECK(error_of("name = x\n").first == 1);
    CHECK(error_of("[scenario]\nname = x\nsystem = warp\nt_end = 1\n") == std::pair<int, std::string>{3, "system"});
    CHECK(error_of("[scenario]\nname = x\nsystem = linear\nt_end = 1\n[params]\nA = 1 2; 3\n").first == 6);
    CHECK(error_of(head + "R = 1\nC = 1\nV_dc = 1\n[initial]\nx0 = 0\n[analysis]\ncheck = maybe\n").second == "check");
    CHECK(error_of(head + "R = 1\nC = 1\nV_dc = 1\n[initial]\nx0 = 0\n[analysis]\nmodal = yes\n").second == "modal");
}

TEST_CASE("semantic validation", "[scenario]") {
    Scenario s = *find_builtin("rc");
    s.system = RcParams{-1.0, 1.0, 1.0};
    CHECK_THROWS_AS(validate_scenario(s), InvalidParameter);
    s = *find_builtin("rc");
    s.name = "bad/name";
    CHECK_THROWS_AS(validate_scenario(s), InvalidParameter);
    s = *find_builtin("rc");
    s.analysis.tail_window = 1.5;
    CHECK_THROWS_AS(validate_scenario(s), InvalidParameter);
    s = *find_builtin("td-monotonic");
    std::get<TunnelDiodeParams>(s.system).diode_poly = {1.0};
    CHECK_THROWS_AS(validate_scenario(s), InvalidParameter);
}

TEST_CASE("CSV schema for a scalar system has no omega column", "[scenario][cli]") {
    RunOptions o;
    o.write_files = false;
    const RunResult r = run_scenario(*find_builtin("rc"), o);
    const std::string csv = timeseries_csv(r.trajectory, r.series);
    CHECK(first_line(csv) == "t,x1,u1,rho,valid,eig1_re,eig1_im,blk1_rho,blk1_omega");
    o.no_modal = true;
    const RunResult r2 = run_scenario(*find_builtin("rc"), o);
    CHECK(first_line(timeseries_csv(r2.trajectory, r2.series)) == "t,x1,u1,rho,valid,eig1_re,eig1_im");
    CHECK(r.check.passed);
}

TEST_CASE("CSV rows parse back to the analysis values", "[scenario][cli]") {
    RunOptions o;
    o.write_files = false;
    o.t_end = 2.0;
    const RunResult r = run_scenario(*find_builtin("third-order"), o);
    const std::string csv = timeseries_csv(r.trajectory, r.series);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line ==
          "t,x1,x2,x3,u1,u2,u3,rho,omega_norm,valid,eig1_re,eig1_im,eig2_re,eig2_im,eig3_re,eig3_im,"
          "blk1_rho,blk1_omega,blk2_rho,blk2_omega");
    std::size_t k = 0;
    while (std::getline(in, line)) {
        std::vector<double> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(std::stod(cell));
        REQUIRE(cells.size() == 20);
        CHECK(cells[0] == r.trajectory.times[k]);
        CHECK(cells[4] == r.trajectory.velocities[k](0));
        CHECK(cells[7] == r.series.rho[k]);
        CHECK(cells[8] == r.series.omega_norm[k]);
        CHECK(cells[9] == 1.0);
        ++k;
    }
    CHECK(k == r.trajectory.size());
}

TEST_CASE("degenerate samples are written as nan with valid = 0", "[scenario][cli]") {
    Scenario s;
    s.name = "still";
    s.system = LinearParams{-Mat::Identity(2, 2), Vec::Zero(2)};
    s.x0 = Vec::Zero(2);
    s.t_end = 0.01;
    RunOptions o;
    o.write_files = false;
    const RunResult r = run_scenario(s, o);
    const std::string csv = timeseries_csv(r.trajectory, r.series);
    const std::string row = csv.substr(csv.find('\n') + 1);
    CHECK(first_line(row).find(",nan,nan,0,") != std::string::npos);
}

TEST_CASE("summary reports the modal form, forecast and checks", "[scenario][cli]") {
    const fs::path dir = scratch_dir("summary");
    RunOptions o;
    o.out_dir = dir;
    const RunResult r = run_scenario(*find_builtin("third-order"), o);
    CHECK(fs::exists(dir / "third-order_timeseries.csv"));
    const std::string summary = slurp(dir / "third-order_summary.txt");
    CHECK(summary.find("G:\n    -1 0 0\n    0 -0.5 -1.3228756555322954\n    0 1.3228756555322954 -0.5\n") !=
          std::string::npos);
    CHECK(summary.find("check: tail PASS") != std::string::npos);
    CHECK(summary.find("rho target: -0.5") != std::string::npos);
    CHECK(r.check.passed);
}

TEST_CASE("limit-cycle summary includes period and loop integral", "[scenario][cli]") {
    RunOptions o;
    o.write_files = false;
    const RunResult r = run_scenario(*find_builtin("td-limit-cycle"), o);
    REQUIRE(r.cycle.has_value());
    CHECK(r.check.passed);
    const std::string summary = summary_text(r);
    CHECK(summary.find("period: ") != std::string::npos);
    CHECK(summary.find("integral of rho over one period: ") != std::string::npos);
}

TEST_CASE("embedded checks can fail", "[scenario]") {
    Scenario s = *find_builtin("td-oscillatory");
    s.analysis.rho_tol = 1e-9;
    RunOptions o;
    o.write_files = false;
    const RunResult r = run_scenario(s, o);
    CHECK_FALSE(r.check.passed);
    CHECK(r.check.detail.find("rho") != std::string::npos);

    Scenario lc = *find_builtin("td-monotonic");
    lc.analysis.check = CheckKind::LimitCycle;
    CHECK_FALSE(run_scenario(lc, o).check.passed);
}

TEST_CASE("command-line overrides apply", "[scenario]") {
    RunOptions o;
    o.write_files = false;
    o.step = 0.01;
    o.t_end = 1.0;
    const RunResult r = run_scenario(*find_builtin("rlc"), o);
    CHECK(r.trajectory.size() == 101);
    CHECK(r.scenario.step == 0.01);
}

TEST_CASE("matrix files", "[scenario]") {
    const Mat A = parse_matrix("# third order\n3\n0 2 0\n-1 -1 0\n\n0 0 -1\n");
    CHECK(A(0, 1) == 2.0);
    CHECK(A(2, 2) == -1.0);
    CHECK(parse_matrix(matrix_file_text(A)) == A);
    CHECK_THROWS_AS(parse_matrix(""), ParseError);
    CHECK_THROWS_AS(parse_matrix("2\n1 2\n"), ParseError);
    CHECK_THROWS_AS(parse_matrix("2\n1 2\n3\n"), ParseError);
    CHECK_THROWS_AS(parse_matrix("x\n1\n"), ParseError);
    try {
        parse_matrix("2\n1 2\n3 q\n");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
    const std::string report = analyze_matrix_report(A);
    CHECK(report.find("-0.5 + 1.3228756555322954j") != std::string::npos);
    CHECK(report.find("D:") != std::string::npos);
    CHECK(report.find("Q:") != std::string::npos);
}
