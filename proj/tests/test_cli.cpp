// Drives the geofreq executable. Its path arrives as GEOFREQ_CLI at compile time.

#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Proc {
    int code;
    std::string out;
};

Proc run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + GEOFREQ_CLI + "\" " + args + " 2>&1";
    Proc p{-1, {}};
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) p.out.append(buf, n);
    const int status = pclose(pipe);
    p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return p;
}

fs::path cli_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("geofreq_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_all(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_all(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    f << s;
}

}  // namespace

TEST_CASE("list names every built-in", "[cli]") {
    const Proc p = run_cli("list");
    CHECK(p.code == 0);
    for (const char* n : {"rc", "rlc", "third-order", "td-monotonic", "td-oscillatory", "td-isotropic",
                          "td-limit-cycle", "td-two-equilibria-a", "td-two-equilibria-b"}) {
        CHECK(p.out.find(std::string(n) + "  ") != std::string::npos);
    }
}

TEST_CASE("run rc writes the CSV and summary", "[cli]") {
    const fs::path d = cli_dir("rc");
    const Proc p = run_cli("run rc --out-dir " + d.string());
    CHECK(p.code == 0);
    const std::string csv = read_all(d / "rc_timeseries.csv");
    CHECK(csv.rfind("t,x1,u1,rho,valid,eig1_re,eig1_im", 0) == 0);
    CHECK(fs::exists(d / "rc_summary.txt"));
}

TEST_CASE("two runs produce byte-identical output", "[cli]") {
    const fs::path a = cli_dir("det_a"), b = cli_dir("det_b");
    REQUIRE(run_cli("run third-order --out-dir " + a.string()).code == 0);
    REQUIRE(run_cli("run third-order --out-dir " + b.string()).code == 0);
    CHECK(read_all(a / "third-order_timeseries.csv") == read_all(b / "third-order_timeseries.csv"));
    CHECK(read_all(a / "third-order_summary.txt") == read_all(b / "third-order_summary.txt"));
}

TEST_CASE("GEOFREQ_OUT sets the default output directory", "[cli]") {
    const fs::path d = cli_dir("env");
    const std::string cmd = "GEOFREQ_OUT=\"" + d.string() + "\" \"" + GEOFREQ_CLI + "\" run rc --t-end 0.5 > /dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(d / "rc_timeseries.csv"));
}

TEST_CASE("concurrent jobs match sequential runs", "[cli]") {
    const fs::path seq = cli_dir("seq"), par = cli_dir("par");
    const std::string names = "rc rlc td-monotonic td-two-equilibria-a";
    REQUIRE(run_cli("run " + names + " --out-dir " + seq.string()).code == 0);
    REQUIRE(run_cli("run " + names + " --jobs 3 --out-dir " + par.string()).code == 0);
    for (const char* n : {"rc", "rlc", "td-monotonic", "td-two-equilibria-a"}) {
        CHECK(read_all(seq / (std::string(n) + "_timeseries.csv")) == read_all(par / (std::string(n) + "_timeseries.csv")));
    }
}

TEST_CASE("run accepts config files and the --no-modal flag", "[cli]") {
    const fs::path d = cli_dir("cfg");
    const Proc shown = run_cli("show rlc");
    REQUIRE(shown.code == 0);
    write_all(d / "mine.cfg", shown.out);
    const Proc p = run_cli("run " + (d / "mine.cfg").string() + " --no-modal --out-dir " + d.string());
    CHECK(p.code == 0);
    const std::string header = read_all(d / "rlc_timeseries.csv").substr(0, 200);
    CHECK(header.find("blk1_rho") == std::string::npos);
    CHECK(run_cli("validate " + (d / "mine.cfg").string()).code == 0);
}

TEST_CASE("exit code 2 when an embedded check fails", "[cli]") {
    const fs::path d = cli_dir("fail");
    std::string cfg = run_cli("show td-oscillatory").out;
    const auto pos = cfg.find("rho_tol = 0.05");
    REQUIRE(pos != std::string::npos);
    cfg.replace(pos, 14, "rho_tol = 1e-12");
    write_all(d / "strict.cfg", cfg);
    const Proc p = run_cli("run " + (d / "strict.cfg").string() + " --out-dir " + d.string());
    CHECK(p.code == 2);
    CHECK(p.out.find("FAIL") != std::string::npos);
}

TEST_CASE("exit code 1 on errors, with line diagnostics", "[cli]") {
    const fs::path d = cli_dir("err");
    write_all(d / "broken.cfg", "[scenario]\nname = b\nsystem = rc\nt_end = oops\n");
    const Proc p = run_cli("run " + (d / "broken.cfg").string() + " --out-dir " + d.string());
    CHECK(p.code == 1);
    CHECK(p.out.find("line 4") != std::string::npos);
    CHECK(p.out.find("t_end") != std::string::npos);
    CHECK(run_cli("run no-such-scenario").code == 1);
    CHECK(run_cli("validate " + (d / "broken.cfg").string()).code == 1);
    CHECK(run_cli("frobnicate").code == 1);
}

TEST_CASE("analyze-matrix prints the modal form", "[cli]") {
    const fs::path d = cli_dir("matrix");
    write_all(d / "third.txt", "3\n0 2 0\n-1 -1 0\n0 0 -1\n");
    const Proc p = run_cli("analyze-matrix " + (d / "third.txt").string());
    CHECK(p.code == 0);
    CHECK(p.out.find("-0.5 + 1.3228756555322954j") != std::string::npos);
    CHECK(p.out.find("G:") != std::string::npos);
    CHECK(p.out.find("residual ||WA - GW||_F") != std::string::npos);

    write_all(d / "rot.txt", "2\n0 -1\n1 0\n");
    const Proc r = run_cli("analyze-matrix " + (d / "rot.txt").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("conjugate pairs: 1") != std::string::npos);

    write_all(d / "jordan.txt", "2\n-1 1\n0 -1\n");
    const Proc j = run_cli("analyze-matrix " + (d / "jordan.txt").string());
    CHECK(j.code == 3);
    CHECK(j.out.find("eigenvalue -1") != std::string::npos);

    write_all(d / "bad.txt", "2\n1 2\n");
    CHECK(run_cli("analyze-matrix " + (d / "bad.txt").string()).code == 1);
}

TEST_CASE("diverging scenarios report the time", "[cli]") {
    const fs::path d = cli_dir("diverge");
    write_all(d / "blowup.cfg",
              "[scenario]\nname = blowup\nsystem = linear\nt_end = 1000\nstep = 0.1\n"
              "[params]\nA = 10\n[initial]\nx0 = 1\n");
    const Proc p = run_cli("run " + (d / "blowup.cfg").string() + " --out-dir " + d.string());
    CHECK(p.code == 1);
    CHECK(p.out.find("diverged at t = ") != std::string::npos);
}
