#pragma once

// Scenario execution: integrate, analyze, check, and render the CSV and
// summary outputs. Also the matrix file reader and report used by
// `geofreq analyze-matrix`.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "geofreq/analysis.hpp"
#include "geofreq/dynsys.hpp"
#include "geofreq/errors.hpp"
#include "geofreq/format.hpp"
#include "geofreq/modal.hpp"
#include "geofreq/scenario.hpp"

namespace geofreq {

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::optional<double> step;
    std::optional<double> t_end;
    bool no_modal = false;
    bool write_files = true;
};

struct CheckOutcome {
    CheckKind kind = CheckKind::None;
    bool passed = true;
    std::string detail;
};

struct RunResult {
    Scenario scenario;  // after command-line overrides
    Trajectory trajectory;
    AnalysisSeries series;
    std::optional<Vec> equilibrium;
    std::optional<Spectrum> equilibrium_spectrum;
    std::optional<AsymptoteForecast> forecast;
    std::optional<TailReport> tail;
    std::optional<LimitCycleReport> cycle;
    CheckOutcome check;
    std::vector<std::string> notes;
    std::filesystem::path csv_path;
    std::filesystem::path summary_path;
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string timeseries_header(std::size_t n, const AnalysisSeries& s) {
    std::string h = "t";
    for (std::size_t i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
    for (std::size_t i = 1; i <= n; ++i) h += ",u" + std::to_string(i);
    h += ",rho";
    if (n >= 2) h += ",omega_norm";
    h += ",valid";
    for (std::size_t j = 1; j <= n; ++j) h += ",eig" + std::to_string(j) + "_re,eig" + std::to_string(j) + "_im";
    for (std::size_t b = 1; b <= s.blocks.size(); ++b) {
        h += ",blk" + std::to_string(b) + "_rho,blk" + std::to_string(b) + "_omega";
    }
    return h;
}

inline std::string timeseries_csv(const Trajectory& tr, const AnalysisSeries& s) {
    const std::size_t n = tr.dim();
    std::string out = timeseries_header(n, s);
    out += '\n';
    out.reserve(out.size() + tr.size() * (2 + 6 * n + s.blocks.size() * 2) * 24);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        fmt::append(out, tr.times[k]);
        for (Eigen::Index i = 0; i < tr.states[k].size(); ++i) {
            out += ',';
            fmt::append(out, tr.states[k](i));
        }
        for (Eigen::Index i = 0; i < tr.velocities[k].size(); ++i) {
            out += ',';
            fmt::append(out, tr.velocities[k](i));
        }
        out += ',';
        fmt::append(out, s.rho[k]);
        if (n >= 2) {
            out += ',';
            fmt::append(out, s.omega_norm[k]);
        }
        out += s.valid[k] ? ",1" : ",0";
        for (std::size_t j = 0; j < n; ++j) {
            out += ',';
            fmt::append(out, s.eig_re[j][k]);
            out += ',';
            fmt::append(out, s.eig_im[j][k]);
        }
        for (const auto& b : s.blocks) {
            out += ',';
            fmt::append(out, b.rho[k]);
            out += ',';
            fmt::append(out, b.omega[k]);
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Summary
// ---------------------------------------------------------------------------

namespace detail {

inline void line(std::string& out, std::string_view key, std::string_view value, std::string_view indent = "") {
    out += indent;
    out += key;
    out += ": ";
    out += value;
    out += '\n';
}

inline std::string spectrum_lines(const CVec& eigs, std::string_view indent) {
    std::string s;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        s += indent;
        s += fmt::complex(eigs(i));
        s += '\n';
    }
    return s;
}

}  // namespace detail

inline std::string modal_report(const RealModalForm& f, std::string_view indent = "") {
    using fmt::num;
    const std::string in2 = std::string(indent) + "  ";
    std::string out;
    out += indent;
    out += "eigenvalues:\n";
    out += detail::spectrum_lines(f.spectrum.eigenvalues, in2);
    detail::line(out, "real eigenvalues", std::to_string(f.spectrum.real_count()), indent);
    detail::line(out, "conjugate pairs", std::to_string(f.spectrum.pair_count()), indent);
    detail::line(out, "eigenvector condition", num(f.spectrum.eigvec_condition), indent);
    out += indent;
    out += "W:\n";
    out += fmt::matrix(f.W, in2);
    out += indent;
    out += "G:\n";
    out += fmt::matrix(f.G, in2);
    detail::line(out, "residual ||WA - GW||_F", num(f.residual), indent);
    detail::line(out, "relative residual", num(f.relative_residual), indent);
    detail::line(out, "W condition", num(f.w_condition), indent);
    if (f.warning) detail::line(out, "warning", *f.warning, indent);
    std::size_t pair_no = 0;
    for (const auto& b : f.blocks) {
        if (b.kind != BlockDesc::Kind::Pair) continue;
        ++pair_no;
        const auto dq = dq_split(f.G.block(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.offset), 2, 2));
        out += indent;
        out += "pair " + std::to_string(pair_no) + " (alpha " + num(b.mu_or_alpha) + ", beta " + num(b.beta) + "):\n";
        out += in2 + "D:\n" + fmt::matrix(dq.D, in2 + "  ");
        out += in2 + "Q:\n" + fmt::matrix(dq.Q, in2 + "  ");
    }
    return out;
}

inline std::string summary_text(const RunResult& r) {
    using fmt::num;
    const Scenario& sc = r.scenario;
    const auto& s = r.series;
    std::string out;
    detail::line(out, "scenario", sc.name);
    if (!sc.description.empty()) detail::line(out, "description", sc.description);
    detail::line(out, "system", system_kind(sc.system));
    detail::line(out, "dimension", std::to_string(r.trajectory.dim()));
    detail::line(out, "step", num(sc.step));
    detail::line(out, "t_end", num(sc.t_end));
    detail::line(out, "samples", std::to_string(r.trajectory.size()));
    detail::line(out, "x0", fmt::row(sc.x0));
    detail::line(out, "final state", fmt::row(r.trajectory.states.back()));
    detail::line(out, "final |u|", num(r.trajectory.velocities.back().norm()));
    std::size_t invalid = 0, switches = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        invalid += s.valid[k] ? 0 : 1;
        switches += s.switch_flag[k] ? 1 : 0;
    }
    detail::line(out, "degenerate samples", std::to_string(invalid));
    detail::line(out, "eigenvalue classification switches", std::to_string(switches));

    if (s.modal) {
        out += "modal transform:\n";
        out += modal_report(*s.modal, "  ");
    }
    if (r.equilibrium) {
        detail::line(out, "equilibrium", fmt::row(*r.equilibrium));
        if (r.equilibrium_spectrum) {
            out += "equilibrium Jacobian eigenvalues:\n";
            out += detail::spectrum_lines(r.equilibrium_spectrum->eigenvalues, "  ");
        }
    }
    if (r.forecast) {
        const auto& f = *r.forecast;
        const bool pair = f.kind == AsymptoteForecast::Kind::PairDominant;
        out += "forecast:\n";
        detail::line(out, "dominant mode", pair ? "pair" : "real", "  ");
        detail::line(out, "rho target", num(f.rho_target), "  ");
        detail::line(out, "rho range", num(f.rho_min) + " " + num(f.rho_max), "  ");
        detail::line(out, "omega target", num(f.omega_target), "  ");
        detail::line(out, "omega range", num(f.omega_min) + " " + num(f.omega_max), "  ");
        if (pair) {
            detail::line(out, "c12", num(f.c12), "  ");
            detail::line(out, "c21", num(f.c21), "  ");
            detail::line(out, "isotropic", f.isotropic ? "yes" : "no", "  ");
        }
    }
    if (r.tail) {
        const auto& t = *r.tail;
        out += "tail:\n";
        detail::line(out, "window", num(t.t_start) + " " + num(t.t_end), "  ");
        detail::line(out, "samples", std::to_string(t.samples), "  ");
        detail::line(out, "rho mean", num(t.rho_mean), "  ");
        detail::line(out, "rho std", num(t.rho_std), "  ");
        detail::line(out, "rho relative error", num(t.rho_error), "  ");
        detail::line(out, "rho sign changes", std::to_string(t.rho_sign_changes), "  ");
        detail::line(out, "omega mean", num(t.omega_mean), "  ");
        detail::line(out, "omega std", num(t.omega_std), "  ");
        detail::line(out, "omega max", num(t.omega_max), "  ");
        detail::line(out, t.omega_target == 0.0 ? "omega tail max" : "omega relative error", num(t.omega_error), "  ");
        detail::line(out, "omega sign changes", std::to_string(t.omega_sign_changes), "  ");
        if (!t.note.empty()) detail::line(out, "note", t.note, "  ");
    }
    if (r.cycle) {
        const auto& c = *r.cycle;
        out += "limit cycle:\n";
        detail::line(out, "detected", c.detected ? "yes" : "no", "  ");
        detail::line(out, "period", num(c.period), "  ");
        detail::line(out, "period spread", num(c.spread), "  ");
        detail::line(out, "periods observed", std::to_string(c.periods), "  ");
        detail::line(out, "section level u1", num(c.section_level), "  ");
        detail::line(out, "integral of rho over one period", num(c.rho_loop_integral), "  ");
        detail::line(out, "ln(|u(t0+T)|/|u(t0)|)", num(c.log_radius_change), "  ");
        detail::line(out, "rho periodicity", num(c.rho_periodicity), "  ");
        detail::line(out, "omega periodicity", num(c.omega_periodicity), "  ");
    }
    for (const auto& n : r.notes) detail::line(out, "note", n);
    std::string check = check_name(r.check.kind);
    if (r.check.kind != CheckKind::None) check += r.check.passed ? " PASS" : " FAIL";
    if (!r.check.detail.empty()) check += " (" + r.check.detail + ")";
    detail::line(out, "check", check);
    return out;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + p.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error("failed writing " + p.string());
}

inline void tail_check(const SystemModel& model, RunResult& r) {
    const auto& a = r.scenario.analysis;
    try {
        r.equilibrium = equilibrium_find(model, r.trajectory.states.back());
    } catch (const NoEquilibrium& e) {
        r.check.passed = false;
        r.check.detail = std::string("no equilibrium near the final state: ") + e.what();
        return;
    }
    r.equilibrium_spectrum = classify_spectrum(model.jacobian(*r.equilibrium));
    const ModalProjection proj = modal_projection(*r.equilibrium_spectrum, r.trajectory.velocities.front());
    r.forecast = predict_asymptote(*r.equilibrium_spectrum, proj);
    TailOptions opts;
    opts.window = a.tail_window;
    opts.rho_rel_tol = a.rho_tol;
    opts.omega_tol = a.omega_tol;
    opts.min_sign_changes = a.min_sign_changes;
    try {
        r.tail = compare_tail(r.series, *r.forecast, opts);
    } catch (const InsufficientTail& e) {
        r.check.passed = false;
        r.check.detail = e.what();
        return;
    }
    r.check.passed = r.tail->pass;
    if (!r.tail->rho_ok) r.check.detail += "rho mean off target; ";
    if (!r.tail->omega_ok) r.check.detail += "omega off target; ";
    if (!r.tail->oscillation_ok) r.check.detail += "too few sign changes; ";
    if (!r.check.detail.empty()) r.check.detail.resize(r.check.detail.size() - 2);
}

inline void limit_cycle_check(RunResult& r) {
    const auto& a = r.scenario.analysis;
    LimitCycleOptions opts;
    opts.transient_fraction = a.transient_fraction;
    try {
        r.cycle = detect_limit_cycle(r.trajectory, r.series, opts);
    } catch (const NoLimitCycle& e) {
        r.check.passed = false;
        r.check.detail = e.what();
        return;
    }
    const auto& c = *r.cycle;
    std::vector<std::string> why;
    if (!c.detected) why.push_back("period spread too large or too few periods");
    if (!(std::abs(c.rho_loop_integral) < a.loop_tol)) why.push_back("integral of rho over a period not ~0");
    if (!(c.rho_periodicity < a.periodicity_tol) || !(c.omega_periodicity < a.periodicity_tol)) {
        why.push_back("rho or omega not periodic");
    }
    r.check.passed = why.empty();
    for (std::size_t i = 0; i < why.size(); ++i) r.check.detail += (i ? "; " : "") + why[i];
}

}  // namespace detail

/// Integrates and analyzes one scenario and, unless disabled, writes
/// `<prefix>_timeseries.csv` and `<prefix>_summary.txt` into opts.out_dir.
inline RunResult run_scenario(Scenario sc, const RunOptions& opts = {}) {
    if (opts.step) sc.step = *opts.step;
    if (opts.t_end) sc.t_end = *opts.t_end;
    if (opts.no_modal) sc.analysis.modal = false;
    validate_scenario(sc);

    RunResult r;
    r.scenario = sc;
    const SystemModel model = build_model(sc.system);
    r.trajectory = integrate(model, sc.x0, sc.t_end, sc.step);
    AnalysisOptions aopts;
    aopts.modal = sc.analysis.modal && model.is_affine();
    if (sc.analysis.modal && !model.is_affine()) r.notes.push_back("modal transform skipped: system is nonlinear");
    r.series = analyze_trajectory(r.trajectory, model, aopts);

    r.check.kind = sc.analysis.check;
    if (sc.analysis.check == CheckKind::Tail) detail::tail_check(model, r);
    else if (sc.analysis.check == CheckKind::LimitCycle) detail::limit_cycle_check(r);

    if (opts.write_files) {
        std::filesystem::create_directories(opts.out_dir);
        r.csv_path = opts.out_dir / (sc.prefix() + "_timeseries.csv");
        r.summary_path = opts.out_dir / (sc.prefix() + "_summary.txt");
        detail::write_file(r.csv_path, timeseries_csv(r.trajectory, r.series));
        detail::write_file(r.summary_path, summary_text(r));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Matrix files
// ---------------------------------------------------------------------------

/// First non-comment line: N. Then N rows of N whitespace-separated numbers.
inline Mat parse_matrix(std::string_view text) {
    std::vector<std::pair<int, std::string_view>> lines;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view l = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        l = detail::trim(l);
        if (l.empty() || l.front() == '#') continue;
        lines.emplace_back(line_no, l);
    }
    if (lines.empty()) throw ParseError("matrix file is empty", 0);
    int n = 0;
    {
        const auto [ln, l] = lines.front();
        const auto res = std::from_chars(l.data(), l.data() + l.size(), n);
        if (res.ec != std::errc() || res.ptr != l.data() + l.size() || n < 1) {
            throw ParseError("first line must be the dimension N >= 1", ln, "N");
        }
    }
    if (lines.size() != static_cast<std::size_t>(n) + 1) {
        throw ParseError("expected " + std::to_string(n) + " matrix rows, found " + std::to_string(lines.size() - 1),
                         lines.back().first);
    }
    Mat A(n, n);
    for (int i = 0; i < n; ++i) {
        const auto [ln, l] = lines[static_cast<std::size_t>(i) + 1];
        const auto row = detail::to_numbers(l, ln, "row " + std::to_string(i + 1));
        if (row.size() != static_cast<std::size_t>(n)) {
            throw ParseError("row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) +
                                 " entries, expected " + std::to_string(n),
                             ln);
        }
        for (int j = 0; j < n; ++j) A(i, j) = row[static_cast<std::size_t>(j)];
    }
    return A;
}

inline std::string matrix_file_text(const Mat& A) {
    return std::to_string(A.rows()) + "\n" + fmt::matrix(A, "");
}

/// Text report of the spectrum and real modal form of A. Throws
/// NonDiagonalizable for defective matrices.
inline std::string analyze_matrix_report(const Mat& A) {
    const RealModalForm f = real_modal_form(A);
    std::string out;
    detail::line(out, "dimension", std::to_string(A.rows()));
    out += modal_report(f);
    return out;
}

}  // namespace geofreq
