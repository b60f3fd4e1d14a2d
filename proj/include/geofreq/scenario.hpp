#pragma once

// Scenario description, its text config format and the compiled-in scenarios.
//
// Config grammar (one statement per line):
//   # comment            full-line comments start with '#' or ';'
//   [section]            scenario | params | initial | analysis | output
//   key = value          whitespace around key and value is ignored
// Vectors are whitespace-separated numbers; matrices are rows of such
// vectors separated by ';'. Booleans are true/false.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "geofreq/circuits.hpp"
#include "geofreq/errors.hpp"
#include "geofreq/format.hpp"
#include "geofreq/geomalg.hpp"

namespace geofreq {

/// x' = A x + b with user-supplied A and b.
struct LinearParams {
    Mat A;
    Vec b;

    bool operator==(const LinearParams& o) const {
        return A.rows() == o.A.rows() && A.cols() == o.A.cols() && b.size() == o.b.size() && A == o.A &&
               b == o.b;
    }
};

using SystemParams = std::variant<RcParams, RlcParams, ThirdOrderParams, TunnelDiodeParams, LinearParams>;

inline const char* system_kind(const SystemParams& p) {
    static constexpr const char* names[] = {"rc", "rlc", "third-order", "tunnel-diode", "linear"};
    return names[p.index()];
}

inline std::size_t system_dim(const SystemParams& p) {
    switch (p.index()) {
    case 0: return 1;
    case 1: return 2;
    case 2: return 3;
    case 3: return 2;
    default: return static_cast<std::size_t>(std::get<LinearParams>(p).A.rows());
    }
}

inline SystemModel build_model(const SystemParams& p) {
    return std::visit(
        [](const auto& q) -> SystemModel {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, RcParams>) return build_rc(q);
            else if constexpr (std::is_same_v<T, RlcParams>) return build_rlc(q);
            else if constexpr (std::is_same_v<T, ThirdOrderParams>) return build_third_order(q);
            else if constexpr (std::is_same_v<T, TunnelDiodeParams>) return build_tunnel_diode(q);
            else {
                if (q.A.rows() != q.A.cols() || q.A.rows() < 1 || q.b.size() != q.A.rows()) {
                    throw DimensionError("linear system: A must be square and b must match");
                }
                if (!q.A.allFinite() || !q.b.allFinite()) throw InvalidParameter("linear system: non-finite entry");
                return SystemModel::affine(q.A, q.b);
            }
        },
        p);
}

enum class CheckKind { None, Tail, LimitCycle };

inline const char* check_name(CheckKind k) {
    switch (k) {
    case CheckKind::Tail: return "tail";
    case CheckKind::LimitCycle: return "limit-cycle";
    default: return "none";
    }
}

struct ScenarioAnalysis {
    bool modal = true;             // affine systems only
    CheckKind check = CheckKind::None;
    double tail_window = 0.2;
    double rho_tol = 0.01;
    double omega_tol = 1e-3;
    int min_sign_changes = 0;
    double transient_fraction = 0.5;
    double loop_tol = 1e-2;
    double periodicity_tol = 0.01;

    bool operator==(const ScenarioAnalysis&) const = default;
};

struct Scenario {
    std::string name;
    std::string description;
    SystemParams system;
    Vec x0;
    double t_end = 10.0;
    double step = 1e-3;
    ScenarioAnalysis analysis;
    std::string output_prefix;  // defaults to name

    std::string prefix() const { return output_prefix.empty() ? name : output_prefix; }

    bool operator==(const Scenario& o) const {
        return name == o.name && description == o.description && system == o.system &&
               x0.size() == o.x0.size() && x0 == o.x0 && t_end == o.t_end && step == o.step &&
               analysis == o.analysis && output_prefix == o.output_prefix;
    }
};

/// Checks everything the config grammar cannot: positivity, dimensions, diode shape.
inline void validate_scenario(const Scenario& s) {
    if (s.name.empty()) throw InvalidParameter("scenario name is empty");
    const auto ok_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    };
    if (!std::all_of(s.name.begin(), s.name.end(), ok_char) ||
        !std::all_of(s.output_prefix.begin(), s.output_prefix.end(), ok_char)) {
        throw InvalidParameter("scenario name and output prefix may only contain [A-Za-z0-9._-]");
    }
    const SystemModel m = build_model(s.system);
    if (static_cast<std::size_t>(s.x0.size()) != m.dim()) {
        throw DimensionError("x0 has " + std::to_string(s.x0.size()) + " components, system has " +
                             std::to_string(m.dim()));
    }
    if (!s.x0.allFinite()) throw InvalidParameter("x0 has non-finite components");
    if (!(s.t_end > 0.0) || !std::isfinite(s.t_end)) throw InvalidParameter("t_end must be positive");
    if (!(s.step > 0.0) || !(s.step < s.t_end)) throw InvalidParameter("step must lie in (0, t_end)");
    const auto& a = s.analysis;
    if (!(a.tail_window > 0.0 && a.tail_window <= 1.0)) throw InvalidParameter("tail_window must lie in (0, 1]");
    if (!(a.transient_fraction >= 0.0 && a.transient_fraction < 1.0)) {
        throw InvalidParameter("transient_fraction must lie in [0, 1)");
    }
    if (!(a.rho_tol > 0.0) || !(a.omega_tol > 0.0) || !(a.loop_tol > 0.0) || !(a.periodicity_tol > 0.0)) {
        throw InvalidParameter("tolerances must be positive");
    }
    if (a.min_sign_changes < 0) throw InvalidParameter("min_sign_changes must be >= 0");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string vec_text(const Vec& v) { return fmt::row(v); }

inline std::string mat_text(const Mat& m) {
    std::string s;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i) s += "; ";
        s += fmt::row(m.row(i));
    }
    return s;
}

inline void kv(std::string& out, std::string_view key, std::string_view value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
}

}  // namespace detail

inline std::string to_config(const Scenario& s) {
    using fmt::num;
    std::string out;
    out += "[scenario]\n";
    detail::kv(out, "name", s.name);
    if (!s.description.empty()) detail::kv(out, "description", s.description);
    detail::kv(out, "system", system_kind(s.system));
    detail::kv(out, "t_end", num(s.t_end));
    detail::kv(out, "step", num(s.step));

    out += "\n[params]\n";
    std::visit(
        [&](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, RcParams>) {
                detail::kv(out, "R", num(q.R));
                detail::kv(out, "C", num(q.C));
                detail::kv(out, "V_dc", num(q.V_dc));
            } else if constexpr (std::is_same_v<T, RlcParams>) {
                detail::kv(out, "R", num(q.R));
                detail::kv(out, "L", num(q.L));
                detail::kv(out, "C", num(q.C));
                detail::kv(out, "V_dc", num(q.V_dc));
            } else if constexpr (std::is_same_v<T, ThirdOrderParams>) {
                detail::kv(out, "R1", num(q.R1));
                detail::kv(out, "R2", num(q.R2));
                detail::kv(out, "L", num(q.L));
                detail::kv(out, "C1", num(q.C1));
                detail::kv(out, "C2", num(q.C2));
                detail::kv(out, "V_dc", num(q.V_dc));
            } else if constexpr (std::is_same_v<T, TunnelDiodeParams>) {
                detail::kv(out, "L", num(q.L));
                detail::kv(out, "C", num(q.C));
                detail::kv(out, "R", num(q.R));
                detail::kv(out, "V_dc", num(q.V_dc));
                detail::kv(out, "diode_poly",
                           detail::vec_text(Eigen::Map<const Vec>(q.diode_poly.data(),
                                                                  static_cast<Eigen::Index>(q.diode_poly.size()))));
                detail::kv(out, "v_min", num(q.v_min));
                detail::kv(out, "v_max", num(q.v_max));
            } else {
                detail::kv(out, "A", detail::mat_text(q.A));
                detail::kv(out, "b", detail::vec_text(q.b));
            }
        },
        s.system);

    out += "\n[initial]\n";
    detail::kv(out, "x0", detail::vec_text(s.x0));

    const auto& a = s.analysis;
    out += "\n[analysis]\n";
    detail::kv(out, "modal", a.modal ? "true" : "false");
    detail::kv(out, "check", check_name(a.check));
    detail::kv(out, "tail_window", num(a.tail_window));
    detail::kv(out, "rho_tol", num(a.rho_tol));
    detail::kv(out, "omega_tol", num(a.omega_tol));
    detail::kv(out, "min_sign_changes", std::to_string(a.min_sign_changes));
    detail::kv(out, "transient_fraction", num(a.transient_fraction));
    detail::kv(out, "loop_tol", num(a.loop_tol));
    detail::kv(out, "periodicity_tol", num(a.periodicity_tol));

    if (!s.output_prefix.empty()) {
        out += "\n[output]\n";
        detail::kv(out, "prefix", s.output_prefix);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

using Section = std::map<std::string, Entry>;

class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, Section> sections) : sections_(std::move(sections)) {}

    const Entry* find(const std::string& section, const std::string& key) {
        auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        auto e = s->second.find(key);
        if (e == s->second.end()) return nullptr;
        e->second.used = true;
        return &e->second;
    }

    const Entry& require(const std::string& section, const std::string& key) {
        const Entry* e = find(section, key);
        if (!e) throw ParseError("missing required key '" + key + "' in [" + section + "]", 0, key);
        return *e;
    }

    /// Fails on keys nobody asked for, pointing at their line.
    void reject_unused() const {
        for (const auto& [sec, entries] : sections_) {
            for (const auto& [key, e] : entries) {
                if (!e.used) throw ParseError("unknown key '" + key + "' in [" + sec + "]", e.line, key);
            }
        }
    }

private:
    std::map<std::string, Section> sections_;
};

inline double to_number(const Entry& e, const std::string& key) {
    double v = 0.0;
    if (!fmt::parse_double(trim(e.value), v)) {
        throw ParseError("field '" + key + "': expected a number, got '" + e.value + "'", e.line, key);
    }
    return v;
}

inline std::vector<double> to_numbers(std::string_view text, int line, const std::string& key) {
    std::vector<double> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            double v = 0.0;
            const std::string_view tok = text.substr(i, j - i);
            if (!fmt::parse_double(tok, v)) {
                throw ParseError("field '" + key + "': '" + std::string(tok) + "' is not a number", line, key);
            }
            out.push_back(v);
        }
        i = j;
    }
    return out;
}

inline Vec to_vec(const Entry& e, const std::string& key) {
    const auto v = to_numbers(e.value, e.line, key);
    if (v.empty()) throw ParseError("field '" + key + "': empty vector", e.line, key);
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Mat to_mat(const Entry& e, const std::string& key) {
    std::vector<std::vector<double>> rows;
    std::string_view text = e.value;
    while (true) {
        const auto semi = text.find(';');
        rows.push_back(to_numbers(text.substr(0, semi), e.line, key));
        if (semi == std::string_view::npos) break;
        text.remove_prefix(semi + 1);
    }
    const std::size_t n = rows.size();
    Mat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) {
            throw ParseError("field '" + key + "': row " + std::to_string(i + 1) + " has " +
                                 std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n),
                             e.line, key);
        }
        for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

inline bool to_bool(const Entry& e, const std::string& key) {
    const auto v = trim(e.value);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ParseError("field '" + key + "': expected true or false", e.line, key);
}

inline int to_int(const Entry& e, const std::string& key) {
    const auto v = trim(e.value);
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ParseError("field '" + key + "': expected an integer", e.line, key);
    }
    return out;
}

}  // namespace detail

/// Parses a scenario config. Throws ParseError with the offending line and
/// field; semantic checks are left to validate_scenario.
inline Scenario parse_config(std::string_view text) {
    static const std::set<std::string> known{"scenario", "params", "initial", "analysis", "output"};
    std::map<std::string, detail::Section> sections;
    std::string current;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("malformed section header", line_no);
            current = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (!known.count(current)) throw ParseError("unknown section [" + current + "]", line_no, current);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string key(detail::trim(line.substr(0, eq)));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (current.empty()) throw ParseError("key '" + key + "' outside any section", line_no, key);
        auto& sec = sections[current];
        if (sec.count(key)) throw ParseError("duplicate key '" + key + "'", line_no, key);
        sec[key] = {std::string(detail::trim(line.substr(eq + 1))), line_no, false};
    }

    detail::ConfigReader r(std::move(sections));
    Scenario s;
    s.name = r.require("scenario", "name").value;
    if (const auto* e = r.find("scenario", "description")) s.description = e->value;
    const auto& sys = r.require("scenario", "system");
    s.t_end = detail::to_number(r.require("scenario", "t_end"), "t_end");
    if (const auto* e = r.find("scenario", "step")) s.step = detail::to_number(*e, "step");

    auto num = [&](const char* key) { return detail::to_number(r.require("params", key), key); };
    if (sys.value == "rc") {
        s.system = RcParams{num("R"), num("C"), num("V_dc")};
    } else if (sys.value == "rlc") {
        s.system = RlcParams{num("R"), num("L"), num("C"), num("V_dc")};
    } else if (sys.value == "third-order") {
        s.system = ThirdOrderParams{num("R1"), num("R2"), num("L"), num("C1"), num("C2"), num("V_dc")};
    } else if (sys.value == "tunnel-diode") {
        TunnelDiodeParams p;
        p.L = num("L");
        p.C = num("C");
        p.R = num("R");
        p.V_dc = num("V_dc");
        if (const auto* e = r.find("params", "diode_poly")) {
            const Vec c = detail::to_vec(*e, "diode_poly");
            p.diode_poly.assign(c.data(), c.data() + c.size());
        }
        if (const auto* e = r.find("params", "v_min")) p.v_min = detail::to_number(*e, "v_min");
        if (const auto* e = r.find("params", "v_max")) p.v_max = detail::to_number(*e, "v_max");
        s.system = std::move(p);
    } else if (sys.value == "linear") {
        LinearParams p;
        p.A = detail::to_mat(r.require("params", "A"), "A");
        if (const auto* e = r.find("params", "b")) {
            p.b = detail::to_vec(*e, "b");
            if (p.b.size() != p.A.rows()) {
                throw ParseError("field 'b': length does not match A", e->line, "b");
            }
        } else {
            p.b = Vec::Zero(p.A.rows());
        }
        s.system = std::move(p);
    } else {
        throw ParseError("unknown system '" + sys.value + "' (rc, rlc, third-order, tunnel-diode, linear)",
                         sys.line, "system");
    }

    const auto& x0 = r.require("initial", "x0");
    s.x0 = detail::to_vec(x0, "x0");
    if (static_cast<std::size_t>(s.x0.size()) != system_dim(s.system)) {
        throw ParseError("field 'x0': expected " + std::to_string(system_dim(s.system)) + " components",
                         x0.line, "x0");
    }

    auto& a = s.analysis;
    if (const auto* e = r.find("analysis", "modal")) a.modal = detail::to_bool(*e, "modal");
    if (const auto* e = r.find("analysis", "check")) {
        if (e->value == "none") a.check = CheckKind::None;
        else if (e->value == "tail") a.check = CheckKind::Tail;
        else if (e->value == "limit-cycle") a.check = CheckKind::LimitCycle;
        else throw ParseError("field 'check': expected none, tail or limit-cycle", e->line, "check");
    }
    auto opt_num = [&](const char* key, double& dst) {
        if (const auto* e = r.find("analysis", key)) dst = detail::to_number(*e, key);
    };
    opt_num("tail_window", a.tail_window);
    opt_num("rho_tol", a.rho_tol);
    opt_num("omega_tol", a.omega_tol);
    opt_num("transient_fraction", a.transient_fraction);
    opt_num("loop_tol", a.loop_tol);
    opt_num("periodicity_tol", a.periodicity_tol);
    if (const auto* e = r.find("analysis", "min_sign_changes")) {
        a.min_sign_changes = detail::to_int(*e, "min_sign_changes");
    }
    if (const auto* e = r.find("output", "prefix")) s.output_prefix = e->value;
    r.reject_unused();
    return s;
}

// ---------------------------------------------------------------------------
// Built-in scenarios
// ---------------------------------------------------------------------------

inline std::vector<Scenario> builtin_scenarios() {
    std::vector<Scenario> out;
    auto tail = [](double window, double rho_tol, double omega_tol, int sign_changes) {
        ScenarioAnalysis a;
        a.check = CheckKind::Tail;
        a.tail_window = window;
        a.rho_tol = rho_tol;
        a.omega_tol = omega_tol;
        a.min_sign_changes = sign_changes;
        return a;
    };
    auto td = [](double L, double C, double R, double V) {
        TunnelDiodeParams p;
        p.L = L;
        p.C = C;
        p.R = R;
        p.V_dc = V;
        return p;
    };

    out.push_back({"rc", "RC charging circuit, rho equals -1/(RC) at every sample", RcParams{1.0, 1.0, 1.0},
                   Vec::Zero(1), 5.0, 1e-3, tail(0.2, 1e-9, 1e-3, 0), ""});
    out.push_back({"rlc", "underdamped series RLC, state (i, v)", RlcParams{1.0, 1.0, 1.0, 1.0}, Vec::Zero(2),
                   20.0, 1e-3, tail(0.5, 0.05, 0.05, 2), ""});
    out.push_back({"third-order", "RLC in parallel with RC, state (v_C1, i_L, v_C2)", ThirdOrderParams{},
                   Vec::Zero(3), 20.0, 1e-3, tail(0.5, 0.05, 0.05, 2), ""});
    out.push_back({"td-monotonic", "tunnel diode, real dominant eigenvalue at the equilibrium",
                   td(1.0, 0.5, 0.2, 0.5), Vec::Zero(2), 30.0, 1e-3, tail(0.2, 0.01, 1e-3, 0), ""});
    out.push_back({"td-oscillatory", "tunnel diode, focus on the rising branch",
                   td(1.0, 0.5, 0.2, 0.15), Vec::Zero(2), 60.0, 1e-3, tail(0.5, 0.05, 0.05, 2), ""});
    out.push_back({"td-isotropic",
                   "tunnel diode with V_dc chosen so the equilibrium Jacobian is [[-R, 1], [-1, -R]] "
                   "for the default characteristic",
                   td(1.0, 1.0, 0.3688, 0.30570134), Vec::Zero(2), 30.0, 1e-3, tail(0.5, 0.05, 0.05, 0), ""});
    {
        Scenario lc{"td-limit-cycle", "tunnel diode, unstable equilibrium inside a stable limit cycle",
                    td(1.0, 1.0, 0.3688, 0.264), Vec::Zero(2), 120.0, 1e-3, {}, ""};
        lc.analysis.check = CheckKind::LimitCycle;
        out.push_back(std::move(lc));
    }
    out.push_back({"td-two-equilibria-a", "tunnel diode, bistable, start in the low-voltage basin",
                   td(1.0, 0.5, 1.5, 0.35), Vec::Zero(2), 12.0, 1e-3, tail(0.5, 0.05, 0.05, 2), ""});
    {
        Vec x0(2);
        x0 << 0.35, 0.0;
        out.push_back({"td-two-equilibria-b", "tunnel diode, bistable, start in the high-voltage basin",
                       td(1.0, 0.5, 1.5, 0.35), x0, 12.0, 1e-3, tail(0.5, 0.05, 0.05, 2), ""});
    }
    return out;
}

inline std::optional<Scenario> find_builtin(std::string_view name) {
    for (auto& s : builtin_scenarios()) {
        if (s.name == name) return s;
    }
    return std::nullopt;
}

}  // namespace geofreq
