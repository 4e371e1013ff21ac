#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qdecomp/benders.hpp"
#include "qdecomp/dantzig_wolfe.hpp"
#include "qdecomp/generate.hpp"
#include "qdecomp/milp_model.hpp"
#include "qdecomp/qubo.hpp"
#include "qdecomp/relu_verifier.hpp"

namespace qdecomp::io {

using Json = nlohmann::json;

inline Error parse_error(const std::string& where, const std::string& what) {
    return Error(ErrorCode::kParseError, where + ": " + what);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error(path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kInvalidArgument, path + ": cannot write file");
    out << text;
}

inline Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw parse_error("JSON", e.what());
    }
}

/// Objects and arrays of containers break across lines; arrays of scalars stay
/// on one line, so a matrix prints one row per line.
inline void dump_json(const Json& j, std::string& out, std::size_t indent = 0) {
    const std::string pad(indent + 2, ' '), close(indent, ' ');
    if (j.is_object() && !j.empty()) {
        out += "{\n";
        std::size_t k = 0;
        for (auto it = j.begin(); it != j.end(); ++it, ++k) {
            out += pad + Json(it.key()).dump() + ": ";
            dump_json(it.value(), out, indent + 2);
            out += k + 1 < j.size() ? ",\n" : "\n";
        }
        out += close + "}";
        return;
    }
    const bool nested = j.is_array() && !j.empty() && (j.front().is_array() || j.front().is_object());
    if (!nested) {
        out += j.dump();
        return;
    }
    out += "[\n";
    for (std::size_t k = 0; k < j.size(); ++k) {
        out += pad;
        dump_json(j[k], out, indent + 2);
        out += k + 1 < j.size() ? ",\n" : "\n";
    }
    out += close + "]";
}

inline std::string dump_json(const Json& j) {
    std::string out;
    dump_json(j, out);
    return out + "\n";
}

/// Shortest text that parses back to the same double; infinities print as inf / -inf.
inline std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline double number(const Json& j, const std::string& field) {
    if (!j.is_number()) throw parse_error("field \"" + field + "\"", "expected a number");
    return j.get<double>();
}

inline Vector vector(const Json& obj, const std::string& field) {
    if (!obj.contains(field)) throw parse_error("field \"" + field + "\"", "missing");
    const Json& j = obj.at(field);
    if (!j.is_array()) throw parse_error("field \"" + field + "\"", "expected an array of numbers");
    Vector v;
    v.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        v.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
    }
    return v;
}

/// Row-major array of arrays. An empty array has `cols` columns.
inline Matrix matrix(const Json& obj, const std::string& field, std::size_t cols) {
    if (!obj.contains(field)) throw parse_error("field \"" + field + "\"", "missing");
    const Json& j = obj.at(field);
    if (!j.is_array()) throw parse_error("field \"" + field + "\"", "expected an array of rows");
    Matrix m(0, cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string where = field + "[" + std::to_string(r) + "]";
        if (!j[r].is_array()) throw parse_error("field \"" + where + "\"", "expected an array");
        if (j[r].size() != cols) {
            throw parse_error("field \"" + where + "\"", "has " + std::to_string(j[r].size()) +
                                                             " entries, expected " +
                                                             std::to_string(cols));
        }
        Vector row;
        for (std::size_t c = 0; c < cols; ++c) {
            row.push_back(number(j[r][c], where + "[" + std::to_string(c) + "]"));
        }
        m.append_row(row);
    }
    return m;
}

inline Json rows(const Matrix& m) {
    Json out = Json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        out.push_back(Vector(row.begin(), row.end()));
    }
    return out;
}

inline void expect_rows(const Matrix& m, std::size_t rows, const std::string& field,
                        const std::string& against) {
    if (m.rows() != rows) {
        throw parse_error("field \"" + field + "\"", "has " + std::to_string(m.rows()) +
                                                         " rows, expected " + std::to_string(rows) +
                                                         " (length of \"" + against + "\")");
    }
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) throw parse_error(where, "not a number: \"" + t + "\"");
    return v;
}

inline std::size_t to_count(const std::string& s, const std::string& where) {
    const double v = to_double(s, where);
    if (!(v >= 0.0) || v != std::floor(v)) {
        throw parse_error(where, "expected a nonnegative integer: \"" + trim(s) + "\"");
    }
    return static_cast<std::size_t>(v);
}

inline std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!trim(line).empty()) out.push_back(line);
    }
    return out;
}

}  // namespace detail

// ---- MILP --------------------------------------------------------------

/// Keys c, d, b, A, B, C, e, n_y; C and e may be omitted together (X = R^{n_x}).
inline MilpProblem milp_from_json(const Json& j) {
    if (!j.is_object()) throw parse_error("MILP", "expected a JSON object");
    MilpProblem p;
    p.c = detail::vector(j, "c");
    p.d = detail::vector(j, "d");
    p.b = detail::vector(j, "b");
    if (!j.contains("n_y")) throw parse_error("field \"n_y\"", "missing");
    const double ny = detail::number(j.at("n_y"), "n_y");
    if (ny != static_cast<double>(p.d.size())) {
        throw parse_error("field \"n_y\"", "is " + fmt(ny) + " but \"d\" has " +
                                                   std::to_string(p.d.size()) + " entries");
    }
    p.A = detail::matrix(j, "A", p.n_x());
    p.B = detail::matrix(j, "B", p.n_y());
    detail::expect_rows(p.A, p.m(), "A", "b");
    detail::expect_rows(p.B, p.m(), "B", "b");
    const bool has_c = j.contains("C"), has_e = j.contains("e");
    if (has_c != has_e) throw parse_error(has_c ? "field \"e\"" : "field \"C\"", "missing");
    if (has_c) {
        p.C = detail::matrix(j, "C", p.n_x());
        p.e = detail::vector(j, "e");
        detail::expect_rows(p.C, p.m_x(), "C", "e");
    } else {
        p.C = Matrix(0, p.n_x());
    }
    validate(p);
    return p;
}

inline MilpProblem parse_milp(const std::string& text) { return milp_from_json(parse_json(text)); }

inline Json milp_to_json(const MilpProblem& p) {
    Json j;
    j["c"] = p.c;
    j["d"] = p.d;
    j["b"] = p.b;
    j["A"] = detail::rows(p.A);
    j["B"] = detail::rows(p.B);
    j["C"] = detail::rows(p.C);
    j["e"] = p.e;
    j["n_y"] = p.n_y();
    return j;
}

// ---- QUBO --------------------------------------------------------------

inline Json qubo_to_json(const qubo::Qubo& q) {
    Json terms = Json::array();
    for (const auto& t : q.terms()) terms.push_back({t.i, t.j, t.value});
    return Json{{"n", q.size()}, {"Q", terms}, {"offset", q.offset()}};
}

inline qubo::Qubo qubo_from_json(const Json& j) {
    if (!j.is_object()) throw parse_error("QUBO", "expected a JSON object");
    if (!j.contains("n")) throw parse_error("field \"n\"", "missing");
    const double n = detail::number(j.at("n"), "n");
    if (!(n >= 0.0) || n != std::floor(n)) throw parse_error("field \"n\"", "expected a count");
    qubo::Qubo q(static_cast<std::size_t>(n),
                 j.contains("offset") ? detail::number(j.at("offset"), "offset") : 0.0);
    if (!j.contains("Q") || !j.at("Q").is_array()) throw parse_error("field \"Q\"", "expected an array");
    const Json& terms = j.at("Q");
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const std::string where = "Q[" + std::to_string(k) + "]";
        if (!terms[k].is_array() || terms[k].size() != 3) {
            throw parse_error("field \"" + where + "\"", "expected [i, j, value]");
        }
        const double i = detail::number(terms[k][0], where + "[0]");
        const double jj = detail::number(terms[k][1], where + "[1]");
        if (!(i >= 0.0 && i <= jj && jj < n) || i != std::floor(i) || jj != std::floor(jj)) {
            throw parse_error("field \"" + where + "\"", "indices must satisfy 0 <= i <= j < n");
        }
        q.add(static_cast<std::size_t>(i), static_cast<std::size_t>(jj),
              detail::number(terms[k][2], where + "[2]"));
    }
    return q;
}

// ---- Networks and samples ---------------------------------------------

inline Json network_to_json(const relu::Network& net) {
    Json layers = Json::array();
    for (const auto& l : net.layers) {
        layers.push_back(Json{{"weights", detail::rows(l.weights)}, {"bias", l.bias}});
    }
    return Json{{"layers", layers}};
}

inline relu::Network network_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("layers") || !j.at("layers").is_array()) {
        throw parse_error("field \"layers\"", "expected an array of layers");
    }
    relu::Network net;
    const Json& layers = j.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string where = "layers[" + std::to_string(i) + "]";
        const Json& l = layers[i];
        if (!l.is_object()) throw parse_error("field \"" + where + "\"", "expected an object");
        const Json& w = l.contains("weights") ? l.at("weights") : Json();
        const std::size_t cols = w.is_array() && !w.empty() && w[0].is_array() ? w[0].size() : 0;
        relu::Layer layer;
        try {
            layer.weights = detail::matrix(l, "weights", cols);
            layer.bias = detail::vector(l, "bias");
        } catch (const Error& e) {
            throw parse_error(where, e.what());
        }
        net.layers.push_back(std::move(layer));
    }
    try {
        net.validate();
    } catch (const Error& e) {
        throw parse_error("field \"layers\"", e.what());
    }
    return net;
}

inline relu::Network parse_network(const std::string& text) {
    return network_from_json(parse_json(text));
}

/// One sample per line: the input features followed by the integer label; no header.
inline std::vector<gen::Sample> parse_samples(const std::string& text) {
    std::vector<gen::Sample> out;
    std::size_t line_no = 0;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::string where = "samples line " + std::to_string(line_no);
        const auto cells = detail::split(line, ',');
        if (cells.size() < 2) throw parse_error(where, "need at least one feature and a label");
        gen::Sample s;
        for (std::size_t k = 0; k + 1 < cells.size(); ++k) s.features.push_back(detail::to_double(cells[k], where));
        s.label = detail::to_count(cells.back(), where + " label");
        if (!out.empty() && s.features.size() != out.front().features.size()) {
            throw parse_error(where, "has " + std::to_string(s.features.size()) + " features, expected " +
                                             std::to_string(out.front().features.size()));
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string samples_to_csv(const std::vector<gen::Sample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        for (double v : s.features) out += fmt(v) + ",";
        out += std::to_string(s.label) + "\n";
    }
    return out;
}

// ---- Traces ------------------------------------------------------------

inline std::string benders_trace_csv(const benders::BendersTrace& tr) {
    std::string out = "step,lower,upper,cut_kind,qubits\n";
    for (const auto& s : tr.steps) {
        out += std::to_string(s.step) + "," + fmt(s.lower) + "," + fmt(s.upper) + "," +
               to_string(s.cut_kind) + "," + std::to_string(s.qubits) + "\n";
    }
    return out;
}

inline std::string dw_trace_csv(const dw::DwTrace& tr) {
    std::string out = "step,phi,phi_hat,r,xi,p,eta,cols_real,cols_bin,qubits\n";
    for (const auto& s : tr.steps) {
        out += std::to_string(s.step) + "," + fmt(s.phi) + "," + fmt(s.phi_hat) + "," + fmt(s.r) +
               "," + fmt(s.xi) + "," + fmt(s.p) + "," + fmt(s.eta) + "," +
               std::to_string(s.cols_real) + "," + std::to_string(s.cols_bin) + "," +
               std::to_string(s.qubits) + "\n";
    }
    return out;
}

// ---- Verification report -----------------------------------------------

/// One row per certified class pair ("t-a"); a sample settled before any pair
/// is examined (misclassified, IBP) gets one row with pair "t-*".
struct ReportRow {
    std::size_t sample_id = 0;
    std::string class_pair;
    std::string verdict;
    std::size_t steps = 0;
    std::size_t max_qubits = 0;
    double phi = 0.0;
    double phi_hat = 0.0;
    double wall_ms = 0.0;
};

/// Per-sample statistics: a sample is certified when all its rows are robust;
/// its qubit count is the maximum over its rows.
struct Aggregate {
    std::size_t samples = 0;
    std::size_t certified = 0;
    double certified_fraction = 0.0;
    std::size_t steps = 0;
    double qubits_mean = 0.0;
    double qubits_std = 0.0;
    double wall_ms = 0.0;
};

inline std::vector<ReportRow> report_rows(std::size_t sample_id, std::size_t true_class,
                                          const relu::Verdict& v, double wall_ms) {
    std::vector<ReportRow> rows;
    if (v.classes.empty()) {
        rows.push_back({sample_id, std::to_string(true_class) + "-*", to_string(v.kind), 0, 0, 0.0, 0.0,
                        wall_ms});
        return rows;
    }
    for (const auto& c : v.classes) {
        rows.push_back({sample_id, std::to_string(true_class) + "-" + std::to_string(c.adversarial_class),
                        to_string(c.verdict), c.steps, c.max_qubits, c.phi, c.phi_hat, 0.0});
    }
    rows.front().wall_ms = wall_ms;
    return rows;
}

inline Aggregate aggregate(const std::vector<ReportRow>& rows) {
    struct PerSample {
        bool robust = true;
        std::size_t qubits = 0;
    };
    std::map<std::size_t, PerSample> by_id;
    Aggregate a;
    for (const auto& r : rows) {
        PerSample& s = by_id[r.sample_id];
        s.robust = s.robust && r.verdict == to_string(relu::VerdictKind::kRobust);
        s.qubits = std::max(s.qubits, r.max_qubits);
        a.steps += r.steps;
        a.wall_ms += r.wall_ms;
    }
    a.samples = by_id.size();
    if (a.samples == 0) return a;
    double sum = 0.0;
    for (const auto& [id, s] : by_id) {
        a.certified += s.robust;
        sum += static_cast<double>(s.qubits);
    }
    const auto n = static_cast<double>(a.samples);
    a.certified_fraction = static_cast<double>(a.certified) / n;
    a.qubits_mean = sum / n;
    double var = 0.0;
    for (const auto& [id, s] : by_id) {
        const double d = static_cast<double>(s.qubits) - a.qubits_mean;
        var += d * d;
    }
    a.qubits_std = std::sqrt(var / n);
    return a;
}

inline constexpr const char* kReportHeader =
        "sample_id,class_pair,verdict,steps,max_qubits,phi,phi_hat,wall_ms";

/// Verdict rows followed by one aggregate row laid out as
/// aggregate,<samples>,<certified fraction>,<total steps>,<mean qubits>,<std qubits>,<certified>,<total wall_ms>
inline std::string report_csv(const std::vector<ReportRow>& rows) {
    std::string out = std::string(kReportHeader) + "\n";
    for (const auto& r : rows) {
        out += std::to_string(r.sample_id) + "," + r.class_pair + "," + r.verdict + "," +
               std::to_string(r.steps) + "," + std::to_string(r.max_qubits) + "," + fmt(r.phi) + "," +
               fmt(r.phi_hat) + "," + fmt(r.wall_ms) + "\n";
    }
    const Aggregate a = aggregate(rows);
    out += "aggregate," + std::to_string(a.samples) + "," + fmt(a.certified_fraction) + "," +
           std::to_string(a.steps) + "," + fmt(a.qubits_mean) + "," + fmt(a.qubits_std) + "," +
           std::to_string(a.certified) + "," + fmt(a.wall_ms) + "\n";
    return out;
}

struct Report {
    std::vector<ReportRow> rows;
    Aggregate aggregate;
};

inline Report parse_report(const std::string& text) {
    const auto ls = detail::lines(text);
    if (ls.empty() || detail::trim(ls.front()) != kReportHeader) throw parse_error("report", "missing header");
    Report rep;
    bool seen_aggregate = false;
    for (std::size_t k = 1; k < ls.size(); ++k) {
        const std::string where = "report line " + std::to_string(k + 1);
        const auto c = detail::split(ls[k], ',');
        if (c.size() != 8) throw parse_error(where, "expected 8 columns");
        if (seen_aggregate) throw parse_error(where, "rows after the aggregate row");
        if (c[0] == "aggregate") {
            Aggregate& a = rep.aggregate;
            a.samples = detail::to_count(c[1], where);
            a.certified_fraction = detail::to_double(c[2], where);
            a.steps = detail::to_count(c[3], where);
            a.qubits_mean = detail::to_double(c[4], where);
            a.qubits_std = detail::to_double(c[5], where);
            a.certified = detail::to_count(c[6], where);
            a.wall_ms = detail::to_double(c[7], where);
            seen_aggregate = true;
            continue;
        }
        rep.rows.push_back({detail::to_count(c[0], where), c[1], c[2], detail::to_count(c[3], where),
                            detail::to_count(c[4], where), detail::to_double(c[5], where),
                            detail::to_double(c[6], where), detail::to_double(c[7], where)});
    }
    if (!seen_aggregate) throw parse_error("report", "missing aggregate row");
    return rep;
}

}  // namespace qdecomp::io
