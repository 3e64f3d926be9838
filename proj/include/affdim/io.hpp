#pragma once

// Text formats: locale-independent number formatting, RFC 4180 CSV rows and
// the JSON IFS document {"d": int, "maps": [{"A": [[...]], "t": [...]}]}.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "affdim/errors.hpp"
#include "affdim/linalg.hpp"
#include "affdim/selfaffine.hpp"
#include "affdim/tuple.hpp"

namespace affdim {

/// Shortest form with 17 significant digits, always '.' as decimal separator.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (res.ec != std::errc{}) throw NumericalError("number formatting failed");
    return std::string(buf, res.ptr);
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    q += '"';
    return q;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t j = 0; j < fields.size(); ++j) {
        if (j) line += ',';
        line += csv_field(fields[j]);
    }
    line += '\n';
    return line;
}

/// Split one CSV record (no embedded newlines) under RFC 4180 quoting.
inline std::vector<std::string> parse_csv_row(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cur += '"';
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r' && c != '\n') {
            cur += c;
        }
    }
    if (quoted) throw InputError("unterminated quoted CSV field");
    out.push_back(std::move(cur));
    return out;
}

struct IFSDocument {
    int d = 0;
    std::vector<Matrix> matrices;
    std::vector<Vector> translations;

    LinearTuple tuple() const { return LinearTuple(matrices); }
    AffineIFS ifs() const { return AffineIFS(tuple(), translations); }
};

namespace detail {

inline double json_number(const nlohmann::json& j, const char* what) {
    if (!j.is_number()) throw InputError(std::string(what) + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw InputError(std::string(what) + " must be finite");
    return v;
}

inline Matrix json_matrix(const nlohmann::json& j, int d) {
    if (!j.is_array() || static_cast<int>(j.size()) != d) {
        throw InputError("matrix A must be a " + std::to_string(d) + "x" + std::to_string(d) + " nested array");
    }
    Matrix m(d);
    for (int r = 0; r < d; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != d) {
            throw InputError("matrix A must be a " + std::to_string(d) + "x" + std::to_string(d) + " nested array");
        }
        for (int c = 0; c < d; ++c) m(r, c) = json_number(row[static_cast<std::size_t>(c)], "matrix entry");
    }
    return m;
}

inline Vector json_vector(const nlohmann::json& j, int d, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != d) {
        throw InputError(std::string(what) + " must be an array of length " + std::to_string(d));
    }
    Vector v(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) v[static_cast<std::size_t>(c)] = json_number(j[static_cast<std::size_t>(c)], what);
    return v;
}

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                                const char* where) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw InputError(std::string("unexpected key '") + key + "' in " + where);
    }
}

}  // namespace detail

/// Parse an IFS document; matrices are checked for shape and invertibility.
inline IFSDocument ifs_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("IFS document must be a JSON object");
    detail::reject_unknown_keys(j, {"d", "maps"}, "IFS document");
    if (!j.contains("d") || !j["d"].is_number_integer()) throw InputError("IFS document needs an integer 'd'");
    if (!j.contains("maps") || !j["maps"].is_array() || j["maps"].empty()) {
        throw InputError("IFS document needs a non-empty 'maps' array");
    }
    IFSDocument doc;
    doc.d = j["d"].get<int>();
    if (doc.d < 1 || doc.d > kMaxDim) throw InputError("'d' must lie in [1, " + std::to_string(kMaxDim) + "]");
    for (const auto& m : j["maps"]) {
        if (!m.is_object() || !m.contains("A")) throw InputError("each map needs a matrix 'A'");
        detail::reject_unknown_keys(m, {"A", "t"}, "map");
        doc.matrices.push_back(detail::json_matrix(m["A"], doc.d));
        doc.translations.push_back(m.contains("t") ? detail::json_vector(m["t"], doc.d, "translation t")
                                                   : Vector(static_cast<std::size_t>(doc.d), 0.0));
    }
    (void)doc.tuple();  // validates invertibility
    return doc;
}

inline IFSDocument parse_ifs(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("invalid JSON: ") + e.what());
    }
    return ifs_from_json(j);
}

/// Serialize with 17 significant digits so that parsing reproduces every entry.
inline std::string serialize_ifs(const IFSDocument& doc) {
    std::string s = "{\"d\": " + std::to_string(doc.d) + ", \"maps\": [";
    for (std::size_t k = 0; k < doc.matrices.size(); ++k) {
        if (k) s += ", ";
        s += "{\"A\": [";
        for (int r = 0; r < doc.d; ++r) {
            if (r) s += ", ";
            s += '[';
            for (int c = 0; c < doc.d; ++c) {
                if (c) s += ", ";
                s += format_number(doc.matrices[k](r, c));
            }
            s += ']';
        }
        s += "], \"t\": [";
        for (int c = 0; c < doc.d; ++c) {
            if (c) s += ", ";
            s += format_number(doc.translations[k][static_cast<std::size_t>(c)]);
        }
        s += "]}";
    }
    s += "]}\n";
    return s;
}

/// Continuity scan input: A_i(t) = A_i + t D_i over a grid of t values.
struct ScanSpec {
    IFSDocument base;
    std::vector<Matrix> directions;
    std::vector<double> t_grid;
};

/// {"base": IFSDocument, "directions": [D_1, ...], "t_grid": [..] or
/// {"start": a, "stop": b, "step": h}}. Without "directions" (d = 2 only)
/// every D_i is the rotation generator [[0, -1], [1, 0]].
inline ScanSpec scan_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("scan document must be a JSON object");
    detail::reject_unknown_keys(j, {"base", "directions", "t_grid"}, "scan document");
    if (!j.contains("base")) throw InputError("scan document needs 'base'");
    ScanSpec spec;
    spec.base = ifs_from_json(j["base"]);
    const int d = spec.base.d;
    const std::size_t m = spec.base.matrices.size();
    if (j.contains("directions")) {
        const auto& dirs = j["directions"];
        if (!dirs.is_array() || dirs.size() != m) throw InputError("need one direction matrix per map");
        for (const auto& dm : dirs) spec.directions.push_back(detail::json_matrix(dm, d));
    } else {
        if (d != 2) throw InputError("default rotation directions exist only for d = 2");
        spec.directions.assign(m, Matrix::from_rows({{0.0, -1.0}, {1.0, 0.0}}));
    }
    if (!j.contains("t_grid")) throw InputError("scan document needs 't_grid'");
    const auto& g = j["t_grid"];
    if (g.is_array()) {
        for (const auto& v : g) spec.t_grid.push_back(detail::json_number(v, "t_grid entry"));
    } else if (g.is_object()) {
        detail::reject_unknown_keys(g, {"start", "stop", "step"}, "t_grid");
        if (!g.contains("start") || !g.contains("stop") || !g.contains("step")) {
            throw InputError("t_grid object needs start, stop and step");
        }
        const double a = detail::json_number(g["start"], "start");
        const double b = detail::json_number(g["stop"], "stop");
        const double h = detail::json_number(g["step"], "step");
        if (!(h > 0.0) || b < a) throw InputError("t_grid needs step > 0 and stop >= start");
        const auto count = static_cast<std::size_t>(std::llround((b - a) / h)) + 1;
        if (count > 1000000) throw InputError("t_grid has too many points");
        for (std::size_t k = 0; k < count; ++k) spec.t_grid.push_back(a + static_cast<double>(k) * h);
    } else {
        throw InputError("t_grid must be an array or a {start, stop, step} object");
    }
    if (spec.t_grid.empty()) throw InputError("t_grid is empty");
    return spec;
}

inline ScanSpec parse_scan(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("invalid JSON: ") + e.what());
    }
    return scan_from_json(j);
}

}  // namespace affdim
