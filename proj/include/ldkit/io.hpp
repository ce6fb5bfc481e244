#pragma once

// File formats: structure specs and system specs (JSON), trajectories (CSV
// and JSON). JSON documents carry "schema_version": 1.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldkit/dynamics.hpp"
#include "ldkit/errors.hpp"
#include "ldkit/linear_ld.hpp"
#include "ldkit/systems.hpp"

namespace ldkit {

inline constexpr int kSchemaVersion = 1;

/// Malformed or schema-violating input file.
class ParseError : public InputError {
public:
    using InputError::InputError;
};

using Json = nlohmann::json;

// -- structure specs ---------------------------------------------------------

struct StructureSpec {
    std::size_t n = 0;
    enum class Kind { ab, pair } kind = Kind::ab;
    Orientation orientation = Orientation::forward;
    ABRep ab;
    Matrix carrier;  ///< n×k, columns span E or F
    Matrix map;      ///< k×k in the coordinates of the carrier columns
};

namespace detail {

inline void check_schema_version(const Json& j) {
    if (j.contains("schema_version")) {
        if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion) {
            throw ParseError("unsupported schema_version (expected 1)");
        }
    }
}

inline const Json& require_key(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
    return j[key];
}

/// Nested row-major array → matrix; an empty array gives expected_rows × 0.
inline Matrix parse_matrix(const Json& j, const char* what, Eigen::Index expected_rows = -1) {
    if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Matrix(expected_rows < 0 ? 0 : expected_rows, 0);
    Eigen::Index cols = -1;
    Matrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array()) throw ParseError(std::string(what) + ": every row must be an array");
        if (cols < 0) {
            cols = static_cast<Eigen::Index>(row.size());
            m.resize(rows, cols);
        } else if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw ParseError(std::string(what) + ": ragged rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const Json& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw ParseError(std::string(what) + ": non-numeric entry");
            m(r, c) = v.get<double>();
        }
    }
    if (!m.allFinite()) throw ParseError(std::string(what) + ": non-finite entry");
    return m;
}

inline Vector parse_vector(const Json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(std::string(what) + ": non-numeric entry");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Json parse_json_text(std::istream& in) {
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

inline Orientation parse_orientation(const Json& j) {
    if (!j.is_string()) throw ParseError("orientation must be a string");
    const auto s = j.get<std::string>();
    if (s == "forward") return Orientation::forward;
    if (s == "backward") return Orientation::backward;
    throw ParseError("orientation must be \"forward\" or \"backward\"");
}

}  // namespace detail

inline StructureSpec parse_structure_spec(const Json& j) {
    if (!j.is_object()) throw ParseError("structure spec must be a JSON object");
    detail::check_schema_version(j);
    StructureSpec s;
    const Json& n = detail::require_key(j, "n");
    if (!n.is_number_integer() || n.get<long long>() < 1) throw ParseError("n must be a positive integer");
    s.n = n.get<std::size_t>();
    const auto nn = static_cast<Eigen::Index>(s.n);
    const Json& kind = detail::require_key(j, "kind");
    if (!kind.is_string()) throw ParseError("kind must be a string");
    if (j.contains("orientation")) s.orientation = detail::parse_orientation(j["orientation"]);
    if (kind == "ab") {
        s.kind = StructureSpec::Kind::ab;
        s.ab.a = detail::parse_matrix(detail::require_key(j, "a"), "a");
        s.ab.b = detail::parse_matrix(detail::require_key(j, "b"), "b");
        for (const Matrix* m : {&s.ab.a, &s.ab.b}) {
            if (m->rows() != nn || m->cols() != nn) throw ParseError("a and b must be n x n");
        }
    } else if (kind == "pair") {
        s.kind = StructureSpec::Kind::pair;
        if (!j.contains("orientation")) throw ParseError("pair specs need an orientation");
        s.carrier = detail::parse_matrix(detail::require_key(j, "carrier"), "carrier", nn);
        if (s.carrier.rows() != nn) throw ParseError("carrier must have n rows");
        const Eigen::Index k = s.carrier.cols();
        const Json& map = detail::require_key(j, "map");
        bool empty_map = map.is_array();
        for (const auto& row : map) empty_map = empty_map && row.is_array() && row.empty();
        if (k == 0) {
            if (!empty_map) throw ParseError("map must be empty for a zero carrier");
            s.map = Matrix(0, 0);
        } else {
            s.map = detail::parse_matrix(map, "map");
            if (s.map.rows() != k || s.map.cols() != k) throw ParseError("map must be k x k for a carrier with k columns");
        }
    } else {
        throw ParseError("kind must be \"ab\" or \"pair\"");
    }
    return s;
}

inline StructureSpec parse_structure_spec(std::istream& in) { return parse_structure_spec(detail::parse_json_text(in)); }

/// Builds the structure; throws DegenerateRepresentation / NotLDStructure.
inline LinearLD build_structure(const StructureSpec& s, const Tolerance& tol = {}) {
    if (s.kind == StructureSpec::Kind::ab) return from_ab(s.ab, tol);
    PairRep rep;
    try {
        rep = PairRep::from_spanning(s.orientation, s.carrier, s.map, tol);
    } catch (const InputError& e) {
        throw ParseError(e.what());
    }
    return from_pair(rep, tol);
}

// -- system specs ------------------------------------------------------------

inline SystemSpec parse_system_spec(const Json& j) {
    if (!j.is_object()) throw ParseError("system spec must be a JSON object");
    detail::check_schema_version(j);
    SystemSpec s;
    const Json& name = detail::require_key(j, "name");
    if (!name.is_string()) throw ParseError("name must be a string");
    s.name = name.get<std::string>();
    if (j.contains("parameters")) {
        const Json& p = j["parameters"];
        if (!p.is_object()) throw ParseError("parameters must be an object");
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (!it.value().is_number()) throw ParseError("parameter '" + it.key() + "' must be a number");
            s.parameters[it.key()] = it.value().get<double>();
        }
    }
    if (j.contains("initial_state")) s.initial_state = detail::parse_vector(j["initial_state"], "initial_state");
    return s;
}

inline SystemSpec parse_system_spec(std::istream& in) { return parse_system_spec(detail::parse_json_text(in)); }

inline Json system_spec_to_json(const SystemSpec& s) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = s.name;
    j["parameters"] = Json::object();
    for (const auto& [k, v] : s.parameters) j["parameters"][k] = v;
    if (s.initial_state) j["initial_state"] = detail::vector_to_json(*s.initial_state);
    return j;
}

// -- trajectories ------------------------------------------------------------

inline std::vector<std::string> trajectory_columns(std::size_t n, std::size_t k) {
    std::vector<std::string> cols{"t"};
    for (std::size_t i = 1; i <= n; ++i) cols.push_back("x" + std::to_string(i));
    for (std::size_t i = 1; i <= k; ++i) cols.push_back("lambda" + std::to_string(i));
    cols.insert(cols.end(), {"constraint_residual", "H", "bracket_HH"});
    return cols;
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    const auto cols = trajectory_columns(traj.n, traj.k);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t r = 0; r < traj.size(); ++r) {
        out << traj.times[r];
        for (Eigen::Index i = 0; i < traj.states[r].size(); ++i) out << ',' << traj.states[r](i);
        for (Eigen::Index i = 0; i < traj.multipliers[r].size(); ++i) out << ',' << traj.multipliers[r](i);
        out << ',' << traj.residuals[r] << ',' << traj.energies[r] << ',' << traj.energy_rates[r] << '\n';
    }
}

inline Json trajectory_to_json(const Trajectory& traj) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["n"] = traj.n;
    j["k"] = traj.k;
    j["times"] = traj.times;
    j["states"] = Json::array();
    j["multipliers"] = Json::array();
    for (const auto& s : traj.states) j["states"].push_back(detail::vector_to_json(s));
    for (const auto& m : traj.multipliers) j["multipliers"].push_back(detail::vector_to_json(m));
    j["residuals"] = traj.residuals;
    j["energies"] = traj.energies;
    j["energy_rates"] = traj.energy_rates;
    return j;
}

inline void write_trajectory_json(std::ostream& out, const Trajectory& traj) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << trajectory_to_json(traj).dump(1) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_number(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ParseError("malformed number '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ParseError("malformed number '" + s + "'");
    return v;
}

inline std::vector<double> parse_doubles(const Json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(std::string(what) + ": non-numeric entry");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace detail

inline Trajectory read_trajectory_csv(std::istream& in) {
    std::string line;
    do {
        if (!std::getline(in, line)) throw ParseError("trajectory CSV is empty");
    } while (line.empty() || line[0] == '#');
    const auto header = detail::split_csv_line(line);
    std::size_t n = 0;
    std::size_t k = 0;
    while (1 + n < header.size() && header[1 + n] == "x" + std::to_string(n + 1)) ++n;
    while (1 + n + k < header.size() && header[1 + n + k] == "lambda" + std::to_string(k + 1)) ++k;
    if (header != trajectory_columns(n, k) || n == 0) throw ParseError("trajectory CSV header does not match the schema");

    Trajectory traj;
    traj.n = n;
    traj.k = k;
    const auto ni = static_cast<Eigen::Index>(n);
    const auto ki = static_cast<Eigen::Index>(k);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) throw ParseError("trajectory CSV row has the wrong number of fields");
        std::size_t c = 0;
        traj.times.push_back(detail::parse_number(fields[c++]));
        Vector x(ni);
        for (Eigen::Index i = 0; i < ni; ++i) x(i) = detail::parse_number(fields[c++]);
        Vector lam(ki);
        for (Eigen::Index i = 0; i < ki; ++i) lam(i) = detail::parse_number(fields[c++]);
        traj.states.push_back(std::move(x));
        traj.multipliers.push_back(std::move(lam));
        traj.residuals.push_back(detail::parse_number(fields[c++]));
        traj.energies.push_back(detail::parse_number(fields[c++]));
        traj.energy_rates.push_back(detail::parse_number(fields[c++]));
    }
    if (traj.empty()) throw ParseError("trajectory CSV has no rows");
    return traj;
}

inline Trajectory trajectory_from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("trajectory JSON must be an object");
    detail::check_schema_version(j);
    Trajectory traj;
    traj.times = detail::parse_doubles(detail::require_key(j, "times"), "times");
    traj.residuals = detail::parse_doubles(detail::require_key(j, "residuals"), "residuals");
    traj.energies = detail::parse_doubles(detail::require_key(j, "energies"), "energies");
    traj.energy_rates = detail::parse_doubles(detail::require_key(j, "energy_rates"), "energy_rates");
    const Json& states = detail::require_key(j, "states");
    const Json& mults = detail::require_key(j, "multipliers");
    if (!states.is_array() || !mults.is_array()) throw ParseError("states and multipliers must be arrays");
    for (const auto& s : states) traj.states.push_back(detail::parse_vector(s, "states"));
    for (const auto& m : mults) traj.multipliers.push_back(detail::parse_vector(m, "multipliers"));
    if (!traj.consistent_lengths() || traj.empty()) throw ParseError("trajectory JSON columns have different lengths");
    traj.n = static_cast<std::size_t>(traj.states.front().size());
    traj.k = static_cast<std::size_t>(traj.multipliers.front().size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (static_cast<std::size_t>(traj.states[i].size()) != traj.n ||
            static_cast<std::size_t>(traj.multipliers[i].size()) != traj.k) {
            throw ParseError("trajectory JSON rows have inconsistent widths");
        }
    }
    if (j.contains("n") && j["n"] != traj.n) throw ParseError("trajectory JSON n does not match the states");
    if (j.contains("k") && j["k"] != traj.k) throw ParseError("trajectory JSON k does not match the multipliers");
    return traj;
}

inline Trajectory read_trajectory_json(std::istream& in) { return trajectory_from_json(detail::parse_json_text(in)); }

/// Reads either format; JSON is recognized by a leading '{'.
inline Trajectory read_trajectory(std::istream& in) {
    in >> std::ws;
    if (in.peek() == '{') return read_trajectory_json(in);
    return read_trajectory_csv(in);
}

}  // namespace ldkit
