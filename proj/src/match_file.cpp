#include "warpforge/match_file.hpp"

#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "warpforge/error.hpp"

namespace warpforge {

namespace {

using nlohmann::json;

std::map<std::string, json> split_entries(const std::string& text) {
    static const std::regex key_line(R"(^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=(.*)$)");
    std::map<std::string, std::string> raw;
    std::string current;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::smatch m;
        if (std::regex_match(line, m, key_line)) {
            current = m[1];
            if (raw.count(current)) throw InputError("match file: duplicate field '" + current + "'");
            raw[current] = m[2];
            continue;
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (current.empty()) {
            if (line[first] == '#') continue;
            throw InputError("match file: line " + std::to_string(lineno) + " is not a key = value entry");
        }
        raw[current] += "\n" + line;
    }
    std::map<std::string, json> out;
    for (auto& [key, value] : raw) {
        try {
            out[key] = json::parse(value, nullptr, true, true);
        } catch (const json::parse_error& e) {
            throw InputError("match file: field '" + key + "' is not valid JSON (" + e.what() + ")");
        }
    }
    return out;
}

std::vector<Point> read_points(const json& j, const std::string& field) {
    if (!j.is_array()) throw InputError("match file: field '" + field + "' must be an array of [x, y]");
    std::vector<Point> pts;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& p = j[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw InputError("match file: field '" + field + "' entry " + std::to_string(i) + " is not [x, y]");
        pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return pts;
}

std::vector<std::vector<double>> read_desc(const json& j, const std::string& field, std::size_t count) {
    if (!j.is_array()) throw InputError("match file: field '" + field + "' must be an array of number arrays");
    if (j.size() != count)
        throw InputError("match file: field '" + field + "' has " + std::to_string(j.size()) +
                         " descriptors for " + std::to_string(count) + " points");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& d = j[i];
        if (!d.is_array()) throw InputError("match file: field '" + field + "' entry " + std::to_string(i) + " is not an array");
        std::vector<double> v;
        for (const json& x : d) {
            if (!x.is_number()) throw InputError("match file: field '" + field + "' holds a non-number");
            v.push_back(x.get<double>());
        }
        if (!out.empty() && v.size() != out.front().size())
            throw InputError("match file: field '" + field + "' descriptors differ in length");
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

MatchSet parse_matches(const std::string& text) {
    auto entries = split_entries(text);
    for (const auto& [key, value] : entries) {
        (void)value;
        if (key != "ref_points" && key != "tgt_points" && key != "ref_desc" && key != "tgt_desc" && key != "matches")
            throw InputError("match file: unknown field '" + key + "'");
    }
    for (const char* required : {"ref_points", "tgt_points"})
        if (!entries.count(required)) throw InputError(std::string("match file: missing field '") + required + "'");

    MatchSet m;
    m.ref.points = read_points(entries["ref_points"], "ref_points");
    m.tgt.points = read_points(entries["tgt_points"], "tgt_points");
    if (entries.count("ref_desc")) m.ref.descriptors = read_desc(entries["ref_desc"], "ref_desc", m.ref.points.size());
    if (entries.count("tgt_desc")) m.tgt.descriptors = read_desc(entries["tgt_desc"], "tgt_desc", m.tgt.points.size());
    if (!m.ref.descriptors.empty() && !m.tgt.descriptors.empty() &&
        m.ref.descriptor_dim() != m.tgt.descriptor_dim())
        throw InputError("match file: field 'tgt_desc' dimension differs from 'ref_desc'");

    if (entries.count("matches")) {
        const json& j = entries["matches"];
        if (!j.is_array()) throw InputError("match file: field 'matches' must be an array of [i, j]");
        for (std::size_t k = 0; k < j.size(); ++k) {
            const json& p = j[k];
            if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
                throw InputError("match file: field 'matches' entry " + std::to_string(k) + " is not [i, j]");
            const long long a = p[0].get<long long>();
            const long long b = p[1].get<long long>();
            if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= m.ref.points.size() ||
                static_cast<std::size_t>(b) >= m.tgt.points.size())
                throw InputError("match file: field 'matches' entry " + std::to_string(k) + " index out of range");
            m.pairs.push_back({m.ref.points[a], m.tgt.points[b]});
        }
    } else {
        if (m.ref.points.size() != m.tgt.points.size())
            throw InputError("match file: field 'tgt_points' length differs from 'ref_points' and no 'matches' given");
        for (std::size_t k = 0; k < m.ref.points.size(); ++k) m.pairs.push_back({m.ref.points[k], m.tgt.points[k]});
    }
    if (m.pairs.size() < 4)
        throw InputError("need ≥ 4 correspondences, got " + std::to_string(m.pairs.size()));
    return m;
}

MatchSet ingest_matches(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open match file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_matches(ss.str());
}

std::string format_matches(const MatchSet& m, bool write_matches) {
    auto points = [](const std::vector<Point>& pts) {
        json j = json::array();
        for (const Point& p : pts) j.push_back({p.x, p.y});
        return j.dump();
    };
    std::ostringstream out;
    out << "ref_points = " << points(m.ref.points) << '\n';
    out << "tgt_points = " << points(m.tgt.points) << '\n';
    if (!m.ref.descriptors.empty()) out << "ref_desc = " << json(m.ref.descriptors).dump() << '\n';
    if (!m.tgt.descriptors.empty()) out << "tgt_desc = " << json(m.tgt.descriptors).dump() << '\n';
    if (write_matches) {
        json j = json::array();
        for (std::size_t k = 0; k < std::min(m.ref.points.size(), m.tgt.points.size()); ++k) j.push_back({k, k});
        out << "matches = " << j.dump() << '\n';
    }
    return out.str();
}

void write_matches(const std::filesystem::path& path, const MatchSet& m, bool write_matches_field) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << format_matches(m, write_matches_field);
}

}  // namespace warpforge
