#pragma once

// File formats.
//
//   set JSON:    { "n": int, "nodes": [ { "id", "gen", "parent": int|null,
//                  "children": [int], "box": { "cx", "cy", "hw" }|null } ] }
//   config JSON: { "r": f64, "points": [[x, y], ...] }
//   sweep CSV:   instance_id,N,r,lambda,capacity_stat,min_weight,nonneg,
//                rowsum_min,rowsum_max,residual
//
// Doubles are written with 17 significant digits (JSON uses shortest
// round-trip form), so write-then-read is bit-exact.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "repel/errors.hpp"
#include "repel/generational_set.hpp"
#include "repel/point_config.hpp"

namespace repel::io {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_text(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed for " + path);
}

/// Parses JSON text; syntax errors are reported with 1-based line and column.
inline Json parse_json(std::string_view text, const std::string& source = "input") {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                             ": JSON syntax error: " + e.what(),
                         line, column);
    }
}

namespace detail {

template <typename T>
T field(const Json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw ParseError(where + ": missing field \"" + key + "\"");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": field \"" + key + "\" has the wrong type (" + e.what() + ")");
    }
}

}  // namespace detail

inline Json set_to_json(const GenerationalSet& set) {
    Json nodes = Json::array();
    for (const NodeRecord& rec : set.records()) {
        Json node;
        node["id"] = rec.id;
        node["gen"] = rec.gen;
        node["parent"] = rec.parent == kNoParent ? Json(nullptr) : Json(rec.parent);
        node["children"] = rec.children;
        if (rec.box) {
            node["box"] = Json{{"cx", rec.box->cx}, {"cy", rec.box->cy}, {"hw", rec.box->hw}};
        } else {
            node["box"] = nullptr;
        }
        nodes.push_back(std::move(node));
    }
    Json doc;
    doc["n"] = set.depth();
    doc["nodes"] = std::move(nodes);
    return doc;
}

inline GenerationalSet set_from_json(const Json& doc, const std::string& source = "set") {
    const int n = detail::field<int>(doc, "n", source);
    const Json& nodes = doc.contains("nodes") ? doc.at("nodes") : throw ParseError(source + ": missing field \"nodes\"");
    if (!nodes.is_array()) throw ParseError(source + ": \"nodes\" must be an array");
    std::vector<NodeRecord> records;
    records.reserve(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Json& node = nodes[k];
        const std::string where = source + ": nodes[" + std::to_string(k) + "]";
        NodeRecord rec;
        rec.id = detail::field<int>(node, "id", where);
        rec.gen = detail::field<int>(node, "gen", where);
        const Json& parent = node.contains("parent") ? node.at("parent") : throw ParseError(where + ": missing \"parent\"");
        rec.parent = parent.is_null() ? kNoParent : detail::field<int>(node, "parent", where);
        rec.children = detail::field<std::vector<int>>(node, "children", where);
        if (node.contains("box") && !node.at("box").is_null()) {
            const Json& b = node.at("box");
            rec.box = Box{detail::field<double>(b, "cx", where), detail::field<double>(b, "cy", where),
                          detail::field<double>(b, "hw", where)};
        }
        records.push_back(std::move(rec));
    }
    try {
        return GenerationalSet::from_records(n, records);
    } catch (const DomainError& e) {
        throw ParseError(source + ": invalid set: " + e.what());
    }
}

inline std::string write_set(const GenerationalSet& set) { return set_to_json(set).dump(1) + "\n"; }

inline GenerationalSet read_set_file(const std::string& path) {
    return set_from_json(parse_json(read_text(path), path), path);
}

inline Json config_to_json(const PointConfiguration& config) {
    Json pts = Json::array();
    for (const Point2& p : config.points()) pts.push_back(Json::array({p.x, p.y}));
    Json doc;
    doc["r"] = config.r();
    doc["points"] = std::move(pts);
    return doc;
}

inline PointConfiguration config_from_json(const Json& doc, const std::string& source = "config") {
    const double r = detail::field<double>(doc, "r", source);
    const auto raw = detail::field<std::vector<std::vector<double>>>(doc, "points", source);
    std::vector<Point2> pts;
    pts.reserve(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        if (raw[k].size() != 2) {
            throw ParseError(source + ": points[" + std::to_string(k) + "] must be an [x, y] pair");
        }
        pts.push_back({raw[k][0], raw[k][1]});
    }
    try {
        return PointConfiguration(r, std::move(pts));
    } catch (const DomainError& e) {
        throw ParseError(source + ": invalid configuration: " + e.what());
    }
}

inline PointConfiguration read_config_file(const std::string& path) {
    return config_from_json(parse_json(read_text(path), path), path);
}

/// One configuration, or an array of them.
inline std::vector<PointConfiguration> read_configs_file(const std::string& path) {
    const Json doc = parse_json(read_text(path), path);
    std::vector<PointConfiguration> out;
    if (doc.is_array()) {
        for (std::size_t k = 0; k < doc.size(); ++k) {
            out.push_back(config_from_json(doc[k], path + "[" + std::to_string(k) + "]"));
        }
    } else {
        out.push_back(config_from_json(doc, path));
    }
    return out;
}

inline constexpr std::string_view kSweepHeader =
    "instance_id,N,r,lambda,capacity_stat,min_weight,nonneg,rowsum_min,rowsum_max,residual";

inline std::string sweep_csv(const ConjectureReport& report) {
    std::ostringstream out;
    out << kSweepHeader << "\n";
    for (const ConjectureRow& row : report.rows) {
        out << row.instance_id << ',' << row.n_points << ',' << format_double(row.r) << ','
            << format_double(row.lambda) << ',' << format_double(row.capacity_stat) << ','
            << format_double(row.min_weight) << ',' << (row.nonneg ? "true" : "false") << ','
            << format_double(row.rowsum_min) << ',' << format_double(row.rowsum_max) << ','
            << format_double(row.residual) << "\n";
    }
    return out.str();
}

inline constexpr std::string_view kMassesHeader = "leaf_index,node_id,mass";

inline std::string masses_csv(const GenerationalSet& set, const LeafMeasure& mu) {
    std::ostringstream out;
    out << kMassesHeader << "\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        out << i << ',' << set.leaf_node(i) << ',' << format_double(mu[i]) << "\n";
    }
    return out.str();
}

/// Reads a masses CSV (header `leaf_index,node_id,mass`, or bare one-mass-per-line).
inline LeafMeasure read_masses_csv(const std::string& text, const std::string& source = "masses") {
    std::istringstream in(text);
    std::string line;
    std::vector<double> masses;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == kMassesHeader) continue;
        const std::size_t comma = line.rfind(',');
        const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            if (used != cell.size()) throw std::invalid_argument("trailing characters");
            masses.push_back(v);
        } catch (const std::exception&) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": cannot parse mass \"" + cell + "\"",
                             line_no, comma == std::string::npos ? 1 : comma + 2);
        }
    }
    try {
        return LeafMeasure(std::move(masses));
    } catch (const DomainError& e) {
        throw ParseError(source + ": invalid measure: " + e.what());
    }
}

}  // namespace repel::io
