#include "wsimil/annotations.hpp"

#include <fstream>

#include <json.hpp>

#include "wsimil/errors.hpp"

namespace wsimil {

using nlohmann::json;

bool point_in_polygon(const Polygon& poly, double x, double y) {
    // nonzero winding number; edges taken half-open in y so a shared vertex
    // is counted once
    int winding = 0;
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = v[i];
        const auto& b = v[(i + 1) % n];
        double cross = (b[0] - a[0]) * (y - a[1]) - (x - a[0]) * (b[1] - a[1]);
        if (a[1] <= y) {
            if (b[1] > y && cross > 0) ++winding;
        } else {
            if (b[1] <= y && cross < 0) --winding;
        }
    }
    return winding != 0;
}

bool point_in_any(const AnnotationSet& set, double x, double y) {
    for (const auto& p : set.polygons)
        if (point_in_polygon(p, x, y)) return true;
    return false;
}

AnnotationSet load_annotations(const std::filesystem::path& file, int level0_width,
                               int level0_height) {
    std::ifstream in(file);
    if (!in) throw data_error("missing annotation file: " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw data_error("corrupt annotation file " + file.string() + ": " + e.what());
    }
    AnnotationSet set;
    try {
        set.slide_id = j.at("slide_id").get<std::string>();
        for (const auto& jp : j.at("polygons")) {
            Polygon poly;
            for (const auto& jv : jp)
                poly.vertices.push_back({jv.at(0).get<double>(), jv.at(1).get<double>()});
            // drop a duplicated closing vertex; closure is implicit
            if (poly.vertices.size() >= 2 && poly.vertices.front() == poly.vertices.back())
                poly.vertices.pop_back();
            if (poly.vertices.size() < 3)
                throw data_error("polygon with fewer than 3 vertices in " + file.string());
            if (level0_width > 0 && level0_height > 0) {
                for (const auto& vtx : poly.vertices)
                    if (vtx[0] < 0 || vtx[1] < 0 || vtx[0] > level0_width || vtx[1] > level0_height)
                        throw data_error("annotation vertex outside level-0 bounds in " +
                                         file.string());
            }
            set.polygons.push_back(std::move(poly));
        }
    } catch (const json::exception& e) {
        throw data_error("corrupt annotation file " + file.string() + ": " + e.what());
    }
    return set;
}

void save_annotations(const std::filesystem::path& file, const AnnotationSet& set) {
    json j;
    j["slide_id"] = set.slide_id;
    j["polygons"] = json::array();
    for (const auto& poly : set.polygons) {
        json jp = json::array();
        for (const auto& v : poly.vertices) jp.push_back({v[0], v[1]});
        j["polygons"].push_back(jp);
    }
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw data_error("cannot write annotation file: " + file.string());
    out << j.dump(2) << "\n";
}

} // namespace wsimil
