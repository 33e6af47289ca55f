#include "wsimil/slide.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wsimil/errors.hpp"

namespace wsimil {

using nlohmann::json;

int Slide::find_level(double magnification) const {
    for (int i = 0; i < level_count(); ++i)
        if (levels[i].magnification == magnification) return i;
    return -1;
}

int Slide::nearest_source_level(double magnification) const {
    int best = -1;
    for (int i = 0; i < level_count(); ++i) {
        if (levels[i].magnification >= magnification) {
            if (best < 0 || levels[i].magnification < levels[best].magnification) best = i;
        }
    }
    return best;
}

std::pair<int, int> Slide::dims_at(double magnification) const {
    int exact = find_level(magnification);
    if (exact >= 0) return {levels[exact].width, levels[exact].height};
    int src = nearest_source_level(magnification);
    if (src < 0) throw data_error("slide " + id + ": magnification above base");
    double s = magnification / levels[src].magnification;
    int w = static_cast<int>(std::lround(levels[src].width * s));
    int h = static_cast<int>(std::lround(levels[src].height * s));
    if (w < 1 || h < 1) throw data_error("slide " + id + ": magnification too small");
    return {w, h};
}

Slide open_slide(const std::filesystem::path& dir) {
    const auto meta_path = dir / "slide.json";
    std::ifstream in(meta_path);
    if (!in) throw data_error("missing slide metadata: " + meta_path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw data_error("corrupt slide metadata " + meta_path.string() + ": " + e.what());
    }

    Slide s;
    s.dir = dir;
    try {
        s.id = j.at("id").get<std::string>();
        if (j.contains("label") && !j.at("label").is_null()) {
            int label = j.at("label").get<int>();
            if (label != 0 && label != 1)
                throw data_error("slide " + s.id + ": label must be 0 or 1");
            s.label = label;
        }
        for (const auto& jl : j.at("levels")) {
            LevelMeta lm;
            lm.width = jl.at("width").get<int>();
            lm.height = jl.at("height").get<int>();
            lm.magnification = jl.at("magnification").get<double>();
            lm.file = jl.at("file").get<std::string>();
            s.levels.push_back(lm);
        }
    } catch (const json::exception& e) {
        throw data_error("corrupt slide metadata " + meta_path.string() + ": " + e.what());
    }
    if (s.levels.empty()) throw data_error("slide " + s.id + ": no levels");

    for (int i = 0; i < s.level_count(); ++i) {
        const LevelMeta& lm = s.levels[i];
        if (lm.width < 1 || lm.height < 1)
            throw data_error("slide " + s.id + ": level " + std::to_string(i) + " has empty dims");
        if (lm.magnification <= 0)
            throw data_error("slide " + s.id + ": level " + std::to_string(i) +
                             " has non-positive magnification");
        if (i > 0) {
            const LevelMeta& up = s.levels[i - 1];
            if (lm.width != (up.width + 1) / 2 || lm.height != (up.height + 1) / 2)
                throw data_error("slide " + s.id + ": level " + std::to_string(i) +
                                 " is not a ceil-halving of the level above");
            double expected = s.levels[0].magnification / static_cast<double>(1 << i);
            if (std::abs(lm.magnification - expected) > 1e-9)
                throw data_error("slide " + s.id + ": level " + std::to_string(i) +
                                 " magnification is not base/2^level");
        }
        // header check: declared dims must match the raster on disk
        PnmHeader hdr = read_pnm_header(dir / lm.file);
        if (hdr.channels != 3)
            throw data_error("slide " + s.id + ": level raster " + lm.file + " is not P6");
        if (hdr.width != lm.width || hdr.height != lm.height)
            throw data_error("slide " + s.id + ": level raster " + lm.file +
                             " dims disagree with metadata");
        s.headers.push_back(hdr);
    }
    return s;
}

ImageRGB read_region(const Slide& slide, int level, int x, int y, int w, int h) {
    if (level < 0 || level >= slide.level_count())
        throw data_error("slide " + slide.id + ": no such level " + std::to_string(level));
    const LevelMeta& lm = slide.levels[level];
    if (w <= 0 || h <= 0 || x < 0 || y < 0 || x + w > lm.width || y + h > lm.height)
        throw data_error("slide " + slide.id + ": region out of bounds at level " +
                         std::to_string(level));
    return read_ppm_region(slide.dir / lm.file, slide.headers[level], x, y, w, h);
}

void write_slide_meta(const std::filesystem::path& dir, const std::string& id,
                      std::optional<int> label, const std::vector<LevelMeta>& levels) {
    json j;
    j["id"] = id;
    if (label)
        j["label"] = *label;
    else
        j["label"] = nullptr;
    j["levels"] = json::array();
    for (const auto& lm : levels) {
        j["levels"].push_back({{"width", lm.width},
                               {"height", lm.height},
                               {"magnification", lm.magnification},
                               {"file", lm.file}});
    }
    std::ofstream out(dir / "slide.json", std::ios::trunc);
    if (!out) throw data_error("cannot write slide metadata in " + dir.string());
    out << j.dump(2) << "\n";
}

} // namespace wsimil
