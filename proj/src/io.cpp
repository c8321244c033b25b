#include "vsal/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace vsal {

namespace {

std::string next_header_token(std::istream& in) {
    // PNM headers allow '#' comments between tokens.
    std::string tok;
    while (in >> tok) {
        if (tok[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        return tok;
    }
    throw DataError("pnm: truncated header");
}

void read_pnm_header(std::istream& in, const std::string& magic, const std::string& path, int& w,
                     int& h) {
    std::string m = next_header_token(in);
    if (m != magic) throw DataError(path + ": expected " + magic + " header, got '" + m + "'");
    w = std::stoi(next_header_token(in));
    h = std::stoi(next_header_token(in));
    int maxval = std::stoi(next_header_token(in));
    if (maxval != 255) throw DataError(path + ": only 8-bit PNM supported, maxval " + std::to_string(maxval));
    in.get();  // single whitespace before the payload
}

}  // namespace

RgbImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image: " + path);
    int w = 0, h = 0;
    read_pnm_header(in, "P6", path, w, h);
    RgbImage img(h, w);
    in.read(reinterpret_cast<char*>(img.v.data()), static_cast<std::streamsize>(img.v.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.v.size()))
        throw DataError(path + ": truncated pixel payload");
    return img;
}

void write_ppm(const std::string& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image: " + path);
    out << "P6\n" << img.w << ' ' << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.v.data()), static_cast<std::streamsize>(img.v.size()));
}

GrayMap read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image: " + path);
    int w = 0, h = 0;
    read_pnm_header(in, "P5", path, w, h);
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
        throw DataError(path + ": truncated pixel payload");
    GrayMap m(h, w);
    for (std::size_t i = 0; i < buf.size(); ++i) m.v[i] = static_cast<double>(buf[i]);
    return m;
}

void write_pgm(const std::string& path, const GrayMap& map) {
    double peak = map_max(map);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image: " + path);
    out << "P5\n" << map.w << ' ' << map.h << "\n255\n";
    std::vector<unsigned char> buf(map.v.size());
    double scale = peak > 0 ? 255.0 / peak : 0.0;
    for (std::size_t i = 0; i < map.v.size(); ++i) {
        double x = map.v[i] * scale;
        buf[i] = static_cast<unsigned char>(std::clamp(x + 0.5, 0.0, 255.0));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

VideoManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    VideoManifest m;
    m.dir = fs::path(path).parent_path().string();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string key;
        is >> key;
        if (key == "fps") is >> m.fps;
        else if (key == "size") is >> m.width >> m.height;
        else if (key == "frame") {
            std::string p;
            is >> p;
            m.frame_paths.push_back(p);
        } else throw DataError(path + ": unknown manifest key '" + key + "'");
    }
    if (m.fps <= 0) throw DataError(path + ": manifest missing fps");
    if (m.frame_paths.empty()) throw DataError(path + ": manifest lists no frames");
    return m;
}

void write_manifest(const std::string& path, const VideoManifest& m) {
    std::ostringstream os;
    os << "# video manifest\n";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", m.fps);
    os << "fps " << buf << '\n';
    if (m.width > 0 && m.height > 0) os << "size " << m.width << ' ' << m.height << '\n';
    for (const auto& p : m.frame_paths) os << "frame " << p << '\n';
    write_text_file(path, os.str());
}

RgbImage load_frame(const VideoManifest& m, int index) {
    if (index < 0 || index >= m.frame_count())
        throw DataError("frame index " + std::to_string(index) + " out of range for manifest with " +
                        std::to_string(m.frame_count()) + " frames");
    fs::path p = fs::path(m.dir) / m.frame_paths[static_cast<std::size_t>(index)];
    if (p.extension() != ".ppm")
        throw DataError(p.string() + ": RGB frames must be binary PPM files");
    return read_ppm(p.string());
}

std::vector<Fixation> read_fixations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fixation file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "frame,x,y,subject")
        throw DataError(path + ": expected header 'frame,x,y,subject'");
    std::vector<Fixation> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Fixation f;
        char extra;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d%c", &f.frame, &f.x, &f.y, &f.subject, &extra) != 4)
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed fixation record '" + line +
                            "'");
        out.push_back(f);
    }
    return out;
}

void write_fixations(const std::string& path, const std::vector<Fixation>& fixations) {
    std::ostringstream os;
    os << "frame,x,y,subject\n";
    for (const auto& f : fixations)
        os << f.frame << ',' << f.x << ',' << f.y << ',' << f.subject << '\n';
    write_text_file(path, os.str());
}

std::vector<std::vector<Box>> read_boxes(const std::string& path, int frame_count) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open box file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "frame,rank,x0,y0,x1,y1")
        throw DataError(path + ": expected header 'frame,rank,x0,y0,x1,y1'");
    std::vector<std::vector<Box>> out(static_cast<std::size_t>(frame_count));
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        int frame, rank;
        Box b;
        char extra;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d,%d%c", &frame, &rank, &b.x0, &b.y0, &b.x1, &b.y1,
                        &extra) != 6)
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed box record '" + line + "'");
        if (frame < 0 || frame >= frame_count)
            throw DataError(path + ":" + std::to_string(lineno) + ": frame index out of range");
        auto& list = out[static_cast<std::size_t>(frame)];
        if (rank != static_cast<int>(list.size()) + 1)
            throw DataError(path + ":" + std::to_string(lineno) + ": ranks must count up from 1 per frame");
        list.push_back(b);
    }
    return out;
}

void write_boxes(const std::string& path, const std::vector<std::vector<Box>>& boxes) {
    std::ostringstream os;
    os << "frame,rank,x0,y0,x1,y1\n";
    for (std::size_t f = 0; f < boxes.size(); ++f)
        for (std::size_t r = 0; r < boxes[f].size(); ++r) {
            const Box& b = boxes[f][r];
            os << f << ',' << r + 1 << ',' << b.x0 << ',' << b.y0 << ',' << b.x1 << ',' << b.y1 << '\n';
        }
    write_text_file(path, os.str());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
}

}  // namespace vsal
