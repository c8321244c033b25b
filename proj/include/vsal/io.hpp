#ifndef VSAL_IO_HPP
#define VSAL_IO_HPP

#include <string>
#include <vector>

#include "vsal/map.hpp"

namespace vsal {

// Interleaved 8-bit RGB, row-major.
struct RgbImage {
    int h = 0, w = 0;
    std::vector<unsigned char> v;  // 3 bytes per pixel

    RgbImage() = default;
    RgbImage(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_ * 3, 0) {}
    unsigned char* px(int y, int x) { return &v[(static_cast<std::size_t>(y) * w + x) * 3]; }
    const unsigned char* px(int y, int x) const { return &v[(static_cast<std::size_t>(y) * w + x) * 3]; }
};

// Axis-aligned box, [x0,x1) x [y0,y1).
struct Box {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    std::int64_t area() const {
        return std::max(0, x1 - x0) * static_cast<std::int64_t>(std::max(0, y1 - y0));
    }
};

// Ordered list of per-frame image files plus the frame rate. Text format:
// comment lines start with '#', then "fps <value>", "size <w> <h>" and one
// "frame <relative path>" line per frame.
struct VideoManifest {
    double fps = 0;
    int width = 0, height = 0;
    std::vector<std::string> frame_paths;  // relative to dir
    std::string dir;

    int frame_count() const { return static_cast<int>(frame_paths.size()); }
};

RgbImage read_ppm(const std::string& path);
void write_ppm(const std::string& path, const RgbImage& img);

// PGM payload bytes come back as doubles in [0,255].
GrayMap read_pgm(const std::string& path);
// Max-scaled to 255 on write; an all-zero map stays zero.
void write_pgm(const std::string& path, const GrayMap& map);

VideoManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const VideoManifest& m);
RgbImage load_frame(const VideoManifest& m, int index);

// "frame,x,y,subject" with a header row.
std::vector<Fixation> read_fixations(const std::string& path);
void write_fixations(const std::string& path, const std::vector<Fixation>& fixations);

// "frame,rank,x0,y0,x1,y1" with a header row; boxes ranked from 1 per frame.
std::vector<std::vector<Box>> read_boxes(const std::string& path, int frame_count);
void write_boxes(const std::string& path, const std::vector<std::vector<Box>>& boxes);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace vsal

#endif
