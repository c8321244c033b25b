#include "vsal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "vsal/kernels.hpp"
#include "vsal/rng.hpp"

namespace fs = std::filesystem;

namespace vsal {

void SyntheticSceneSpec::validate() const {
    if (width < 16 || height < 16) throw ConfigError("scene: width/height must be >= 16");
    if (frame_count < 1) throw ConfigError("scene: frame_count must be >= 1");
    if (fps <= 0) throw ConfigError("scene: fps must be > 0");
    if (subjects < 1) throw ConfigError("scene: subjects must be >= 1");
    if (objects.empty() && random_objects_max < 1)
        throw ConfigError("scene: at least one object required");
    for (const auto& o : objects)
        if (o.kind != "disc" && o.kind != "square" && o.kind != "triangle")
            throw ConfigError("scene: unknown object kind '" + o.kind + "'");
}

namespace {

double reflect(double x, double lo, double hi) {
    // Fold into [lo, hi] with mirror reflections.
    double span = hi - lo;
    if (span <= 0) return lo;
    double t = std::fmod(x - lo, 2 * span);
    if (t < 0) t += 2 * span;
    return t <= span ? lo + t : hi - (t - span);
}

struct ResolvedObject {
    ObjectSpec spec;
    double r = 0, g = 0, b = 0;  // fill color in [0,1]
    double cx0 = 0, cy0 = 0, vx = 0, vy = 0;
    double center_x(int frame, double w, double margin) const {
        return reflect(cx0 + vx * frame, margin, w - 1 - margin);
    }
    double center_y(int frame, double h, double margin) const {
        return reflect(cy0 + vy * frame, margin, h - 1 - margin);
    }
};

bool covers(const ResolvedObject& o, double cx, double cy, int x, int y) {
    double dx = x - cx, dy = y - cy, s = o.spec.size;
    if (o.spec.kind == "disc") return dx * dx + dy * dy <= s * s;
    if (o.spec.kind == "square") return std::abs(dx) <= s && std::abs(dy) <= s;
    // Upright triangle: apex at the top, base at the bottom.
    if (dy < -s || dy > s) return false;
    double half_width = (dy + s) / 2.0;
    return std::abs(dx) <= half_width;
}

// Smooth value noise: a coarse random grid upsampled bilinearly.
std::vector<double> make_texture(int h, int w, int cells, Rng& rng) {
    int gs = std::max(2, cells);
    std::vector<double> grid(static_cast<std::size_t>(gs) * gs);
    for (auto& v : grid) v = rng.uniform();
    std::vector<double> out(static_cast<std::size_t>(h) * w);
    ResizeShape s{1, gs, gs, 1, h, w};
    ref::bilinear_forward(grid.data(), out.data(), s);
    return out;
}

}  // namespace

SyntheticVideo generate_synthetic(const SyntheticSceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    SyntheticVideo video;
    Rng texture_rng = Rng::derive(seed, 0);
    Rng object_rng = Rng::derive(seed, 1);
    Rng gaze_rng = Rng::derive(seed, 2);

    // Resolve object parameters; missing fields are drawn per video.
    std::vector<ObjectSpec> specs = spec.objects;
    if (specs.empty()) {
        int span = spec.random_objects_max - spec.random_objects_min;
        int count = spec.random_objects_min +
                    (span > 0 ? static_cast<int>(object_rng.below(static_cast<std::uint64_t>(span + 1))) : 0);
        count = std::max(1, count);
        const char* kinds[3] = {"disc", "square", "triangle"};
        for (int i = 0; i < count; ++i) {
            ObjectSpec o;
            o.kind = kinds[object_rng.below(3)];
            o.size = object_rng.uniform(spec.random_size_min, spec.random_size_max);
            o.speed = object_rng.uniform(spec.random_speed_min, spec.random_speed_max);
            specs.push_back(o);
        }
    }
    std::vector<ResolvedObject> objects;
    for (const auto& os : specs) {
        ResolvedObject o;
        o.spec = os;
        double margin = os.size + 1;
        o.cx0 = os.x0 >= 0 ? os.x0 : object_rng.uniform(margin, spec.width - 1 - margin);
        o.cy0 = os.y0 >= 0 ? os.y0 : object_rng.uniform(margin, spec.height - 1 - margin);
        double dir = os.direction >= 0 ? os.direction : object_rng.uniform(0, 6.283185307179586);
        o.vx = os.speed * std::cos(dir);
        o.vy = os.speed * std::sin(dir);
        // Saturated fill clearly separated from the muted background.
        o.r = 0.55 + 0.45 * object_rng.uniform();
        o.g = 0.55 + 0.45 * object_rng.uniform();
        o.b = 0.55 + 0.45 * object_rng.uniform();
        int channel = static_cast<int>(object_rng.below(3));
        (channel == 0 ? o.r : channel == 1 ? o.g : o.b) *= 0.25;
        video.objects.push_back(o.spec);
        video.objects.back().x0 = o.cx0;
        video.objects.back().y0 = o.cy0;
        video.objects.back().direction = dir;
        objects.push_back(o);
    }

    // Draw order: slow objects first so faster ones render on top; ranked
    // boxes list the fastest (then largest) first.
    std::vector<std::size_t> rank(objects.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        if (objects[a].spec.speed != objects[b].spec.speed)
            return objects[a].spec.speed > objects[b].spec.speed;
        return objects[a].spec.size > objects[b].spec.size;
    });

    std::vector<double> texture = make_texture(spec.height, spec.width, spec.texture_cells, texture_rng);

    video.frames.reserve(static_cast<std::size_t>(spec.frame_count));
    video.boxes.resize(static_cast<std::size_t>(spec.frame_count));
    video.motion.reserve(static_cast<std::size_t>(spec.frame_count));
    for (int t = 0; t < spec.frame_count; ++t) {
        RgbImage img(spec.height, spec.width);
        GrayMap motion(spec.height, spec.width);
        std::vector<std::pair<double, double>> centers(objects.size());
        for (std::size_t i = 0; i < objects.size(); ++i) {
            double margin = objects[i].spec.size + 1;
            centers[i] = {objects[i].center_x(t, spec.width, margin),
                          objects[i].center_y(t, spec.height, margin)};
        }
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                double base = 0.35 + spec.texture_contrast * (texture[y * spec.width + x] - 0.5);
                double r = base, g = base, b = base;
                // Iterate slowest-to-fastest so the fastest ends on top.
                for (auto it = rank.rbegin(); it != rank.rend(); ++it) {
                    const auto& o = objects[*it];
                    if (covers(o, centers[*it].first, centers[*it].second, x, y)) {
                        r = o.r;
                        g = o.g;
                        b = o.b;
                        motion.at(y, x) = o.spec.speed;
                    }
                }
                unsigned char* px = img.px(y, x);
                px[0] = static_cast<unsigned char>(std::clamp(r, 0.0, 1.0) * 255.0 + 0.5);
                px[1] = static_cast<unsigned char>(std::clamp(g, 0.0, 1.0) * 255.0 + 0.5);
                px[2] = static_cast<unsigned char>(std::clamp(b, 0.0, 1.0) * 255.0 + 0.5);
            }
        for (std::size_t k = 0; k < rank.size(); ++k) {
            const auto& o = objects[rank[k]];
            double cx = centers[rank[k]].first, cy = centers[rank[k]].second, s = o.spec.size;
            Box box;
            box.x0 = std::max(0, static_cast<int>(std::floor(cx - s)));
            box.y0 = std::max(0, static_cast<int>(std::floor(cy - s)));
            box.x1 = std::min(spec.width, static_cast<int>(std::ceil(cx + s)) + 1);
            box.y1 = std::min(spec.height, static_cast<int>(std::ceil(cy + s)) + 1);
            video.boxes[static_cast<std::size_t>(t)].push_back(box);
        }
        video.frames.push_back(std::move(img));
        video.motion.push_back(std::move(motion));
    }

    // Gaze model: object choice weighted by 1 + motion_bias * speed, gaze
    // point scattered around the chosen center.
    std::vector<double> weights;
    double weight_sum = 0;
    for (const auto& o : objects) {
        double w = 1.0 + spec.motion_bias * o.spec.speed;
        weights.push_back(w);
        weight_sum += w;
    }
    for (int t = 0; t < spec.frame_count; ++t) {
        for (int s = 0; s < spec.subjects; ++s) {
            double u = gaze_rng.uniform() * weight_sum;
            std::size_t pick = 0;
            for (double acc = 0; pick < weights.size(); ++pick) {
                acc += weights[pick];
                if (u < acc) break;
            }
            pick = std::min(pick, weights.size() - 1);
            const auto& o = objects[pick];
            double margin = o.spec.size + 1;
            double cx = o.center_x(t, spec.width, margin);
            double cy = o.center_y(t, spec.height, margin);
            double sigma = spec.fixation_scatter * o.spec.size;
            Fixation f;
            f.frame = t;
            f.subject = s;
            f.x = std::clamp(static_cast<int>(std::lround(cx + gaze_rng.normal(0, sigma))), 0,
                             spec.width - 1);
            f.y = std::clamp(static_cast<int>(std::lround(cy + gaze_rng.normal(0, sigma))), 0,
                             spec.height - 1);
            video.fixations.push_back(f);
        }
    }
    return video;
}

SyntheticSceneSpec parse_scene_spec(const std::string& text, int* videos) {
    SyntheticSceneSpec spec;
    if (videos) *videos = 1;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("scene spec line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        std::istringstream vs(value);
        if (key == "width") vs >> spec.width;
        else if (key == "height") vs >> spec.height;
        else if (key == "frames") vs >> spec.frame_count;
        else if (key == "fps") vs >> spec.fps;
        else if (key == "subjects") vs >> spec.subjects;
        else if (key == "fixation_scatter") vs >> spec.fixation_scatter;
        else if (key == "motion_bias") vs >> spec.motion_bias;
        else if (key == "texture_cells") vs >> spec.texture_cells;
        else if (key == "texture_contrast") vs >> spec.texture_contrast;
        else if (key == "videos" && videos) vs >> *videos;
        else if (key == "random_objects") vs >> spec.random_objects_min >> spec.random_objects_max;
        else if (key == "random_size") vs >> spec.random_size_min >> spec.random_size_max;
        else if (key == "random_speed") vs >> spec.random_speed_min >> spec.random_speed_max;
        else if (key == "object") {
            ObjectSpec o;
            vs >> o.kind >> o.size >> o.speed;
            if (!(vs >> o.x0 >> o.y0 >> o.direction)) {
                o.x0 = o.y0 = o.direction = -1;
            }
            spec.objects.push_back(o);
        } else throw ConfigError("scene spec line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    spec.validate();
    return spec;
}

void write_synthetic_dataset(const SyntheticSceneSpec& spec, int videos, std::uint64_t seed,
                             const std::string& out_dir) {
    if (videos < 1) throw ConfigError("write_synthetic_dataset: videos must be >= 1");
    fs::create_directories(out_dir);
    for (int v = 0; v < videos; ++v) {
        SyntheticVideo video = generate_synthetic(spec, seed + static_cast<std::uint64_t>(v));
        char name[16];
        std::snprintf(name, sizeof name, "v%03d", v);
        fs::path dir = fs::path(out_dir) / name;
        fs::create_directories(dir / "frames");
        fs::create_directories(dir / "motion");
        VideoManifest m;
        m.fps = spec.fps;
        m.width = spec.width;
        m.height = spec.height;
        for (std::size_t t = 0; t < video.frames.size(); ++t) {
            char fname[32];
            std::snprintf(fname, sizeof fname, "frames/f%06zu.ppm", t);
            write_ppm((dir / fname).string(), video.frames[t]);
            m.frame_paths.push_back(fname);
            std::snprintf(fname, sizeof fname, "motion/m%06zu.pgm", t);
            write_pgm((dir / fname).string(), video.motion[t]);
        }
        write_manifest((dir / "manifest.txt").string(), m);
        write_fixations((dir / "fixations.csv").string(), video.fixations);
        write_boxes((dir / "boxes.csv").string(), video.boxes);
    }
}

}  // namespace vsal
