#include "vsal/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace vsal {

namespace {

// Payloads are written little-endian; byte-swap on the (unlikely) big-endian
// host so files stay portable.
bool host_little_endian() {
    const std::uint16_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}

void swap_floats(std::vector<float>& v) {
    for (auto& f : v) {
        unsigned char* p = reinterpret_cast<unsigned char*>(&f);
        std::swap(p[0], p[3]);
        std::swap(p[1], p[2]);
    }
}

}  // namespace

void Checkpoint::add(const std::string& name, Shape shape, std::vector<float> data) {
    if (numel(shape) != static_cast<std::int64_t>(data.size()))
        throw DimensionError("checkpoint: tensor '" + name + "' data length " +
                             std::to_string(data.size()) + " != shape " + shape_str(shape));
    arrays.push_back({name, std::move(shape), std::move(data)});
}

const Checkpoint::Entry* Checkpoint::find(const std::string& name) const {
    for (const auto& e : arrays)
        if (e.name == name) return &e;
    return nullptr;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << "vsal-checkpoint " << format_version << '\n';
    out << "kind " << kind << '\n';
    for (const auto& [key, value] : meta) out << "meta." << key << ' ' << value << '\n';
    out << arch.serialize();
    for (const auto& e : arrays) {
        out << "tensor " << e.name << " f32";
        for (int d : e.shape) out << ' ' << d;
        out << '\n';
    }
    out << "payload\n";
    bool le = host_little_endian();
    for (const auto& e : arrays) {
        if (le) {
            out.write(reinterpret_cast<const char*>(e.data.data()),
                      static_cast<std::streamsize>(e.data.size() * sizeof(float)));
        } else {
            std::vector<float> swapped = e.data;
            swap_floats(swapped);
            out.write(reinterpret_cast<const char*>(swapped.data()),
                      static_cast<std::streamsize>(swapped.size() * sizeof(float)));
        }
    }
    if (!out) throw DataError("short write while saving checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty checkpoint");
    {
        std::istringstream is(line);
        std::string magic;
        int version = 0;
        is >> magic >> version;
        if (magic != "vsal-checkpoint")
            throw DataError(path + ": not a checkpoint file");
        if (version != format_version)
            throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    std::vector<std::string> arch_lines;
    while (std::getline(in, line)) {
        if (line == "payload") break;
        std::istringstream is(line);
        std::string key;
        is >> key;
        if (key == "kind") {
            is >> ckpt.kind;
        } else if (key.rfind("meta.", 0) == 0) {
            std::string value;
            std::getline(is, value);
            if (!value.empty() && value[0] == ' ') value.erase(0, 1);
            ckpt.meta[key.substr(5)] = value;
        } else if (key.rfind("arch.", 0) == 0) {
            arch_lines.push_back(line);
        } else if (key == "tensor") {
            Entry e;
            std::string dtype;
            is >> e.name >> dtype;
            if (dtype != "f32") throw DataError(path + ": unsupported dtype " + dtype);
            int d;
            while (is >> d) e.shape.push_back(d);
            ckpt.arrays.push_back(std::move(e));
        } else {
            throw DataError(path + ": unknown checkpoint line '" + line + "'");
        }
    }
    ckpt.arch = ArchTable::parse(arch_lines);
    bool le = host_little_endian();
    for (auto& e : ckpt.arrays) {
        e.data.resize(static_cast<std::size_t>(numel(e.shape)));
        in.read(reinterpret_cast<char*>(e.data.data()),
                static_cast<std::streamsize>(e.data.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(e.data.size() * sizeof(float)))
            throw DataError(path + ": truncated payload for tensor " + e.name);
        if (!le) swap_floats(e.data);
    }
    return ckpt;
}

}  // namespace vsal
