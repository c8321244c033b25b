#ifndef VSAL_CHECKPOINT_HPP
#define VSAL_CHECKPOINT_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vsal/arch.hpp"
#include "vsal/common.hpp"

namespace vsal {

// Versioned container: a diff-friendly text header (kind, metadata, the
// architecture table, the tensor directory) followed by raw little-endian
// float payloads in directory order. Save/load round-trips bit-identically.
struct Checkpoint {
    static constexpr int format_version = 1;

    std::string kind;  // "omcnn" | "clstm"
    ArchTable arch;
    std::map<std::string, std::string> meta;  // step, rng, dataset mean, config echo

    struct Entry {
        std::string name;
        Shape shape;
        std::vector<float> data;
    };
    std::vector<Entry> arrays;

    void add(const std::string& name, Shape shape, std::vector<float> data);
    const Entry* find(const std::string& name) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace vsal

#endif
