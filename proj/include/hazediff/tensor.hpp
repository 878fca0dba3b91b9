#pragma once

#include <string>
#include <vector>

namespace hazediff {

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;

    std::size_t count() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
};

// Flat named-tensor file: an 8-byte little-endian header length, a JSON
// header listing names, shapes and byte offsets (plus a free-form "meta"
// object), then the raw payload of little-endian 32-bit floats.
void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors,
                  const std::string& meta_json = "{}");

struct TensorFile {
    std::vector<NamedTensor> tensors;
    std::string meta_json;
};

TensorFile load_tensors(const std::string& path);

}  // namespace hazediff
