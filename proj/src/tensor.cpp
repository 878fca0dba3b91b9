#include "hazediff/tensor.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hazediff {

namespace {

using ordered_json = nlohmann::ordered_json;

void put_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("tensor file: truncated header length");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f32_le(std::vector<unsigned char>& buf, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    buf.push_back(static_cast<unsigned char>(bits & 0xff));
    buf.push_back(static_cast<unsigned char>((bits >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>((bits >> 16) & 0xff));
    buf.push_back(static_cast<unsigned char>((bits >> 24) & 0xff));
}

float get_f32_le(const unsigned char* p) {
    std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                         (static_cast<std::uint32_t>(p[1]) << 8) |
                         (static_cast<std::uint32_t>(p[2]) << 16) |
                         (static_cast<std::uint32_t>(p[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors,
                  const std::string& meta_json) {
    ordered_json header;
    header["dtype"] = "f32le";
    header["meta"] = ordered_json::parse(meta_json);
    ordered_json list = ordered_json::array();

    std::vector<unsigned char> payload;
    for (const NamedTensor& t : tensors) {
        if (t.values.size() != t.count())
            throw std::invalid_argument("save_tensors: shape does not match value count: " + t.name);
        ordered_json entry;
        entry["name"] = t.name;
        entry["shape"] = t.shape;
        entry["offset"] = payload.size();
        entry["nbytes"] = t.values.size() * 4;
        list.push_back(entry);
        for (double v : t.values) put_f32_le(payload, static_cast<float>(v));
    }
    header["tensors"] = list;

    std::string htext = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    put_u64_le(out, htext.size());
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

TensorFile load_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::uint64_t hlen = get_u64_le(in);
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error(path + ": truncated tensor header");

    ordered_json header = ordered_json::parse(htext);
    if (header.value("dtype", "") != "f32le")
        throw std::runtime_error(path + ": unsupported tensor dtype");

    std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());

    TensorFile file;
    file.meta_json = header.contains("meta") ? header["meta"].dump() : "{}";
    for (const auto& entry : header["tensors"]) {
        NamedTensor t;
        t.name = entry["name"].get<std::string>();
        t.shape = entry["shape"].get<std::vector<int>>();
        std::size_t offset = entry["offset"].get<std::size_t>();
        std::size_t nbytes = entry["nbytes"].get<std::size_t>();
        if (nbytes != t.count() * 4 || offset + nbytes > payload.size())
            throw std::runtime_error(path + ": tensor entry out of bounds: " + t.name);
        t.values.resize(t.count());
        for (std::size_t i = 0; i < t.values.size(); ++i)
            t.values[i] = get_f32_le(payload.data() + offset + 4 * i);
        file.tensors.push_back(std::move(t));
    }
    return file;
}

}  // namespace hazediff
