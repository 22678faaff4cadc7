#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "setq/nn/params.hpp"

namespace setq::nn {

// Checkpoint layout (all little-endian):
//   magic "SETQCKP1" | u32 version | u32 desc_len | descriptor bytes (JSON)
//   u32 tensor_count | per tensor: u32 name_len, name, u32 ndim, u32 dims[],
//   f32 data[]
// The byte layout is deterministic so equal networks produce equal files.

inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'T', 'Q', 'C', 'K', 'P', '1'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    write_u32(os, u);
}

inline float read_f32(std::istream& is) {
    uint32_t u = read_u32(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

}  // namespace detail

struct CheckpointData {
    std::string descriptor;  // architecture JSON
    std::vector<std::pair<std::string, Tensor<float>>> tensors;
};

template <typename S>
void save_checkpoint(const std::string& path, const std::string& descriptor,
                     const ParameterSet<S>& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kCheckpointMagic, 8);
    detail::write_u32(os, kCheckpointVersion);
    detail::write_u32(os, static_cast<uint32_t>(descriptor.size()));
    os.write(descriptor.data(), static_cast<std::streamsize>(descriptor.size()));
    detail::write_u32(os, static_cast<uint32_t>(params.size()));
    for (const auto& e : params) {
        detail::write_u32(os, static_cast<uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        detail::write_u32(os, static_cast<uint32_t>(e.tensor->shape.size()));
        for (int d : e.tensor->shape) detail::write_u32(os, static_cast<uint32_t>(d));
        for (S v : e.tensor->data) detail::write_f32(os, static_cast<float>(v));
    }
    if (!os) throw std::runtime_error("write failed for checkpoint: " + path);
}

inline CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path);
    }
    uint32_t version = detail::read_u32(is);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
    CheckpointData ck;
    uint32_t desc_len = detail::read_u32(is);
    ck.descriptor.resize(desc_len);
    is.read(ck.descriptor.data(), desc_len);
    uint32_t count = detail::read_u32(is);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = detail::read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        uint32_t ndim = detail::read_u32(is);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(detail::read_u32(is));
        Tensor<float> t(shape);
        for (auto& v : t.data) v = detail::read_f32(is);
        if (!is) throw std::runtime_error("truncated checkpoint: " + path);
        ck.tensors.emplace_back(std::move(name), std::move(t));
    }
    return ck;
}

// Loads checkpoint tensors into an already-built network's parameter view.
template <typename S>
void apply_checkpoint(const CheckpointData& ck, const ParameterSet<S>& params) {
    if (ck.tensors.size() != params.size()) {
        throw std::runtime_error("checkpoint holds " + std::to_string(ck.tensors.size()) +
                                 " tensors, network expects " + std::to_string(params.size()));
    }
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& [name, t] = ck.tensors[i];
        if (name != params[i].name || t.shape != params[i].tensor->shape) {
            throw std::runtime_error("checkpoint tensor mismatch at " + name);
        }
        auto& dst = params[i].tensor->data;
        for (size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<S>(t.data[j]);
    }
}

}  // namespace setq::nn
