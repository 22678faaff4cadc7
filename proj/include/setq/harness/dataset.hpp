#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "setq/rl/replay.hpp"

namespace setq::harness {

// Dataset layout (little-endian):
//   magic "SETQDAT1" | u32 version | u64 sample_count | u32 header_len |
//   header JSON | records
// Each record: u32 byte_length, then state, action u8, reward f32, next
// state. A state is: u32 n, n x (dr, dv, dl) f32, 3 f32 static, u32 + f32[]
// relational view, u32 + f32[] occupancy view.
//
// sample_count is patched in on finalize; the all-ones sentinel marks a
// file that was never finalized (write aborted part way).

inline constexpr uint64_t kDatasetPartialMarker = ~0ULL;

std::string file_hash_hex(const std::string& path);  // FNV-1a 64 of the raw bytes

class DatasetWriter {
public:
    DatasetWriter(const std::string& path, const std::string& header_json);
    ~DatasetWriter();

    void write(const rl::Transition& t);
    uint64_t count() const { return count_; }

    // Patches the sample count; without this call the file keeps the
    // partial marker.
    void finalize();

private:
    std::ofstream os_;
    std::string path_;
    uint64_t count_ = 0;
    bool finalized_ = false;
};

// Controls which observation views survive loading; training one encoder
// does not need the others in memory.
struct LoadFilter {
    bool keep_set = true;
    bool keep_rel = true;
    bool keep_occ = true;

    static LoadFilter for_encoder(enc::EncoderKind kind) {
        LoadFilter f;
        f.keep_set = kind == enc::EncoderKind::DeepSet || kind == enc::EncoderKind::Set2Set;
        f.keep_rel = kind == enc::EncoderKind::Fixed;
        f.keep_occ = kind == enc::EncoderKind::Grid;
        return f;
    }
};

class DatasetReader {
public:
    explicit DatasetReader(const std::string& path, bool allow_partial = false);

    const std::string& header_json() const { return header_; }
    uint64_t count() const { return count_; }
    bool partial() const { return count_ == kDatasetPartialMarker; }

    // Streaming read; returns false at end of data.
    bool next(rl::Transition& out, const LoadFilter& filter = {});

private:
    std::ifstream is_;
    std::string header_;
    uint64_t count_ = 0;
    uint64_t read_ = 0;
};

// The dynamic-set size counts surrounding vehicles in sensor range; a
// transition survives only if both its state and next state have at most
// `max_vehicles`. Order is preserved. Returns the kept count.
uint64_t filter_dataset_max_vehicles(const std::string& in_path, const std::string& out_path,
                                     int max_vehicles = 6);

// Loads a whole dataset into a replay buffer.
rl::ReplayBuffer load_dataset(const std::string& path, uint64_t sample_seed,
                              const LoadFilter& filter = {});

}  // namespace setq::harness
