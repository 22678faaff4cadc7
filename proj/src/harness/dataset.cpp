#include "setq/harness/dataset.hpp"

#include <cstring>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace setq::harness {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'T', 'Q', 'D', 'A', 'T', '1'};
constexpr uint32_t kVersion = 1;
constexpr std::streamoff kCountOffset = 12;  // magic + version

void put_u32(std::string& buf, uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                 static_cast<char>(v >> 24)};
    buf.append(b, 4);
}

void put_f32(std::string& buf, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(buf, u);
}

struct Cursor {
    const char* p;
    const char* end;

    uint32_t u32() {
        if (end - p < 4) throw std::runtime_error("dataset record truncated");
        uint32_t v = static_cast<uint8_t>(p[0]) | (static_cast<uint8_t>(p[1]) << 8) |
                     (static_cast<uint8_t>(p[2]) << 16) |
                     (static_cast<uint32_t>(static_cast<uint8_t>(p[3])) << 24);
        p += 4;
        return v;
    }

    float f32() {
        uint32_t u = u32();
        float v;
        std::memcpy(&v, &u, 4);
        return v;
    }

    uint8_t u8() {
        if (p >= end) throw std::runtime_error("dataset record truncated");
        return static_cast<uint8_t>(*p++);
    }
};

void encode_state(std::string& buf, const enc::ObservationBundle& s) {
    put_u32(buf, static_cast<uint32_t>(s.set.size()));
    for (const auto& f : s.set) {
        put_f32(buf, f.dr);
        put_f32(buf, f.dv);
        put_f32(buf, static_cast<float>(f.dl));
    }
    put_f32(buf, s.stat.speed_frac);
    put_f32(buf, s.stat.left_available);
    put_f32(buf, s.stat.right_available);
    put_u32(buf, static_cast<uint32_t>(s.rel.size()));
    for (float v : s.rel) put_f32(buf, v);
    put_u32(buf, static_cast<uint32_t>(s.occ.size()));
    for (float v : s.occ) put_f32(buf, v);
}

void decode_state(Cursor& c, enc::ObservationBundle& s, const LoadFilter& filter, uint32_t* set_size) {
    uint32_t n = c.u32();
    if (set_size) *set_size = n;
    s.set.clear();
    if (filter.keep_set) s.set.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        enc::DynamicFeature f;
        f.dr = c.f32();
        f.dv = c.f32();
        f.dl = static_cast<int>(c.f32());
        if (filter.keep_set) s.set.push_back(f);
    }
    s.stat.speed_frac = c.f32();
    s.stat.left_available = c.f32();
    s.stat.right_available = c.f32();
    uint32_t rel_n = c.u32();
    s.rel.clear();
    if (filter.keep_rel) s.rel.reserve(rel_n);
    for (uint32_t i = 0; i < rel_n; ++i) {
        float v = c.f32();
        if (filter.keep_rel) s.rel.push_back(v);
    }
    uint32_t occ_n = c.u32();
    s.occ.clear();
    if (filter.keep_occ) s.occ.reserve(occ_n);
    for (uint32_t i = 0; i < occ_n; ++i) {
        float v = c.f32();
        if (filter.keep_occ) s.occ.push_back(v);
    }
}

void write_u32_raw(std::ostream& os, uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                 static_cast<char>(v >> 24)};
    os.write(b, 4);
}

void write_u64_raw(std::ostream& os, uint64_t v) {
    write_u32_raw(os, static_cast<uint32_t>(v));
    write_u32_raw(os, static_cast<uint32_t>(v >> 32));
}

uint32_t read_u32_raw(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t read_u64_raw(std::istream& is) {
    uint64_t lo = read_u32_raw(is);
    uint64_t hi = read_u32_raw(is);
    return lo | (hi << 32);
}

std::string encode_record(const rl::Transition& t) {
    std::string payload;
    encode_state(payload, t.state);
    payload.push_back(static_cast<char>(t.action));
    put_f32(payload, t.reward);
    encode_state(payload, t.next_state);
    std::string rec;
    put_u32(rec, static_cast<uint32_t>(payload.size()));
    rec += payload;
    return rec;
}

}  // namespace

std::string file_hash_hex(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for hashing: " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof(buf));
        std::streamsize got = is.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<uint8_t>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

DatasetWriter::DatasetWriter(const std::string& path, const std::string& header_json)
    : os_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!os_) throw std::runtime_error("cannot open dataset for writing: " + path);
    os_.write(kMagic, 8);
    write_u32_raw(os_, kVersion);
    write_u64_raw(os_, kDatasetPartialMarker);
    write_u32_raw(os_, static_cast<uint32_t>(header_json.size()));
    os_.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
    if (!os_) throw std::runtime_error("dataset header write failed: " + path);
}

DatasetWriter::~DatasetWriter() = default;  // no finalize: partial marker stays

void DatasetWriter::write(const rl::Transition& t) {
    std::string rec = encode_record(t);
    os_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
    if (!os_) throw std::runtime_error("dataset write failed after " + std::to_string(count_) +
                                       " samples: " + path_);
    ++count_;
}

void DatasetWriter::finalize() {
    os_.seekp(kCountOffset);
    write_u64_raw(os_, count_);
    os_.flush();
    if (!os_) throw std::runtime_error("dataset finalize failed: " + path_);
    os_.close();
    finalized_ = true;
}

DatasetReader::DatasetReader(const std::string& path, bool allow_partial) : is_(path, std::ios::binary) {
    if (!is_) throw std::runtime_error("cannot open dataset: " + path);
    char magic[8];
    is_.read(magic, 8);
    if (!is_ || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("not a dataset file: " + path);
    }
    uint32_t version = read_u32_raw(is_);
    if (version != kVersion) {
        throw std::runtime_error("unsupported dataset version " + std::to_string(version));
    }
    count_ = read_u64_raw(is_);
    if (count_ == kDatasetPartialMarker && !allow_partial) {
        throw std::runtime_error("dataset is marked partial (write was aborted): " + path);
    }
    uint32_t hlen = read_u32_raw(is_);
    header_.resize(hlen);
    is_.read(header_.data(), hlen);
    if (!is_) throw std::runtime_error("truncated dataset header: " + path);
}

bool DatasetReader::next(rl::Transition& out, const LoadFilter& filter) {
    if (count_ != kDatasetPartialMarker && read_ >= count_) return false;
    uint32_t len = read_u32_raw(is_);
    if (!is_ || is_.eof()) return false;
    std::vector<char> payload(len);
    is_.read(payload.data(), len);
    if (!is_) return false;
    Cursor c{payload.data(), payload.data() + payload.size()};
    decode_state(c, out.state, filter, nullptr);
    out.action = static_cast<Action>(c.u8());
    out.reward = c.f32();
    decode_state(c, out.next_state, filter, nullptr);
    ++read_;
    return true;
}

uint64_t filter_dataset_max_vehicles(const std::string& in_path, const std::string& out_path,
                                     int max_vehicles) {
    DatasetReader reader(in_path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(reader.header_json());
    } catch (const nlohmann::json::exception&) {
        header = nlohmann::json::object();
    }
    header["filter_max_vehicles"] = max_vehicles;
    DatasetWriter writer(out_path, header.dump());
    rl::Transition t;
    while (reader.next(t)) {
        if (static_cast<int>(t.state.set.size()) <= max_vehicles &&
            static_cast<int>(t.next_state.set.size()) <= max_vehicles) {
            writer.write(t);
        }
    }
    uint64_t kept = writer.count();
    writer.finalize();
    return kept;
}

rl::ReplayBuffer load_dataset(const std::string& path, uint64_t sample_seed, const LoadFilter& filter) {
    DatasetReader reader(path);
    uint64_t capacity = reader.count();
    if (capacity == 0 || capacity == kDatasetPartialMarker) {
        throw std::runtime_error("dataset is empty: " + path);
    }
    rl::ReplayBuffer buffer(capacity, sample_seed);
    rl::Transition t;
    while (reader.next(t, filter)) buffer.push(std::move(t));
    if (buffer.size() != capacity) {
        throw std::runtime_error("dataset count mismatch: header says " + std::to_string(capacity) +
                                 ", read " + std::to_string(buffer.size()));
    }
    return buffer;
}

}  // namespace setq::harness
