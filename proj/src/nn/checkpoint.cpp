#include "emotionbox/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <string_view>

#include "emotionbox/errors.hpp"
#include "emotionbox/file_util.hpp"

namespace ebox::nn {

namespace {

constexpr std::string_view kMagic = "EBOX1";

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    template <typename U>
    void le(U v) {
        static_assert(std::is_unsigned_v<U>);
        for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    template <typename U>
    U le() {
        if (data_.size() - pos_ < sizeof(U)) throw MalformedFile("checkpoint truncated");
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(data_[pos_ + i]) << (8 * i));
        pos_ += sizeof(U);
        return v;
    }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

void write_tensors(Writer& w, const ModelParams<float>& p) {
    for (const auto* t : p.tensors()) {
        w.u32(static_cast<std::uint32_t>(t->rows));
        w.u32(static_cast<std::uint32_t>(t->cols));
        for (float v : t->data) w.f32(v);
    }
}

void read_tensors(Reader& r, ModelParams<float>& p) {
    for (auto* t : p.tensors()) {
        const auto rows = r.u32();
        const auto cols = r.u32();
        if (static_cast<int>(rows) != t->rows || static_cast<int>(cols) != t->cols) {
            throw MalformedFile("checkpoint tensor shape does not match its config");
        }
        for (auto& v : t->data) v = r.f32();
    }
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    const auto& cfg = ckpt.params.config;
    Writer w;
    w.raw(kMagic.data(), kMagic.size());
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(ckpt.mode));
    w.u32(static_cast<std::uint32_t>(cfg.vocab));
    w.u32(static_cast<std::uint32_t>(cfg.conditioning_dim));
    w.u32(static_cast<std::uint32_t>(cfg.fc_dim));
    w.u32(static_cast<std::uint32_t>(cfg.hidden));
    w.u32(static_cast<std::uint32_t>(cfg.layers));
    w.f32(cfg.dropout);
    w.u64(ckpt.seed);
    w.u32(ckpt.epochs_completed);
    w.f64(ckpt.adam.hyper.lr);
    w.f64(ckpt.adam.hyper.beta1);
    w.f64(ckpt.adam.hyper.beta2);
    w.f64(ckpt.adam.hyper.epsilon);
    w.u64(ckpt.adam.step);
    w.u32(static_cast<std::uint32_t>(ckpt.params.tensors().size()));
    write_tensors(w, ckpt.params);
    write_tensors(w, ckpt.adam.m);
    write_tensors(w, ckpt.adam.v);
    w.u64(fnv1a(w.out));
    return std::move(w.out);
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size() + 4 + 8 ||
        std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
        throw MalformedFile("not an EBOX1 checkpoint");
    }
    Reader r(bytes.subspan(kMagic.size()));
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
        throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                              std::to_string(kCheckpointVersion));
    }
    const auto body = bytes.first(bytes.size() - 8);
    Reader tail(bytes.last(8));
    if (tail.u64() != fnv1a(body)) throw ChecksumMismatch("checkpoint checksum mismatch");

    Checkpoint ck;
    const auto mode = r.u32();
    if (mode > 1) throw MalformedFile("unknown conditioning mode");
    ck.mode = static_cast<ConditioningMode>(mode);
    ModelConfig cfg;
    cfg.vocab = static_cast<int>(r.u32());
    cfg.conditioning_dim = static_cast<int>(r.u32());
    cfg.fc_dim = static_cast<int>(r.u32());
    cfg.hidden = static_cast<int>(r.u32());
    cfg.layers = static_cast<int>(r.u32());
    cfg.dropout = r.f32();
    // Guard against absurd allocations from a corrupted (but hash-valid) header.
    for (int d : {cfg.vocab, cfg.conditioning_dim, cfg.fc_dim, cfg.hidden, cfg.layers}) {
        if (d < 0 || d > (1 << 16)) throw MalformedFile("checkpoint dimension out of range");
    }
    try {
        validate(cfg);
    } catch (const ShapeMismatch& e) {
        throw MalformedFile(std::string("checkpoint config invalid: ") + e.what());
    }
    if (parameter_count(cfg) * 3 * 4 > bytes.size()) throw MalformedFile("checkpoint truncated");

    ck.seed = r.u64();
    ck.epochs_completed = r.u32();
    AdamHyper hyper;
    hyper.lr = r.f64();
    hyper.beta1 = r.f64();
    hyper.beta2 = r.f64();
    hyper.epsilon = r.f64();
    ck.params = ModelParams<float>::zeros(cfg);
    ck.adam = make_adam_state<float>(cfg, hyper);
    ck.adam.step = r.u64();
    const auto count = r.u32();
    if (count != ck.params.tensors().size()) throw MalformedFile("checkpoint tensor count mismatch");
    read_tensors(r, ck.params);
    read_tensors(r, ck.adam.m);
    read_tensors(r, ck.adam.v);
    if (r.remaining() != 8) throw MalformedFile("trailing bytes in checkpoint");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(read_binary_file(path));
}

}  // namespace ebox::nn
