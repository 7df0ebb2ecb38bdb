// SPDX-License-Identifier: Apache-2.0

#include "pear/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pear::checkpoint {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian; add byte swapping for this target");

namespace {

constexpr char kMagic[8] = {'P', 'E', 'A', 'R', 'C', 'K', 'P', 'T'};

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated while reading " + what);
    return v;
}

}  // namespace

const Matrix& Checkpoint::tensor(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t.value;
    }
    throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
}

void save(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");

    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, ckpt.version);

    const std::string cfg = ckpt.config.to_text();
    write_pod<std::uint64_t>(out, cfg.size());
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& t : ckpt.tensors) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_pod<std::uint64_t>(out, t.value.rows());
        write_pod<std::uint64_t>(out, t.value.cols());
        out.write(reinterpret_cast<const char*>(t.value.data()),
                  static_cast<std::streamsize>(t.value.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file");
    }

    Checkpoint ckpt;
    ckpt.version = read_pod<std::uint32_t>(in, "version");
    if (ckpt.version != 1) {
        throw std::runtime_error("checkpoint: unsupported version " +
                                 std::to_string(ckpt.version));
    }

    const auto cfg_len = read_pod<std::uint64_t>(in, "config length");
    std::string cfg(cfg_len, '\0');
    in.read(cfg.data(), static_cast<std::streamsize>(cfg_len));
    if (!in) throw std::runtime_error("checkpoint: truncated config block");
    ckpt.config = config::KeyValues::parse(cfg);

    const auto count = read_pod<std::uint32_t>(in, "tensor count");
    ckpt.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in, "tensor name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rows = read_pod<std::uint64_t>(in, "tensor rows");
        const auto cols = read_pod<std::uint64_t>(in, "tensor cols");
        Matrix value(rows, cols);
        in.read(reinterpret_cast<char*>(value.data()),
                static_cast<std::streamsize>(value.size() * sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint: truncated tensor '" + name + "'");
        ckpt.tensors.push_back({std::move(name), std::move(value)});
    }
    return ckpt;
}

}  // namespace pear::checkpoint
