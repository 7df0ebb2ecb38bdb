// SPDX-License-Identifier: Apache-2.0
//
// Versioned checkpoint container: a human-readable key-value config block
// followed by named tensors with explicit shapes, payload as little-endian
// 64-bit floats. Round-trips are bit-exact.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pear/config.hpp"
#include "pear/matrix.hpp"

namespace pear::checkpoint {

struct NamedTensor {
    std::string name;
    Matrix value;
};

struct Checkpoint {
    std::uint32_t version = 1;
    config::KeyValues config;  // includes model kind, dims, schema, best metric
    std::vector<NamedTensor> tensors;

    const Matrix& tensor(const std::string& name) const;
};

void save(const std::string& path, const Checkpoint& ckpt);
Checkpoint load(const std::string& path);

}  // namespace pear::checkpoint
