// SPDX-License-Identifier: Apache-2.0
//
// Multi-field categorical embeddings. Each field owns a (cardinality+1) x dim
// table; row 0 is the shared padding/OOV row, zero-initialized and excluded
// from gradient updates. embed_record concatenates the looked-up rows in
// schema order, producing the flattened user/item feature vectors.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pear/autodiff.hpp"
#include "pear/rng.hpp"

namespace pear::embedding {

struct FieldSpec {
    std::string name;
    std::size_t cardinality = 0;  // valid indices are 1..cardinality; 0 = padding
    std::size_t embed_dim = 0;
};

struct FeatureSchema {
    std::vector<FieldSpec> user_fields;
    std::vector<FieldSpec> item_fields;

    std::size_t user_dim() const;  // d_u
    std::size_t item_dim() const;  // d_i

    // Rejects duplicate names, zero cardinalities, zero dims.
    void validate() const;

    bool operator==(const FeatureSchema&) const = default;
};

// One autodiff leaf per field, in schema order.
struct EmbeddingTables {
    std::vector<ad::Var> tables;

    // Tables initialized uniform [-0.25, 0.25], row 0 zeroed.
    static EmbeddingTables init(const std::vector<FieldSpec>& fields, Rng& rng);
};

// Row concatenation of per-field embedding rows, a 1 x d variable.
// One index per field, each <= its cardinality (0 selects the padding row).
ad::Var embed_record(const std::vector<FieldSpec>& fields, const EmbeddingTables& tables,
                     const std::vector<std::size_t>& field_values);

// Batched form: one output row per index tuple. Used on item lists.
ad::Var embed_records(const std::vector<FieldSpec>& fields, const EmbeddingTables& tables,
                      const std::vector<std::vector<std::size_t>>& rows);

}  // namespace pear::embedding
