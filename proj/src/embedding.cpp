// SPDX-License-Identifier: Apache-2.0

#include "pear/embedding.hpp"

#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace pear::embedding {

std::size_t FeatureSchema::user_dim() const {
    std::size_t d = 0;
    for (const auto& f : user_fields) d += f.embed_dim;
    return d;
}

std::size_t FeatureSchema::item_dim() const {
    std::size_t d = 0;
    for (const auto& f : item_fields) d += f.embed_dim;
    return d;
}

void FeatureSchema::validate() const {
    std::unordered_set<std::string> names;
    auto check_fields = [&](const std::vector<FieldSpec>& fields) {
        for (const auto& f : fields) {
            if (f.cardinality == 0) {
                throw std::invalid_argument("schema: field '" + f.name + "' has cardinality 0");
            }
            if (f.embed_dim == 0) {
                throw std::invalid_argument("schema: field '" + f.name + "' has embed_dim 0");
            }
            if (!names.insert(f.name).second) {
                throw std::invalid_argument("schema: duplicate field name '" + f.name + "'");
            }
        }
    };
    check_fields(user_fields);
    check_fields(item_fields);
}

// Init width matters here: attention logits are bilinear in the embeddings,
// so a very small init (e.g. 0.01) leaves the attention path with vanishing
// gradients for many epochs at this data scale.
constexpr double kEmbedInitRange = 0.25;

EmbeddingTables EmbeddingTables::init(const std::vector<FieldSpec>& fields, Rng& rng) {
    EmbeddingTables out;
    out.tables.reserve(fields.size());
    for (const auto& f : fields) {
        Matrix t(f.cardinality + 1, f.embed_dim);
        for (std::size_t r = 1; r < t.rows(); ++r) {
            for (std::size_t c = 0; c < t.cols(); ++c) {
                t.at(r, c) = rng.uniform(-kEmbedInitRange, kEmbedInitRange);
            }
        }
        out.tables.push_back(ad::leaf(std::move(t), true));
    }
    return out;
}

namespace {

void check_row(const std::vector<FieldSpec>& fields,
               const std::vector<std::size_t>& field_values) {
    if (field_values.size() != fields.size()) {
        throw std::invalid_argument(
            "embed_record: got " + std::to_string(field_values.size()) + " indices for " +
            std::to_string(fields.size()) + " fields");
    }
    for (std::size_t f = 0; f < fields.size(); ++f) {
        if (field_values[f] > fields[f].cardinality) {
            throw std::invalid_argument(
                "embed_record: index " + std::to_string(field_values[f]) +
                " exceeds cardinality " + std::to_string(fields[f].cardinality) +
                " for field '" + fields[f].name + "'");
        }
    }
}

}  // namespace

ad::Var embed_records(const std::vector<FieldSpec>& fields, const EmbeddingTables& tables,
                      const std::vector<std::vector<std::size_t>>& rows) {
    if (tables.tables.size() != fields.size()) {
        throw std::invalid_argument("embed_records: table count does not match schema");
    }
    for (const auto& r : rows) check_row(fields, r);

    std::size_t dim = 0;
    for (const auto& f : fields) dim += f.embed_dim;
    Matrix out(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t c0 = 0;
        for (std::size_t f = 0; f < fields.size(); ++f) {
            const Matrix& table = tables.tables[f].value();
            std::memcpy(out.row(i) + c0, table.row(rows[i][f]),
                        fields[f].embed_dim * sizeof(double));
            c0 += fields[f].embed_dim;
        }
    }

    std::vector<ad::Var> parents = tables.tables;
    std::vector<std::size_t> dims;
    for (const auto& f : fields) dims.push_back(f.embed_dim);
    return ad::make_op(std::move(out), std::move(parents),
                       [rows, dims](ad::Node& node) {
                           std::size_t c0 = 0;
                           for (std::size_t f = 0; f < node.parents.size(); ++f) {
                               ad::Node& table = *node.parents[f];
                               if (table.requires_grad) {
                                   Matrix& g = table.ensure_grad();
                                   for (std::size_t i = 0; i < rows.size(); ++i) {
                                       const std::size_t idx = rows[i][f];
                                       if (idx == 0) continue;  // padding
                                       const double* src = node.grad.row(i) + c0;
                                       double* dst = g.row(idx);
                                       for (std::size_t c = 0; c < dims[f]; ++c) dst[c] += src[c];
                                   }
                               }
                               c0 += dims[f];
                           }
                       });
}

ad::Var embed_record(const std::vector<FieldSpec>& fields, const EmbeddingTables& tables,
                     const std::vector<std::size_t>& field_values) {
    return embed_records(fields, tables, {field_values});
}

}  // namespace pear::embedding
