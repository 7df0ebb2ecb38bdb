// SPDX-License-Identifier: Apache-2.0
//
// The re-ranker network. Item representations are stored row-per-item
// throughout; dimensions follow the usual naming: d_u/d_i flattened feature
// widths, h the fusion hidden width, d the fused width, d_h the attention
// width. A learnable CLS vector rides as the last row of the candidate-list
// representation and feeds the list-level head.

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pear/autodiff.hpp"
#include "pear/embedding.hpp"
#include "pear/matrix.hpp"
#include "pear/rng.hpp"

namespace pear::model {

// Two-layer fusion MLP shared by every item of both lists, plus the CLS
// vector appended to the candidate list.
struct FusionParams {
    ad::Var w1;   // h x (d_u + d_i)
    ad::Var b1;   // 1 x h
    ad::Var w2;   // d x h
    ad::Var b2;   // 1 x d
    ad::Var cls;  // 1 x d
};

// One attention block: self-attention over the history list and merged
// cross-attention whose key/value pool is [projected history, projected
// candidate list].
struct AttentionParams {
    ad::Var self_query;   // d_h x d
    ad::Var self_key;     // d_h x d
    ad::Var self_value;   // d_h x d
    ad::Var cross_query;        // d_h x d
    ad::Var cross_key_hist;     // d_h x d_h
    ad::Var cross_value_hist;   // d_h x d_h
    ad::Var cross_key_items;    // d_h x d
    ad::Var cross_value_items;  // d_h x d
};

struct BlockStack {
    std::size_t num_blocks = 1;  // N
    std::size_t num_heads = 1;
    std::vector<AttentionParams> blocks;
};

// One-layer scoring heads: per-item click probability and the CLS-based
// list-level click probability.
struct HeadParams {
    ad::Var item_w;  // 1 x d_h
    ad::Var item_b;  // 1 x 1
    ad::Var aux_w;   // 1 x d_h
    ad::Var aux_b;   // 1 x 1
};

struct FusedLists {
    ad::Var z_hist;   // n x d
    ad::Var z_items;  // (m+1) x d, CLS last
    std::size_t n = 0;
    std::size_t m = 0;
};

// Post-softmax attention weight matrices, recorded for inspection/tests.
struct AttentionTrace {
    std::vector<ad::Var> weights;
};

struct ForwardOptions {
    bool train = false;
    double dropout_rate = 0.0;
    Rng* rng = nullptr;
    AttentionTrace* trace = nullptr;
};

// Row j of the result is user_vec ‖ item row j. items may have zero rows.
ad::Var build_x(const ad::Var& user_vec, const ad::Var& items);
// List form: history vectors first, then candidate vectors, order preserved.
ad::Var build_x(const ad::Var& user_vec, const std::vector<ad::Var>& history,
                const std::vector<ad::Var>& candidates);

// Shared two-layer MLP over all rows of X, split back into the history part
// and the candidate part with CLS appended as the last row.
FusedLists fuse(const ad::Var& x, std::size_t n, std::size_t m,
                const FusionParams& params, const ForwardOptions& opts);

// Self-attention over the history rows; yields n x d_h (empty when n == 0).
ad::Var history_self_attention(const ad::Var& z_hist, const AttentionParams& params,
                               std::size_t num_heads, const ForwardOptions& opts);

// Merged cross-attention: each candidate-list row attends over the
// concatenation of projected history rows and projected candidate rows with
// a single softmax per query.
ad::Var merged_cross_attention(const ad::Var& z_items, const ad::Var& h_hist,
                               const AttentionParams& params, std::size_t num_heads,
                               const ForwardOptions& opts);

// num_blocks applications of the block above. Stacking more than one block
// requires d == d_h (block output feeds the next block's input).
ad::Var encode(const FusedLists& fused, const BlockStack& stack,
               const ForwardOptions& opts);

// Click probability per candidate row (CLS excluded), an m x 1 variable.
ad::Var item_click_probs(const ad::Var& h_items, const HeadParams& heads);
// Click probability for the whole list, from the CLS (last) row.
ad::Var list_click_prob(const ad::Var& h_items, const HeadParams& heads);

// L = L_items + alpha * L_aux, both summed binary cross-entropies.
ad::Var multitask_loss(const ad::Var& item_probs, const std::vector<int>& labels,
                       const ad::Var& aux_prob, int aux_label, double alpha);

// Everything learnable, plus the dimensions needed to rebuild it.
struct PearParams {
    embedding::FeatureSchema schema;
    embedding::EmbeddingTables user_tables;
    embedding::EmbeddingTables item_tables;
    FusionParams fusion;
    BlockStack stack;
    HeadParams heads;
    std::size_t dim_hidden = 0;  // h
    std::size_t dim_fused = 0;   // d
    std::size_t dim_attn = 0;    // d_h

    static PearParams init(const embedding::FeatureSchema& schema, std::size_t h,
                           std::size_t d, std::size_t d_h, std::size_t num_blocks,
                           std::size_t num_heads, Rng& rng);

    // Named tensors in a fixed order (optimizer/checkpoint/grad-check order).
    ad::ParamSet param_set() const;
};

// One session's model-facing input: category indices per schema field.
struct SessionInput {
    std::vector<std::size_t> user_values;
    std::vector<std::vector<std::size_t>> history;     // most recent last
    std::vector<std::vector<std::size_t>> candidates;  // initial-list order
    std::vector<int> labels;
};

struct SessionOutput {
    ad::Var item_probs;  // m x 1
    ad::Var aux_prob;    // 1 x 1
};

SessionOutput forward(const PearParams& params, const SessionInput& input,
                      const ForwardOptions& opts);

// Glorot-uniform init used for all non-embedding weight matrices.
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace pear::model
