// SPDX-License-Identifier: Apache-2.0
//
// Pointwise initial ranker: a two-layer MLP over the concatenated user/item
// feature vectors, scoring each candidate in isolation. Plays the upstream
// learning-to-rank role that produces the initial ranking list the re-ranker
// refines.

#pragma once

#include <cstddef>
#include <vector>

#include "pear/autodiff.hpp"
#include "pear/data.hpp"
#include "pear/embedding.hpp"
#include "pear/model.hpp"
#include "pear/rng.hpp"

namespace pear::ranker {

struct RankerParams {
    embedding::FeatureSchema schema;
    embedding::EmbeddingTables user_tables;
    embedding::EmbeddingTables item_tables;
    ad::Var w1;  // hidden x (d_u + d_i)
    ad::Var b1;  // 1 x hidden
    ad::Var w2;  // 1 x hidden
    ad::Var b2;  // 1 x 1
    std::size_t dim_hidden = 0;

    static RankerParams init(const embedding::FeatureSchema& schema, std::size_t hidden,
                             Rng& rng);
    ad::ParamSet param_set() const;
};

// Pointwise logits for every candidate of the session, an m x 1 variable.
ad::Var score_candidates(const RankerParams& params, const model::SessionInput& input);

// Plain score values for a record (evaluation path, no graph).
std::vector<double> score_record(const RankerParams& params, const data::SessionRecord& record);

// Reorders candidates (labels carried along) by descending score with a
// stable tiebreak on item id (first item field).
void reorder_by_scores(data::SessionRecord& record, const std::vector<double>& scores);

void initial_rank(const RankerParams& params, data::SessionRecord& record);

}  // namespace pear::ranker
