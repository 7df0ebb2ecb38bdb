// SPDX-License-Identifier: Apache-2.0

#include "pear/ranker.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace pear::ranker {

RankerParams RankerParams::init(const embedding::FeatureSchema& schema, std::size_t hidden,
                                Rng& rng) {
    schema.validate();
    RankerParams p;
    p.schema = schema;
    p.dim_hidden = hidden;
    p.user_tables = embedding::EmbeddingTables::init(schema.user_fields, rng);
    p.item_tables = embedding::EmbeddingTables::init(schema.item_fields, rng);
    const std::size_t dx = schema.user_dim() + schema.item_dim();
    p.w1 = ad::leaf(model::glorot_uniform(hidden, dx, rng), true);
    p.b1 = ad::leaf(Matrix(1, hidden), true);
    p.w2 = ad::leaf(model::glorot_uniform(1, hidden, rng), true);
    p.b2 = ad::leaf(Matrix(1, 1), true);
    return p;
}

ad::ParamSet RankerParams::param_set() const {
    ad::ParamSet set;
    for (std::size_t f = 0; f < schema.user_fields.size(); ++f) {
        set.push_back({"embed.user." + schema.user_fields[f].name, user_tables.tables[f]});
    }
    for (std::size_t f = 0; f < schema.item_fields.size(); ++f) {
        set.push_back({"embed.item." + schema.item_fields[f].name, item_tables.tables[f]});
    }
    set.push_back({"mlp.w1", w1});
    set.push_back({"mlp.b1", b1});
    set.push_back({"mlp.w2", w2});
    set.push_back({"mlp.b2", b2});
    return set;
}

ad::Var score_candidates(const RankerParams& params, const model::SessionInput& input) {
    if (input.candidates.empty()) {
        throw std::invalid_argument("score_candidates: session has no candidates");
    }
    ad::Var f_user = embedding::embed_record(params.schema.user_fields, params.user_tables,
                                             input.user_values);
    ad::Var f_items = embedding::embed_records(params.schema.item_fields, params.item_tables,
                                               input.candidates);
    ad::Var x = model::build_x(f_user, f_items);
    ad::Var hidden = ad::linear_rows(x, params.w1, params.b1, ad::Activation::Relu);
    return ad::linear_rows(hidden, params.w2, params.b2, ad::Activation::None);
}

std::vector<double> score_record(const RankerParams& params, const data::SessionRecord& record) {
    ad::NoGradGuard ng;
    model::SessionInput input;
    input.user_values = record.user_values;
    input.candidates = record.candidates;
    input.labels = record.labels;
    const ad::Var logits = score_candidates(params, input);
    std::vector<double> out(logits.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits.value().at(i, 0);
    return out;
}

void reorder_by_scores(data::SessionRecord& record, const std::vector<double>& scores) {
    if (scores.size() != record.candidates.size()) {
        throw std::invalid_argument("reorder_by_scores: score count mismatch");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return record.candidates[a][0] < record.candidates[b][0];  // item id tiebreak
    });
    std::vector<std::vector<std::size_t>> cands;
    std::vector<int> labels;
    cands.reserve(idx.size());
    labels.reserve(idx.size());
    for (std::size_t i : idx) {
        cands.push_back(std::move(record.candidates[i]));
        labels.push_back(record.labels[i]);
    }
    record.candidates = std::move(cands);
    record.labels = std::move(labels);
}

void initial_rank(const RankerParams& params, data::SessionRecord& record) {
    reorder_by_scores(record, score_record(params, record));
}

}  // namespace pear::ranker
