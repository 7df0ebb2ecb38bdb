// SPDX-License-Identifier: Apache-2.0

#include "pear/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace pear::model {

using ad::Var;

ad::Var build_x(const Var& user_vec, const Var& items) {
    if (user_vec.rows() != 1) {
        throw std::invalid_argument("build_x: user vector must be a single row, got " +
                                    user_vec.value().shape_str());
    }
    const std::size_t du = user_vec.cols();
    const std::size_t di = items.cols();
    const std::size_t rows = items.rows();
    Matrix out(rows, du + di);
    for (std::size_t r = 0; r < rows; ++r) {
        std::memcpy(out.row(r), user_vec.value().data(), du * sizeof(double));
        std::memcpy(out.row(r) + du, items.value().row(r), di * sizeof(double));
    }
    return ad::make_op(std::move(out), {user_vec, items}, [du, di, rows](ad::Node& node) {
        ad::Node& pu = *node.parents[0];
        ad::Node& pi = *node.parents[1];
        if (pu.requires_grad) {
            double* g = pu.ensure_grad().data();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* src = node.grad.row(r);
                for (std::size_t c = 0; c < du; ++c) g[c] += src[c];
            }
        }
        if (pi.requires_grad) {
            Matrix& g = pi.ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* src = node.grad.row(r) + du;
                double* dst = g.row(r);
                for (std::size_t c = 0; c < di; ++c) dst[c] += src[c];
            }
        }
    });
}

ad::Var build_x(const Var& user_vec, const std::vector<Var>& history,
                const std::vector<Var>& candidates) {
    if (candidates.empty()) {
        throw std::invalid_argument("build_x: candidate list must be non-empty");
    }
    std::vector<Var> items;
    items.reserve(history.size() + candidates.size());
    for (const auto& v : history) items.push_back(v);
    for (const auto& v : candidates) items.push_back(v);
    return build_x(user_vec, ad::concat_rows(items));
}

FusedLists fuse(const Var& x, std::size_t n, std::size_t m,
                const FusionParams& params, const ForwardOptions& opts) {
    if (x.rows() != n + m) {
        throw std::invalid_argument("fuse: X has " + std::to_string(x.rows()) +
                                    " rows, expected n+m = " + std::to_string(n + m));
    }
    Var hidden = ad::linear_rows(x, params.w1, params.b1, ad::Activation::Relu);
    if (opts.train && opts.dropout_rate > 0.0) {
        hidden = ad::dropout(hidden, opts.dropout_rate, *opts.rng, true);
    }
    Var z = ad::linear_rows(hidden, params.w2, params.b2, ad::Activation::None);

    FusedLists out;
    out.n = n;
    out.m = m;
    out.z_hist = ad::slice_rows(z, 0, n);
    out.z_items = ad::concat_rows({ad::slice_rows(z, n, n + m), params.cls});
    return out;
}

namespace {

struct HeadSlices {
    std::vector<Var> q, k, v;
};

HeadSlices split_heads(const Var& q, const Var& k, const Var& v, std::size_t num_heads) {
    HeadSlices s;
    const std::size_t dh = q.cols();
    const std::size_t w = dh / num_heads;
    for (std::size_t h = 0; h < num_heads; ++h) {
        s.q.push_back(ad::slice_cols(q, h * w, (h + 1) * w));
        s.k.push_back(ad::slice_cols(k, h * w, (h + 1) * w));
        s.v.push_back(ad::slice_cols(v, h * w, (h + 1) * w));
    }
    return s;
}

// Scaled dot-product attention of row-queries over row-keys/values, split
// into num_heads column groups. scale is applied to the logits.
Var attend(const Var& q, const Var& k, const Var& v, std::size_t num_heads,
           double scale, const ForwardOptions& opts) {
    auto one_head = [&](const Var& qh, const Var& kh, const Var& vh) {
        Var logits = ad::scale(ad::matmul_nt(qh, kh), scale);
        Var weights = ad::softmax_rows(logits);
        if (opts.trace) opts.trace->weights.push_back(weights);
        if (opts.train && opts.dropout_rate > 0.0) {
            weights = ad::dropout(weights, opts.dropout_rate, *opts.rng, true);
        }
        return ad::matmul(weights, vh);
    };
    if (num_heads == 1) {
        return one_head(q, k, v);
    }
    HeadSlices s = split_heads(q, k, v, num_heads);
    std::vector<Var> outs;
    outs.reserve(num_heads);
    for (std::size_t h = 0; h < num_heads; ++h) {
        outs.push_back(one_head(s.q[h], s.k[h], s.v[h]));
    }
    return ad::concat_cols(outs);
}

void check_heads(std::size_t d_h, std::size_t num_heads, const char* op) {
    if (num_heads == 0 || d_h % num_heads != 0) {
        throw std::invalid_argument(std::string(op) + ": attention width " +
                                    std::to_string(d_h) + " not divisible by " +
                                    std::to_string(num_heads) + " heads");
    }
}

}  // namespace

ad::Var history_self_attention(const Var& z_hist, const AttentionParams& params,
                               std::size_t num_heads, const ForwardOptions& opts) {
    const std::size_t d_h = params.self_query.rows();
    check_heads(d_h, num_heads, "history_self_attention");
    if (z_hist.cols() != params.self_query.cols()) {
        throw std::invalid_argument("history_self_attention: input width " +
                                    z_hist.value().shape_str() + " does not match " +
                                    params.self_query.value().shape_str());
    }
    if (z_hist.rows() == 0) {
        return ad::constant(Matrix(0, d_h));
    }
    Var q = ad::matmul_nt(z_hist, params.self_query);
    Var k = ad::matmul_nt(z_hist, params.self_key);
    Var v = ad::matmul_nt(z_hist, params.self_value);
    return attend(q, k, v, num_heads, 1.0 / std::sqrt(static_cast<double>(d_h)), opts);
}

ad::Var merged_cross_attention(const Var& z_items, const Var& h_hist,
                               const AttentionParams& params, std::size_t num_heads,
                               const ForwardOptions& opts) {
    const std::size_t d_h = params.cross_query.rows();
    check_heads(d_h, num_heads, "merged_cross_attention");
    if (z_items.rows() < 2) {
        throw std::invalid_argument(
            "merged_cross_attention: candidate list needs at least one item plus CLS");
    }
    if (h_hist.rows() > 0 && h_hist.cols() != params.cross_key_hist.cols()) {
        throw std::invalid_argument("merged_cross_attention: history width " +
                                    h_hist.value().shape_str() + " does not match " +
                                    params.cross_key_hist.value().shape_str());
    }

    Var q = ad::matmul_nt(z_items, params.cross_query);
    Var k_items = ad::matmul_nt(z_items, params.cross_key_items);
    Var v_items = ad::matmul_nt(z_items, params.cross_value_items);

    Var k, v;
    if (h_hist.rows() > 0) {
        // History keys/values first in the merged pool, then the list's own.
        Var k_hist = ad::matmul_nt(h_hist, params.cross_key_hist);
        Var v_hist = ad::matmul_nt(h_hist, params.cross_value_hist);
        k = ad::concat_rows({k_hist, k_items});
        v = ad::concat_rows({v_hist, v_items});
    } else {
        k = k_items;
        v = v_items;
    }
    return attend(q, k, v, num_heads, 1.0 / std::sqrt(static_cast<double>(d_h)), opts);
}

ad::Var encode(const FusedLists& fused, const BlockStack& stack,
               const ForwardOptions& opts) {
    if (stack.num_blocks == 0 || stack.blocks.size() != stack.num_blocks) {
        throw std::invalid_argument("encode: block stack is empty or inconsistent");
    }
    Var z_hist = fused.z_hist;
    Var z_items = fused.z_items;
    for (std::size_t b = 0; b < stack.num_blocks; ++b) {
        const AttentionParams& blk = stack.blocks[b];
        if (b > 0 && blk.self_query.cols() != blk.self_query.rows()) {
            throw std::invalid_argument(
                "encode: stacking more than one block requires d == d_h");
        }
        Var h_hist = history_self_attention(z_hist, blk, stack.num_heads, opts);
        Var h_items = merged_cross_attention(z_items, h_hist, blk, stack.num_heads, opts);
        z_hist = h_hist;
        z_items = h_items;
    }
    return z_items;
}

ad::Var item_click_probs(const Var& h_items, const HeadParams& heads) {
    const std::size_t m = h_items.rows() - 1;  // last row is CLS
    Var cand = ad::slice_rows(h_items, 0, m);
    return ad::sigmoid(ad::linear_rows(cand, heads.item_w, heads.item_b, ad::Activation::None));
}

ad::Var list_click_prob(const Var& h_items, const HeadParams& heads) {
    Var cls = ad::slice_rows(h_items, h_items.rows() - 1, h_items.rows());
    return ad::sigmoid(ad::linear_rows(cls, heads.aux_w, heads.aux_b, ad::Activation::None));
}

ad::Var multitask_loss(const Var& item_probs, const std::vector<int>& labels,
                       const Var& aux_prob, int aux_label, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("multitask_loss: alpha must be >= 0");
    Var item_loss = ad::bce_sum(item_probs, labels);
    Var aux_loss = ad::bce_sum(aux_prob, {aux_label});
    return ad::add(item_loss, ad::scale(aux_loss, alpha));
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
    return m;
}

PearParams PearParams::init(const embedding::FeatureSchema& schema, std::size_t h,
                            std::size_t d, std::size_t d_h, std::size_t num_blocks,
                            std::size_t num_heads, Rng& rng) {
    schema.validate();
    if (num_blocks == 0) throw std::invalid_argument("PearParams: need at least one block");
    if (num_blocks > 1 && d != d_h) {
        throw std::invalid_argument("PearParams: more than one block requires d == d_h");
    }
    if (num_heads == 0 || d_h % num_heads != 0) {
        throw std::invalid_argument("PearParams: d_h must divide evenly into heads");
    }

    PearParams p;
    p.schema = schema;
    p.dim_hidden = h;
    p.dim_fused = d;
    p.dim_attn = d_h;
    p.user_tables = embedding::EmbeddingTables::init(schema.user_fields, rng);
    p.item_tables = embedding::EmbeddingTables::init(schema.item_fields, rng);

    const std::size_t dx = schema.user_dim() + schema.item_dim();
    p.fusion.w1 = ad::leaf(glorot_uniform(h, dx, rng), true);
    p.fusion.b1 = ad::leaf(Matrix(1, h), true);
    p.fusion.w2 = ad::leaf(glorot_uniform(d, h, rng), true);
    p.fusion.b2 = ad::leaf(Matrix(1, d), true);
    Matrix cls(1, d);
    for (std::size_t i = 0; i < d; ++i) cls.data()[i] = rng.uniform(-0.01, 0.01);
    p.fusion.cls = ad::leaf(std::move(cls), true);

    p.stack.num_blocks = num_blocks;
    p.stack.num_heads = num_heads;
    for (std::size_t b = 0; b < num_blocks; ++b) {
        AttentionParams blk;
        blk.self_query = ad::leaf(glorot_uniform(d_h, d, rng), true);
        blk.self_key = ad::leaf(glorot_uniform(d_h, d, rng), true);
        blk.self_value = ad::leaf(glorot_uniform(d_h, d, rng), true);
        blk.cross_query = ad::leaf(glorot_uniform(d_h, d, rng), true);
        blk.cross_key_hist = ad::leaf(glorot_uniform(d_h, d_h, rng), true);
        blk.cross_value_hist = ad::leaf(glorot_uniform(d_h, d_h, rng), true);
        blk.cross_key_items = ad::leaf(glorot_uniform(d_h, d, rng), true);
        blk.cross_value_items = ad::leaf(glorot_uniform(d_h, d, rng), true);
        p.stack.blocks.push_back(std::move(blk));
    }

    p.heads.item_w = ad::leaf(glorot_uniform(1, d_h, rng), true);
    p.heads.item_b = ad::leaf(Matrix(1, 1), true);
    p.heads.aux_w = ad::leaf(glorot_uniform(1, d_h, rng), true);
    p.heads.aux_b = ad::leaf(Matrix(1, 1), true);
    return p;
}

ad::ParamSet PearParams::param_set() const {
    ad::ParamSet set;
    for (std::size_t f = 0; f < schema.user_fields.size(); ++f) {
        set.push_back({"embed.user." + schema.user_fields[f].name, user_tables.tables[f]});
    }
    for (std::size_t f = 0; f < schema.item_fields.size(); ++f) {
        set.push_back({"embed.item." + schema.item_fields[f].name, item_tables.tables[f]});
    }
    set.push_back({"fusion.w1", fusion.w1});
    set.push_back({"fusion.b1", fusion.b1});
    set.push_back({"fusion.w2", fusion.w2});
    set.push_back({"fusion.b2", fusion.b2});
    set.push_back({"fusion.cls", fusion.cls});
    for (std::size_t b = 0; b < stack.blocks.size(); ++b) {
        const std::string prefix = "block" + std::to_string(b) + ".";
        const AttentionParams& blk = stack.blocks[b];
        set.push_back({prefix + "self_query", blk.self_query});
        set.push_back({prefix + "self_key", blk.self_key});
        set.push_back({prefix + "self_value", blk.self_value});
        set.push_back({prefix + "cross_query", blk.cross_query});
        set.push_back({prefix + "cross_key_hist", blk.cross_key_hist});
        set.push_back({prefix + "cross_value_hist", blk.cross_value_hist});
        set.push_back({prefix + "cross_key_items", blk.cross_key_items});
        set.push_back({prefix + "cross_value_items", blk.cross_value_items});
    }
    set.push_back({"head.item_w", heads.item_w});
    set.push_back({"head.item_b", heads.item_b});
    set.push_back({"head.aux_w", heads.aux_w});
    set.push_back({"head.aux_b", heads.aux_b});
    return set;
}

SessionOutput forward(const PearParams& params, const SessionInput& input,
                      const ForwardOptions& opts) {
    if (input.candidates.empty()) {
        throw std::invalid_argument("forward: session has no candidates");
    }
    if (input.labels.size() != input.candidates.size()) {
        throw std::invalid_argument("forward: label count does not match candidates");
    }
    const std::size_t n = input.history.size();
    const std::size_t m = input.candidates.size();

    Var f_user = embedding::embed_record(params.schema.user_fields, params.user_tables,
                                         input.user_values);
    std::vector<std::vector<std::size_t>> item_rows;
    item_rows.reserve(n + m);
    for (const auto& r : input.history) item_rows.push_back(r);
    for (const auto& r : input.candidates) item_rows.push_back(r);
    Var f_items = embedding::embed_records(params.schema.item_fields, params.item_tables,
                                           item_rows);

    Var x = build_x(f_user, f_items);
    FusedLists fused = fuse(x, n, m, params.fusion, opts);
    Var h_items = encode(fused, params.stack, opts);

    SessionOutput out;
    out.item_probs = item_click_probs(h_items, params.heads);
    out.aux_prob = list_click_prob(h_items, params.heads);
    return out;
}

}  // namespace pear::model
