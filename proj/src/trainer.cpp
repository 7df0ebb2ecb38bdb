// SPDX-License-Identifier: Apache-2.0

#include "pear/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pear/rng.hpp"

namespace pear::trainer {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974ULL;     // "init"
constexpr std::uint64_t kShuffleTag = 0x73687566ULL;  // "shuf"
constexpr std::uint64_t kDropTag = 0x64726f70ULL;     // "drop"

constexpr char kGaucDefinition[] =
    "per-list AUC over each list's top-K items by score, impression-count "
    "weights, degenerate lists skipped";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

void TrainConfig::apply_paper_scale() {
    n_max = 128;
    dim_hidden = 500;
    dim_fused = 500;
    dim_attn = 500;
    batch_size = 200;
    eval_ks = {20, 30};
}

void TrainConfig::validate() const {
    if (learning_rate <= 0) throw std::invalid_argument("config: learning_rate must be > 0");
    if (batch_size == 0) throw std::invalid_argument("config: batch_size must be >= 1");
    if (dropout_rate < 0 || dropout_rate >= 1) {
        throw std::invalid_argument("config: dropout must be in [0, 1)");
    }
    if (patience == 0) throw std::invalid_argument("config: patience must be >= 1");
    if (alpha < 0) throw std::invalid_argument("config: alpha must be >= 0");
    if (max_epochs == 0) throw std::invalid_argument("config: max_epochs must be >= 1");
    if (eval_ks.empty()) throw std::invalid_argument("config: ks must be non-empty");
    if (num_blocks == 0) throw std::invalid_argument("config: blocks must be >= 1");
    if (num_heads == 0 || dim_attn % num_heads != 0) {
        throw std::invalid_argument("config: attn_dim must divide evenly into heads");
    }
    if (num_blocks > 1 && dim_fused != dim_attn) {
        throw std::invalid_argument("config: blocks > 1 requires fused_dim == attn_dim");
    }
    if (stop_metric != "gauc" && stop_metric != "ndcg") {
        throw std::invalid_argument("config: stop_metric must be gauc or ndcg");
    }
}

TrainConfig TrainConfig::from_kv(const config::KeyValues& kv) {
    TrainConfig c;
    if (kv.has("paper_scale") && kv.get("paper_scale") == "true") c.apply_paper_scale();
    if (kv.has("learning_rate")) c.learning_rate = kv.get_double("learning_rate");
    if (kv.has("batch_size")) c.batch_size = kv.get_uint("batch_size");
    if (kv.has("dropout")) c.dropout_rate = kv.get_double("dropout");
    if (kv.has("patience")) c.patience = kv.get_uint("patience");
    if (kv.has("alpha")) c.alpha = kv.get_double("alpha");
    if (kv.has("embed_dim")) c.embed_dim = kv.get_uint("embed_dim");
    if (kv.has("hidden_dim")) c.dim_hidden = kv.get_uint("hidden_dim");
    if (kv.has("fused_dim")) c.dim_fused = kv.get_uint("fused_dim");
    if (kv.has("attn_dim")) c.dim_attn = kv.get_uint("attn_dim");
    if (kv.has("blocks")) c.num_blocks = kv.get_uint("blocks");
    if (kv.has("heads")) c.num_heads = kv.get_uint("heads");
    if (kv.has("n_max")) c.n_max = kv.get_uint("n_max");
    if (kv.has("max_epochs")) c.max_epochs = kv.get_uint("max_epochs");
    if (kv.has("seed")) c.seed = kv.get_uint("seed");
    if (kv.has("ks")) c.eval_ks = kv.get_uint_list("ks");
    if (kv.has("stop_metric")) c.stop_metric = kv.get("stop_metric");
    c.validate();
    return c;
}

config::KeyValues TrainConfig::to_kv() const {
    config::KeyValues kv;
    kv.set("learning_rate", fmt(learning_rate));
    kv.set("batch_size", std::to_string(batch_size));
    kv.set("dropout", fmt(dropout_rate));
    kv.set("patience", std::to_string(patience));
    kv.set("alpha", fmt(alpha));
    kv.set("embed_dim", std::to_string(embed_dim));
    kv.set("hidden_dim", std::to_string(dim_hidden));
    kv.set("fused_dim", std::to_string(dim_fused));
    kv.set("attn_dim", std::to_string(dim_attn));
    kv.set("blocks", std::to_string(num_blocks));
    kv.set("heads", std::to_string(num_heads));
    kv.set("n_max", std::to_string(n_max));
    kv.set("max_epochs", std::to_string(max_epochs));
    kv.set("seed", std::to_string(seed));
    std::string ks;
    for (std::size_t i = 0; i < eval_ks.size(); ++i) {
        if (i) ks += ',';
        ks += std::to_string(eval_ks[i]);
    }
    kv.set("ks", ks);
    kv.set("stop_metric", stop_metric);
    return kv;
}

std::size_t TrainConfig::stop_k() const {
    return *std::max_element(eval_ks.begin(), eval_ks.end());
}

void adam_step(ad::ParamSet& params, AdamState& state, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.var.rows(), p.var.cols());
            state.second_moment.emplace_back(p.var.rows(), p.var.cols());
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw std::invalid_argument("adam_step: state size does not match parameter count");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& theta = params[i].var.mutable_value();
        const Matrix& grad = params[i].var.node()->ensure_grad();
        if (!grad.same_shape(theta) || !state.first_moment[i].same_shape(theta)) {
            throw std::invalid_argument("adam_step: shape mismatch for parameter '" +
                                        params[i].name + "'");
        }
        double* m = state.first_moment[i].data();
        double* v = state.second_moment[i].data();
        const double* g = grad.data();
        double* t = theta.data();
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            t[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

model::SessionInput to_input(const data::SessionRecord& record, std::size_t n_max) {
    model::SessionInput input;
    input.user_values = record.user_values;
    const std::size_t keep = std::min(record.history.size(), n_max);
    input.history.assign(record.history.end() - static_cast<std::ptrdiff_t>(keep),
                         record.history.end());
    input.candidates = record.candidates;
    input.labels = record.labels;
    return input;
}

namespace {

int any_click(const std::vector<int>& labels) {
    for (int y : labels) {
        if (y) return 1;
    }
    return 0;
}

// Shared train loop: the two models differ only in how a session loss is
// built and how validation is scored.
struct TrainHooks {
    std::function<ad::Var(const model::SessionInput&, Rng&)> session_loss;
    std::function<metrics::MetricReport()> validate;
};

TrainResult run_training(const TrainConfig& cfg,
                         const std::vector<model::SessionInput>& train_inputs,
                         ad::ParamSet params, const TrainHooks& hooks) {
    if (train_inputs.empty()) {
        throw std::invalid_argument("train: no training sessions");
    }
    TrainResult result;
    std::ostringstream log;
    AdamState adam;
    Rng dropout_rng(derive_seed(cfg.seed, kDropTag));

    const std::string stop_key =
        cfg.stop_metric + "@" + std::to_string(cfg.stop_k());
    double best = -1.0;
    std::size_t no_improve = 0;
    std::vector<Matrix> best_values;

    std::vector<std::size_t> order(train_inputs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, kShuffleTag, epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(pos + cfg.batch_size, order.size());
            ad::zero_grad(params);
            std::vector<ad::Var> losses;
            losses.reserve(end - pos);
            for (std::size_t i = pos; i < end; ++i) {
                losses.push_back(hooks.session_loss(train_inputs[order[i]], dropout_rng));
            }
            ad::Var batch_loss =
                ad::scale(ad::add_n(losses), 1.0 / static_cast<double>(losses.size()));
            const double loss_value = batch_loss.scalar();
            if (!std::isfinite(loss_value)) {
                throw std::runtime_error("train: non-finite loss in epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_index));
            }
            epoch_loss += loss_value * static_cast<double>(losses.size());
            ad::backward(batch_loss);
            adam_step(params, adam, cfg.learning_rate);
        }
        epoch_loss /= static_cast<double>(train_inputs.size());

        const metrics::MetricReport val = hooks.validate();
        const auto it = val.metrics.find(stop_key);
        const double metric = it == val.metrics.end() ? 0.0 : it->second;

        log << "epoch=" << epoch << " train_loss=" << fmt(epoch_loss) << " val_"
            << stop_key << "=" << fmt(metric);
        if (metric > best) {
            best = metric;
            result.best_epoch = epoch;
            no_improve = 0;
            best_values.clear();
            for (const auto& p : params) best_values.push_back(p.var.value());
            log << " best=yes";
        } else {
            ++no_improve;
            log << " best=no";
        }
        log << "\n";
        result.epochs_run = epoch;
        if (no_improve >= cfg.patience) break;
    }

    // Return the best-validation parameters, not the last ones.
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i].var.mutable_value() = best_values[i];
    }
    result.best_metric = best;
    result.log = log.str();
    return result;
}

std::vector<model::SessionInput> to_inputs(const std::vector<data::SessionRecord>& records,
                                           std::size_t n_max) {
    std::vector<model::SessionInput> inputs;
    inputs.reserve(records.size());
    for (const auto& r : records) inputs.push_back(to_input(r, n_max));
    return inputs;
}

metrics::MetricReport report_from_lists(const std::vector<metrics::RankedList>& lists,
                                        const std::vector<std::size_t>& ks) {
    metrics::MetricReport report;
    for (std::size_t k : ks) {
        const auto g = metrics::gauc_at_k(lists, k);
        if (g.value) report.metrics["gauc@" + std::to_string(k)] = *g.value;
        report.skipped["gauc@" + std::to_string(k)] = g.skipped;

        double sum = 0.0;
        std::size_t used = 0, skipped = 0;
        for (const auto& list : lists) {
            const auto v = metrics::ndcg_at_k(list, k);
            if (v) {
                sum += *v;
                ++used;
            } else {
                ++skipped;
            }
        }
        if (used) report.metrics["ndcg@" + std::to_string(k)] = sum / static_cast<double>(used);
        report.skipped["ndcg@" + std::to_string(k)] = skipped;
    }
    report.meta["gauc_definition"] = kGaucDefinition;
    return report;
}

}  // namespace

metrics::MetricReport evaluate_pear(const model::PearParams& params,
                                    const std::vector<data::SessionRecord>& records,
                                    const std::vector<std::size_t>& ks, double alpha,
                                    std::size_t n_max) {
    ad::NoGradGuard ng;
    model::ForwardOptions opts;  // eval mode: no dropout
    std::vector<metrics::RankedList> lists;
    lists.reserve(records.size());
    double loss_items = 0.0, loss_aux = 0.0;
    for (const auto& record : records) {
        const model::SessionInput input = to_input(record, n_max);
        const model::SessionOutput out = model::forward(params, input, opts);
        metrics::RankedList list;
        list.labels = input.labels;
        list.scores.resize(input.labels.size());
        for (std::size_t i = 0; i < list.scores.size(); ++i) {
            list.scores[i] = out.item_probs.value().at(i, 0);
        }
        loss_items += ad::bce_sum(out.item_probs, input.labels).scalar();
        loss_aux += ad::bce_sum(out.aux_prob, {any_click(input.labels)}).scalar();
        lists.push_back(std::move(list));
    }
    metrics::MetricReport report = report_from_lists(lists, ks);
    if (!records.empty()) {
        const double n = static_cast<double>(records.size());
        report.losses["items"] = loss_items / n;
        report.losses["aux"] = loss_aux / n;
        report.losses["total"] = (loss_items + alpha * loss_aux) / n;
    }
    return report;
}

metrics::MetricReport evaluate_ranker(const ranker::RankerParams& params,
                                      const std::vector<data::SessionRecord>& records,
                                      const std::vector<std::size_t>& ks) {
    ad::NoGradGuard ng;
    std::vector<metrics::RankedList> lists;
    lists.reserve(records.size());
    double loss_items = 0.0;
    for (const auto& record : records) {
        metrics::RankedList list;
        list.labels = record.labels;
        list.scores = ranker::score_record(params, record);
        // BCE of the pointwise probabilities, for the loss row of the report.
        model::SessionInput input = to_input(record, 0);
        const ad::Var probs = ad::sigmoid(ranker::score_candidates(params, input));
        loss_items += ad::bce_sum(probs, record.labels).scalar();
        lists.push_back(std::move(list));
    }
    metrics::MetricReport report = report_from_lists(lists, ks);
    if (!records.empty()) {
        report.losses["items"] = loss_items / static_cast<double>(records.size());
        report.losses["total"] = report.losses["items"];
    }
    return report;
}

TrainResult train_pear(const TrainConfig& cfg, const embedding::FeatureSchema& schema,
                       const std::vector<data::SessionRecord>& train_data,
                       const std::vector<data::SessionRecord>& val_data,
                       model::PearParams& params_out) {
    cfg.validate();
    embedding::FeatureSchema sized = schema;
    for (auto& f : sized.user_fields) f.embed_dim = cfg.embed_dim;
    for (auto& f : sized.item_fields) f.embed_dim = cfg.embed_dim;

    Rng init_rng(derive_seed(cfg.seed, kInitTag));
    params_out = model::PearParams::init(sized, cfg.dim_hidden, cfg.dim_fused, cfg.dim_attn,
                                         cfg.num_blocks, cfg.num_heads, init_rng);

    const auto train_inputs = to_inputs(train_data, cfg.n_max);

    TrainHooks hooks;
    hooks.session_loss = [&](const model::SessionInput& input, Rng& rng) {
        model::ForwardOptions opts;
        opts.train = true;
        opts.dropout_rate = cfg.dropout_rate;
        opts.rng = &rng;
        const model::SessionOutput out = model::forward(params_out, input, opts);
        return model::multitask_loss(out.item_probs, input.labels, out.aux_prob,
                                     any_click(input.labels), cfg.alpha);
    };
    hooks.validate = [&]() {
        return evaluate_pear(params_out, val_data, cfg.eval_ks, cfg.alpha, cfg.n_max);
    };
    return run_training(cfg, train_inputs, params_out.param_set(), hooks);
}

TrainResult train_ranker(const TrainConfig& cfg, const embedding::FeatureSchema& schema,
                         const std::vector<data::SessionRecord>& train_data,
                         const std::vector<data::SessionRecord>& val_data,
                         ranker::RankerParams& params_out) {
    cfg.validate();
    embedding::FeatureSchema sized = schema;
    for (auto& f : sized.user_fields) f.embed_dim = cfg.embed_dim;
    for (auto& f : sized.item_fields) f.embed_dim = cfg.embed_dim;

    Rng init_rng(derive_seed(cfg.seed, kInitTag));
    params_out = ranker::RankerParams::init(sized, cfg.dim_hidden, init_rng);

    const auto train_inputs = to_inputs(train_data, 0);

    TrainHooks hooks;
    hooks.session_loss = [&](const model::SessionInput& input, Rng&) {
        const ad::Var probs = ad::sigmoid(ranker::score_candidates(params_out, input));
        return ad::bce_sum(probs, input.labels);
    };
    hooks.validate = [&]() { return evaluate_ranker(params_out, val_data, cfg.eval_ks); };
    return run_training(cfg, train_inputs, params_out.param_set(), hooks);
}

namespace {

void put_schema(config::KeyValues& kv, const embedding::FeatureSchema& schema) {
    auto enc = [](const embedding::FieldSpec& f) {
        return f.name + ":" + std::to_string(f.cardinality) + ":" + std::to_string(f.embed_dim);
    };
    for (std::size_t i = 0; i < schema.user_fields.size(); ++i) {
        kv.set("schema.user." + std::to_string(i), enc(schema.user_fields[i]));
    }
    for (std::size_t i = 0; i < schema.item_fields.size(); ++i) {
        kv.set("schema.item." + std::to_string(i), enc(schema.item_fields[i]));
    }
}

embedding::FieldSpec parse_field(const std::string& s) {
    const auto c1 = s.find(':');
    const auto c2 = s.rfind(':');
    if (c1 == std::string::npos || c2 == c1) {
        throw std::runtime_error("checkpoint: bad field spec '" + s + "'");
    }
    embedding::FieldSpec f;
    f.name = s.substr(0, c1);
    f.cardinality = std::stoull(s.substr(c1 + 1, c2 - c1 - 1));
    f.embed_dim = std::stoull(s.substr(c2 + 1));
    return f;
}

checkpoint::Checkpoint build_checkpoint(const std::string& kind, const ad::ParamSet& params,
                                        const embedding::FeatureSchema& schema,
                                        const TrainConfig& cfg, double best_metric,
                                        std::size_t best_epoch) {
    checkpoint::Checkpoint ckpt;
    ckpt.config = cfg.to_kv();
    ckpt.config.set("model", kind);
    ckpt.config.set("best_metric", fmt(best_metric));
    ckpt.config.set("best_epoch", std::to_string(best_epoch));
    put_schema(ckpt.config, schema);
    for (const auto& p : params) {
        ckpt.tensors.push_back({p.name, p.var.value()});
    }
    return ckpt;
}

void fill_params(ad::ParamSet params, const checkpoint::Checkpoint& ckpt) {
    for (auto& p : params) {
        const Matrix& stored = ckpt.tensor(p.name);
        if (!stored.same_shape(p.var.value())) {
            throw std::runtime_error("checkpoint: tensor '" + p.name + "' has shape " +
                                     stored.shape_str() + ", expected " +
                                     p.var.value().shape_str());
        }
        p.var.mutable_value() = stored;
    }
}

}  // namespace

std::string model_kind(const checkpoint::Checkpoint& ckpt) {
    return ckpt.config.get("model");
}

embedding::FeatureSchema schema_from_checkpoint(const checkpoint::Checkpoint& ckpt) {
    embedding::FeatureSchema schema;
    for (std::size_t i = 0; ckpt.config.has("schema.user." + std::to_string(i)); ++i) {
        schema.user_fields.push_back(parse_field(ckpt.config.get("schema.user." + std::to_string(i))));
    }
    for (std::size_t i = 0; ckpt.config.has("schema.item." + std::to_string(i)); ++i) {
        schema.item_fields.push_back(parse_field(ckpt.config.get("schema.item." + std::to_string(i))));
    }
    schema.validate();
    return schema;
}

checkpoint::Checkpoint pear_to_checkpoint(const model::PearParams& params,
                                          const TrainConfig& cfg, double best_metric,
                                          std::size_t best_epoch) {
    return build_checkpoint("pear", params.param_set(), params.schema, cfg, best_metric,
                            best_epoch);
}

model::PearParams pear_from_checkpoint(const checkpoint::Checkpoint& ckpt,
                                       TrainConfig* cfg_out) {
    if (model_kind(ckpt) != "pear") {
        throw std::runtime_error("checkpoint: expected a pear model, got '" +
                                 model_kind(ckpt) + "'");
    }
    const TrainConfig cfg = TrainConfig::from_kv(ckpt.config);
    if (cfg_out) *cfg_out = cfg;
    const embedding::FeatureSchema schema = schema_from_checkpoint(ckpt);
    Rng dummy(0);
    model::PearParams params =
        model::PearParams::init(schema, cfg.dim_hidden, cfg.dim_fused, cfg.dim_attn,
                                cfg.num_blocks, cfg.num_heads, dummy);
    fill_params(params.param_set(), ckpt);
    return params;
}

checkpoint::Checkpoint ranker_to_checkpoint(const ranker::RankerParams& params,
                                            const TrainConfig& cfg, double best_metric,
                                            std::size_t best_epoch) {
    return build_checkpoint("pointwise", params.param_set(), params.schema, cfg, best_metric,
                            best_epoch);
}

ranker::RankerParams ranker_from_checkpoint(const checkpoint::Checkpoint& ckpt,
                                            TrainConfig* cfg_out) {
    if (model_kind(ckpt) != "pointwise") {
        throw std::runtime_error("checkpoint: expected a pointwise model, got '" +
                                 model_kind(ckpt) + "'");
    }
    const TrainConfig cfg = TrainConfig::from_kv(ckpt.config);
    if (cfg_out) *cfg_out = cfg;
    const embedding::FeatureSchema schema = schema_from_checkpoint(ckpt);
    Rng dummy(0);
    ranker::RankerParams params = ranker::RankerParams::init(schema, cfg.dim_hidden, dummy);
    fill_params(params.param_set(), ckpt);
    return params;
}

double AblateReport::mean(const std::string& variant, const std::string& metric) const {
    for (const auto& v : variants) {
        if (v.name != variant) continue;
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& r : v.per_seed) {
            const auto it = r.metrics.find(metric);
            if (it != r.metrics.end()) {
                sum += it->second;
                ++count;
            }
        }
        if (count == 0) throw std::runtime_error("ablate: metric '" + metric + "' undefined");
        return sum / static_cast<double>(count);
    }
    throw std::runtime_error("ablate: unknown variant '" + variant + "'");
}

double AblateReport::stddev(const std::string& variant, const std::string& metric) const {
    const double mu = mean(variant, metric);
    for (const auto& v : variants) {
        if (v.name != variant) continue;
        double acc = 0.0;
        std::size_t count = 0;
        for (const auto& r : v.per_seed) {
            const auto it = r.metrics.find(metric);
            if (it != r.metrics.end()) {
                acc += (it->second - mu) * (it->second - mu);
                ++count;
            }
        }
        return count > 1 ? std::sqrt(acc / static_cast<double>(count - 1)) : 0.0;
    }
    throw std::runtime_error("ablate: unknown variant '" + variant + "'");
}

std::string AblateReport::to_table(const std::vector<std::size_t>& ks) const {
    std::vector<std::string> metric_names;
    for (std::size_t k : ks) {
        metric_names.push_back("gauc@" + std::to_string(k));
        metric_names.push_back("ndcg@" + std::to_string(k));
    }
    std::size_t name_w = 7;
    for (const auto& v : variants) name_w = std::max(name_w, v.name.size());

    std::ostringstream os;
    os << std::string(name_w + 2, ' ');
    for (const auto& mn : metric_names) {
        os << mn << std::string(18 - mn.size(), ' ');
    }
    os << "\n";
    char buf[64];
    for (const auto& v : variants) {
        os << v.name << std::string(name_w - v.name.size() + 2, ' ');
        for (const auto& mn : metric_names) {
            std::snprintf(buf, sizeof(buf), "%.4f+-%.4f", mean(v.name, mn),
                          stddev(v.name, mn));
            os << buf << std::string(18 - std::strlen(buf), ' ');
        }
        os << "\n";
    }
    return os.str();
}

std::string AblateReport::to_text() const {
    std::ostringstream os;
    os << "#ablate v1\n";
    os << "seeds = ";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i) os << ",";
        os << seeds[i];
    }
    os << "\n";
    for (const auto& v : variants) {
        for (std::size_t s = 0; s < v.per_seed.size(); ++s) {
            for (const auto& [k, val] : v.per_seed[s].metrics) {
                os << "variant." << v.name << ".seed" << seeds[s] << "." << k << " = "
                   << fmt(val) << "\n";
            }
        }
        for (const auto& [k, val] : v.per_seed.front().metrics) {
            os << "variant." << v.name << ".mean." << k << " = " << fmt(mean(v.name, k))
               << "\n";
            os << "variant." << v.name << ".std." << k << " = " << fmt(stddev(v.name, k))
               << "\n";
        }
    }
    return os.str();
}

AblateReport ablate(const TrainConfig& base, const embedding::FeatureSchema& schema,
                    const std::vector<data::SessionRecord>& train_data,
                    const std::vector<data::SessionRecord>& val_data,
                    const std::vector<data::SessionRecord>& test_data,
                    std::size_t num_seeds) {
    if (num_seeds == 0) throw std::invalid_argument("ablate: need at least one seed");

    AblateReport report;
    for (std::size_t s = 0; s < num_seeds; ++s) report.seeds.push_back(base.seed + s);

    // Variant list: the history sweep reuses `full` for the top length.
    std::vector<std::pair<std::string, TrainConfig>> variants;
    {
        TrainConfig full = base;
        variants.emplace_back("full", full);
        TrainConfig no_aux = base;
        no_aux.alpha = 0.0;
        variants.emplace_back("no_aux", no_aux);
        TrainConfig no_hist = base;
        no_hist.n_max = 0;
        variants.emplace_back("no_hist", no_hist);
        for (std::size_t len : {std::size_t{2}, std::size_t{4}, std::size_t{8}}) {
            if (len >= base.n_max) continue;
            TrainConfig swept = base;
            swept.n_max = len;
            variants.emplace_back("hist_" + std::to_string(len), swept);
        }
    }

    report.variants.push_back({"pointwise", {}});
    for (const auto& [name, cfg] : variants) report.variants.push_back({name, {}});
    report.variants.push_back({"hist_" + std::to_string(base.n_max), {}});

    for (std::uint64_t seed : report.seeds) {
        TrainConfig ranker_cfg = base;
        ranker_cfg.seed = seed;
        ranker::RankerParams ranker_params;
        train_ranker(ranker_cfg, schema, train_data, val_data, ranker_params);

        // Candidates ordered by the initial ranker, as in the full pipeline.
        auto order_all = [&](std::vector<data::SessionRecord> records) {
            for (auto& r : records) ranker::initial_rank(ranker_params, r);
            return records;
        };
        const auto train_ordered = order_all(train_data);
        const auto val_ordered = order_all(val_data);
        const auto test_ordered = order_all(test_data);

        report.variants[0].per_seed.push_back(
            evaluate_ranker(ranker_params, test_ordered, base.eval_ks));

        metrics::MetricReport full_result;
        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
            TrainConfig cfg = variants[vi].second;
            cfg.seed = seed;
            model::PearParams params;
            train_pear(cfg, schema, train_ordered, val_ordered, params);
            auto result = evaluate_pear(params, test_ordered, cfg.eval_ks, cfg.alpha, cfg.n_max);
            if (variants[vi].first == "full") full_result = result;
            report.variants[vi + 1].per_seed.push_back(std::move(result));
        }
        // Top of the history sweep is the full model.
        report.variants.back().per_seed.push_back(full_result);
    }
    return report;
}

}  // namespace pear::trainer
