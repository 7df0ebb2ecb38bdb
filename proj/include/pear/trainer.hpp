// SPDX-License-Identifier: Apache-2.0
//
// End-to-end training: Adam, shuffled mini-batches, gAUC-based early
// stopping, evaluation, the ablation harness, and checkpoint adapters.
// A run is deterministic given (config, data, seed): the per-epoch log it
// produces is byte-identical across reruns.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pear/autodiff.hpp"
#include "pear/checkpoint.hpp"
#include "pear/data.hpp"
#include "pear/metrics.hpp"
#include "pear/model.hpp"
#include "pear/ranker.hpp"

namespace pear::trainer {

struct TrainConfig {
    double learning_rate = 1e-3;  // paper grid: 1e-3, 1e-4, 5e-5, 1e-5
    std::size_t batch_size = 64;
    double dropout_rate = 0.1;
    std::size_t patience = 2;
    double alpha = 1.0;
    std::size_t embed_dim = 8;
    std::size_t dim_hidden = 32;  // h
    std::size_t dim_fused = 32;   // d
    std::size_t dim_attn = 32;    // d_h
    std::size_t num_blocks = 1;   // N
    std::size_t num_heads = 1;
    std::size_t n_max = 16;
    std::size_t max_epochs = 15;
    std::uint64_t seed = 1;
    std::vector<std::size_t> eval_ks = {5, 10};
    std::string stop_metric = "gauc";  // early stopping on <metric>@max(K)

    // Paper-scale presets: history 128, widths [500, 500], d_h 500,
    // batch 200, K = 20 and 30.
    void apply_paper_scale();

    void validate() const;
    static TrainConfig from_kv(const config::KeyValues& kv);
    config::KeyValues to_kv() const;

    std::size_t stop_k() const;
};

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias correction).
struct AdamState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::size_t step = 0;
};

void adam_step(ad::ParamSet& params, AdamState& state, double lr);

struct TrainResult {
    std::size_t best_epoch = 0;   // 1-based epoch of the returned parameters
    std::size_t epochs_run = 0;
    double best_metric = 0.0;
    std::string log;              // one line per epoch, no timestamps
};

// Truncates history to the most recent n_max entries.
model::SessionInput to_input(const data::SessionRecord& record, std::size_t n_max);

TrainResult train_pear(const TrainConfig& cfg, const embedding::FeatureSchema& schema,
                       const std::vector<data::SessionRecord>& train_data,
                       const std::vector<data::SessionRecord>& val_data,
                       model::PearParams& params_out);

TrainResult train_ranker(const TrainConfig& cfg, const embedding::FeatureSchema& schema,
                         const std::vector<data::SessionRecord>& train_data,
                         const std::vector<data::SessionRecord>& val_data,
                         ranker::RankerParams& params_out);

// Model in eval mode; candidates re-scored by the model, gAUC@K / nDCG@K per
// requested K plus mean losses.
metrics::MetricReport evaluate_pear(const model::PearParams& params,
                                    const std::vector<data::SessionRecord>& records,
                                    const std::vector<std::size_t>& ks, double alpha,
                                    std::size_t n_max);

metrics::MetricReport evaluate_ranker(const ranker::RankerParams& params,
                                      const std::vector<data::SessionRecord>& records,
                                      const std::vector<std::size_t>& ks);

// Checkpoint adapters. The embedded config block carries the model kind, the
// schema, the train config and the best validation stats.
checkpoint::Checkpoint pear_to_checkpoint(const model::PearParams& params,
                                          const TrainConfig& cfg, double best_metric,
                                          std::size_t best_epoch);
model::PearParams pear_from_checkpoint(const checkpoint::Checkpoint& ckpt,
                                       TrainConfig* cfg_out = nullptr);
checkpoint::Checkpoint ranker_to_checkpoint(const ranker::RankerParams& params,
                                            const TrainConfig& cfg, double best_metric,
                                            std::size_t best_epoch);
ranker::RankerParams ranker_from_checkpoint(const checkpoint::Checkpoint& ckpt,
                                            TrainConfig* cfg_out = nullptr);

std::string model_kind(const checkpoint::Checkpoint& ckpt);
embedding::FeatureSchema schema_from_checkpoint(const checkpoint::Checkpoint& ckpt);

// Ablation harness: trains {pointwise, full, no-aux, no-history, history-
// length sweep} per seed on identical data and reports per-variant metrics
// with mean and std across seeds.
struct AblateVariant {
    std::string name;
    std::vector<metrics::MetricReport> per_seed;
};

struct AblateReport {
    std::vector<std::uint64_t> seeds;
    std::vector<AblateVariant> variants;

    double mean(const std::string& variant, const std::string& metric) const;
    double stddev(const std::string& variant, const std::string& metric) const;
    std::string to_table(const std::vector<std::size_t>& ks) const;
    std::string to_text() const;
};

AblateReport ablate(const TrainConfig& base, const embedding::FeatureSchema& schema,
                    const std::vector<data::SessionRecord>& train_data,
                    const std::vector<data::SessionRecord>& val_data,
                    const std::vector<data::SessionRecord>& test_data,
                    std::size_t num_seeds);

}  // namespace pear::trainer
