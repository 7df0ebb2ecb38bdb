// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: synthetic data generation, initial-ranker and
// re-ranker training, evaluation, and the ablation harness.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "pear/checkpoint.hpp"
#include "pear/config.hpp"
#include "pear/data.hpp"
#include "pear/kernels.hpp"
#include "pear/trainer.hpp"

namespace {

using pear::config::KeyValues;

struct DataDir {
    pear::embedding::FeatureSchema schema;
    std::vector<pear::data::SessionRecord> train;
    std::vector<pear::data::SessionRecord> val;
    std::vector<pear::data::SessionRecord> test;
};

DataDir load_data_dir(const std::string& dir, bool want_test) {
    DataDir d;
    d.schema = pear::data::load_schema(dir + "/schema.txt");
    d.train = pear::data::load_sessions(dir + "/train.tsv", d.schema);
    d.val = pear::data::load_sessions(dir + "/val.tsv", d.schema);
    if (want_test) d.test = pear::data::load_sessions(dir + "/test.tsv", d.schema);
    return d;
}

// Train-config CLI flags; every set flag overrides the config file value.
struct ConfigFlags {
    std::optional<double> lr, dropout, alpha;
    std::optional<std::size_t> batch_size, patience, embed_dim, hidden_dim, fused_dim,
        attn_dim, blocks, heads, n_max, max_epochs, seed;
    std::optional<std::string> ks, stop_metric;
    bool paper_scale = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--batch-size", batch_size, "sessions per mini-batch");
        cmd->add_option("--dropout", dropout, "dropout rate");
        cmd->add_option("--patience", patience, "early-stopping patience");
        cmd->add_option("--alpha", alpha, "list-level loss weight");
        cmd->add_option("--embed-dim", embed_dim, "embedding width per field");
        cmd->add_option("--hidden-dim", hidden_dim, "fusion MLP hidden width (h)");
        cmd->add_option("--fused-dim", fused_dim, "fused representation width (d)");
        cmd->add_option("--attn-dim", attn_dim, "attention width (d_h)");
        cmd->add_option("--blocks", blocks, "attention block count (N)");
        cmd->add_option("--heads", heads, "attention heads");
        cmd->add_option("--n-max", n_max, "history length cap");
        cmd->add_option("--max-epochs", max_epochs, "epoch cap");
        cmd->add_option("--seed", seed, "run seed");
        cmd->add_option("--ks", ks, "evaluation cutoffs, e.g. 5,10");
        cmd->add_option("--stop-metric", stop_metric, "early-stop metric: gauc or ndcg");
        cmd->add_flag("--paper-scale", paper_scale,
                      "paper presets: history 128, widths 500, batch 200, K 20/30");
    }

    pear::trainer::TrainConfig resolve(const std::string& config_path) const {
        KeyValues kv;
        if (!config_path.empty()) kv = KeyValues::load(config_path);
        if (paper_scale) kv.set("paper_scale", "true");
        if (lr) kv.set("learning_rate", std::to_string(*lr));
        if (batch_size) kv.set("batch_size", std::to_string(*batch_size));
        if (dropout) kv.set("dropout", std::to_string(*dropout));
        if (patience) kv.set("patience", std::to_string(*patience));
        if (alpha) kv.set("alpha", std::to_string(*alpha));
        if (embed_dim) kv.set("embed_dim", std::to_string(*embed_dim));
        if (hidden_dim) kv.set("hidden_dim", std::to_string(*hidden_dim));
        if (fused_dim) kv.set("fused_dim", std::to_string(*fused_dim));
        if (attn_dim) kv.set("attn_dim", std::to_string(*attn_dim));
        if (blocks) kv.set("blocks", std::to_string(*blocks));
        if (heads) kv.set("heads", std::to_string(*heads));
        if (n_max) kv.set("n_max", std::to_string(*n_max));
        if (max_epochs) kv.set("max_epochs", std::to_string(*max_epochs));
        if (seed) kv.set("seed", std::to_string(*seed));
        if (ks) kv.set("ks", *ks);
        if (stop_metric) kv.set("stop_metric", *stop_metric);
        return pear::trainer::TrainConfig::from_kv(kv);
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
}

int run(int argc, char** argv) {
    CLI::App app{"PEAR re-ranker: contextualized transformer re-ranking on synthetic clickstreams"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a planted synthetic dataset");
    std::string gen_config, gen_out;
    std::optional<std::size_t> gen_seed;
    gen->add_option("--config", gen_config, "synth config file (key = value)");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_seed, "override the config seed");

    // train-ranker
    auto* tr = app.add_subcommand("train-ranker", "train the pointwise initial ranker");
    std::string tr_data, tr_out, tr_config;
    ConfigFlags tr_flags;
    tr->add_option("--data", tr_data, "data directory from gen-data")->required();
    tr->add_option("--out", tr_out, "checkpoint path")->required();
    tr->add_option("--config", tr_config, "train config file");
    tr_flags.attach(tr);

    // train
    auto* tp = app.add_subcommand("train", "train the re-ranker");
    std::string tp_data, tp_out, tp_config, tp_ranker;
    ConfigFlags tp_flags;
    tp->add_option("--data", tp_data, "data directory from gen-data")->required();
    tp->add_option("--ranker", tp_ranker, "initial-ranker checkpoint")->required();
    tp->add_option("--config", tp_config, "train config file");
    tp->add_option("--out", tp_out, "checkpoint path")->required();
    tp_flags.attach(tp);

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a data split");
    std::string ev_ckpt, ev_data, ev_ks = "5,10", ev_split = "test", ev_out;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--data", ev_data, "data directory")->required();
    ev->add_option("--k", ev_ks, "evaluation cutoffs, e.g. 20,30");
    ev->add_option("--split", ev_split)->check(CLI::IsMember({"train", "val", "test"}));
    ev->add_option("--out", ev_out, "write the report to this file");

    // ablate
    auto* ab = app.add_subcommand("ablate", "train and compare model variants");
    std::string ab_data, ab_out, ab_config;
    std::size_t ab_seeds = 1;
    ConfigFlags ab_flags;
    ab->add_option("--data", ab_data, "data directory")->required();
    ab->add_option("--seeds", ab_seeds, "number of seeds (base seed, base+1, ...)");
    ab->add_option("--config", ab_config, "train config file");
    ab->add_option("--out", ab_out, "write the report to this file");
    ab_flags.attach(ab);

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        KeyValues kv;
        if (!gen_config.empty()) kv = KeyValues::load(gen_config);
        if (gen_seed) kv.set("seed", std::to_string(*gen_seed));
        const auto cfg = pear::data::SynthConfig::from_kv(kv);
        pear::data::generate(cfg, gen_out);
        std::cout << "wrote schema.txt, train.tsv, val.tsv, test.tsv under " << gen_out
                  << "\n";
        return 0;
    }

    if (tr->parsed()) {
        const auto cfg = tr_flags.resolve(tr_config);
        const DataDir d = load_data_dir(tr_data, false);
        pear::ranker::RankerParams params;
        const auto result = pear::trainer::train_ranker(cfg, d.schema, d.train, d.val, params);
        pear::checkpoint::save(tr_out, pear::trainer::ranker_to_checkpoint(
                                           params, cfg, result.best_metric, result.best_epoch));
        write_text(tr_out + ".log", result.log);
        std::cout << result.log;
        std::cout << "best epoch " << result.best_epoch << ", val "
                  << cfg.stop_metric << "@" << cfg.stop_k() << " = " << result.best_metric
                  << "\nsaved " << tr_out << "\n";
        return 0;
    }

    if (tp->parsed()) {
        const auto cfg = tp_flags.resolve(tp_config);
        DataDir d = load_data_dir(tp_data, false);
        const auto ranker_params =
            pear::trainer::ranker_from_checkpoint(pear::checkpoint::load(tp_ranker));
        for (auto& r : d.train) pear::ranker::initial_rank(ranker_params, r);
        for (auto& r : d.val) pear::ranker::initial_rank(ranker_params, r);
        pear::model::PearParams params;
        const auto result = pear::trainer::train_pear(cfg, d.schema, d.train, d.val, params);
        pear::checkpoint::save(tp_out, pear::trainer::pear_to_checkpoint(
                                           params, cfg, result.best_metric, result.best_epoch));
        write_text(tp_out + ".log", result.log);
        std::cout << result.log;
        std::cout << "best epoch " << result.best_epoch << ", val "
                  << cfg.stop_metric << "@" << cfg.stop_k() << " = " << result.best_metric
                  << "\nsaved " << tp_out << "\n";
        return 0;
    }

    if (ev->parsed()) {
        KeyValues kv;
        kv.set("ks", ev_ks);
        const auto ks = kv.get_uint_list("ks");
        const auto ckpt = pear::checkpoint::load(ev_ckpt);
        const auto schema = pear::trainer::schema_from_checkpoint(ckpt);
        const auto records =
            pear::data::load_sessions(ev_data + "/" + ev_split + ".tsv", schema);
        // Data indices must fit the checkpoint's embedding tables.
        const auto data_schema = pear::data::load_schema(ev_data + "/schema.txt");
        for (std::size_t i = 0; i < schema.user_fields.size(); ++i) {
            if (i >= data_schema.user_fields.size() ||
                data_schema.user_fields[i].cardinality != schema.user_fields[i].cardinality) {
                throw std::runtime_error("eval: data schema does not match checkpoint schema");
            }
        }
        for (std::size_t i = 0; i < schema.item_fields.size(); ++i) {
            if (i >= data_schema.item_fields.size() ||
                data_schema.item_fields[i].cardinality != schema.item_fields[i].cardinality) {
                throw std::runtime_error("eval: data schema does not match checkpoint schema");
            }
        }

        pear::metrics::MetricReport report;
        if (pear::trainer::model_kind(ckpt) == "pear") {
            pear::trainer::TrainConfig cfg;
            const auto params = pear::trainer::pear_from_checkpoint(ckpt, &cfg);
            report = pear::trainer::evaluate_pear(params, records, ks, cfg.alpha, cfg.n_max);
        } else {
            const auto params = pear::trainer::ranker_from_checkpoint(ckpt);
            report = pear::trainer::evaluate_ranker(params, records, ks);
        }
        std::cout << ev_split << " (" << records.size() << " sessions):\n"
                  << report.to_table();
        if (!ev_out.empty()) write_text(ev_out, report.to_text());
        return 0;
    }

    if (ab->parsed()) {
        const auto cfg = ab_flags.resolve(ab_config);
        const DataDir d = load_data_dir(ab_data, true);
        const auto report =
            pear::trainer::ablate(cfg, d.schema, d.train, d.val, d.test, ab_seeds);
        std::cout << report.to_table(cfg.eval_ks);
        if (!ab_out.empty()) write_text(ab_out, report.to_text());
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
