// SPDX-License-Identifier: Apache-2.0
//
// Synthetic clickstream with planted context effects, and the session file
// format. A candidate's click logit is
//
//   base_logit + quality(item)
//     + theta_hist * [category(item) == modal category of recent history]
//     - theta_div  * (# same-category candidates shown earlier in the list)
//
// so the data contains exactly the two context signals a re-ranker can
// exploit beyond a pointwise scorer. Generation is a pure function of
// (config, seed): every user draws from an independent stream derived from
// (seed, user_id).

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pear/config.hpp"
#include "pear/embedding.hpp"

namespace pear::data {

struct SessionRecord {
    std::uint64_t user_id = 0;
    std::vector<std::size_t> user_values;                // per user field
    std::vector<std::vector<std::size_t>> history;       // most recent last
    std::vector<std::vector<std::size_t>> candidates;    // displayed order
    std::vector<int> labels;                             // one per candidate
};

struct SynthConfig {
    std::size_t num_users = 2000;
    std::size_t num_items = 500;
    std::size_t num_categories = 8;
    std::size_t m = 10;        // candidates per session
    std::size_t n_max = 16;    // history length cap in the written records
    std::size_t sessions_per_user = 10;
    double theta_hist = 2.0;
    double theta_div = 1.0;
    double base_logit = -2.0;
    std::uint64_t seed = 1;
    double frac_train = 0.8;
    double frac_val = 0.1;
    double frac_test = 0.1;
    // Number of most-recent clicks the modal category is computed over;
    // 0 means "same as n_max".
    std::size_t hist_window = 0;

    std::size_t effective_window() const { return hist_window ? hist_window : n_max; }
    void validate() const;

    static SynthConfig from_kv(const config::KeyValues& kv);
    config::KeyValues to_kv() const;
};

// Fixed item catalog: a category and a latent quality per item.
struct Catalog {
    std::vector<std::size_t> category;  // in [0, num_categories)
    std::vector<double> quality;
};

Catalog build_catalog(const SynthConfig& cfg);

struct GeneratedSession {
    SessionRecord record;
    std::vector<double> click_probs;  // planted probability per candidate
    std::size_t session_index = 0;    // per-user ordinal
};

// All sessions in (user, session) order.
std::vector<GeneratedSession> simulate(const SynthConfig& cfg);

// Planted click logit for one candidate slot.
double planted_logit(const SynthConfig& cfg, const Catalog& catalog, std::size_t item,
                     std::optional<std::size_t> modal_category,
                     std::size_t same_category_before);

// Most frequent category over the window of most-recent clicked items; ties
// go to the smallest category id. Empty history yields no value.
std::optional<std::size_t> modal_category(const Catalog& catalog,
                                          const std::vector<std::size_t>& clicked_items,
                                          std::size_t window);

// The schema the generated files follow: one user field (user id) and two
// item fields (item id, category), all with the given embedding width.
embedding::FeatureSchema synth_schema(const SynthConfig& cfg, std::size_t embed_dim);

// Writes schema.txt, train.tsv, val.tsv and test.tsv under out_dir.
void generate(const SynthConfig& cfg, const std::string& out_dir);

// Session file round-trip. Line format (tab-separated, csv within fields):
//   user_id \t user_fields \t hist_item;hist_item;... \t cand:label;...
// where each item is its field indices joined by commas. A `#sessions v1`
// header line is mandatory.
void save_sessions(const std::string& path, const std::vector<SessionRecord>& records);
std::vector<SessionRecord> load_sessions(const std::string& path,
                                         const embedding::FeatureSchema& schema);

void save_schema(const std::string& path, const embedding::FeatureSchema& schema);
embedding::FeatureSchema load_schema(const std::string& path);

}  // namespace pear::data
