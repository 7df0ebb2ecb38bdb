// SPDX-License-Identifier: Apache-2.0
//
// Ranking metrics: per-list AUC, nDCG@K, and group AUC over truncated lists.
// Degenerate lists (no positives, or no positives and negatives both) yield
// no value; callers skip and count them.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pear::metrics {

struct RankedList {
    std::vector<double> scores;
    std::vector<int> labels;  // 0/1
};

// Probability that a random positive outscores a random negative; ties count
// one half. Empty when the list has no positive or no negative.
std::optional<double> auc(const RankedList& list);

// Binary-gain DCG@k over the list sorted by descending score (ties broken by
// original index), normalized by the ideal DCG@k. Empty when the list has no
// positive. Throws for k == 0.
std::optional<double> ndcg_at_k(const RankedList& list, std::size_t k);

struct GaucResult {
    std::optional<double> value;  // empty when every list is degenerate
    std::size_t skipped = 0;      // lists degenerate after truncation
    std::size_t used = 0;
};

// Each list truncated to its top-k items by score, per-list AUC, weighted
// average with weight = truncated list length.
GaucResult gauc_at_k(const std::vector<RankedList>& lists, std::size_t k);

// Flat container for a run's metric values, all in [0, 1], plus loss values
// and skip counts on the side.
struct MetricReport {
    std::map<std::string, double> metrics;
    std::map<std::string, double> losses;
    std::map<std::string, std::size_t> skipped;
    std::map<std::string, std::string> meta;

    // Flat key=value text block; parse with from_text.
    std::string to_text() const;
    static MetricReport from_text(const std::string& text);
    // Aligned two-column console table.
    std::string to_table() const;
};

}  // namespace pear::metrics
