// SPDX-License-Identifier: Apache-2.0

#include "pear/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pear::metrics {

namespace {

void validate(const RankedList& list, const char* op) {
    if (list.scores.size() != list.labels.size()) {
        throw std::invalid_argument(std::string(op) + ": scores/labels length mismatch");
    }
    for (int y : list.labels) {
        if (y != 0 && y != 1) {
            throw std::invalid_argument(std::string(op) + ": label not in {0,1}");
        }
    }
}

// Indices sorted by descending score, ties broken by original index.
std::vector<std::size_t> rank_order(const std::vector<double>& scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    return idx;
}

}  // namespace

std::optional<double> auc(const RankedList& list) {
    validate(list, "auc");
    std::size_t pos = 0;
    for (int y : list.labels) pos += static_cast<std::size_t>(y);
    const std::size_t neg = list.labels.size() - pos;
    if (pos == 0 || neg == 0) return std::nullopt;

    // Rank-sum form with average ranks for tied scores. All intermediate
    // sums are dyadic rationals, so this matches all-pairs enumeration
    // bit-for-bit.
    std::vector<std::size_t> idx(list.scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return list.scores[a] < list.scores[b];
    });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && list.scores[idx[j]] == list.scores[idx[i]]) ++j;
        // Ranks are 1-based; tied block [i, j) shares the average rank.
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) {
            if (list.labels[idx[t]]) pos_rank_sum += avg_rank;
        }
        i = j;
    }
    const double p = static_cast<double>(pos);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) /
           (p * static_cast<double>(neg));
}

std::optional<double> ndcg_at_k(const RankedList& list, std::size_t k) {
    validate(list, "ndcg_at_k");
    if (k == 0) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    std::size_t pos = 0;
    for (int y : list.labels) pos += static_cast<std::size_t>(y);
    if (pos == 0) return std::nullopt;

    const std::size_t depth = std::min(k, list.labels.size());
    const auto order = rank_order(list.scores);
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (list.labels[order[i]]) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(depth, pos); ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
}

GaucResult gauc_at_k(const std::vector<RankedList>& lists, std::size_t k) {
    if (k == 0) throw std::invalid_argument("gauc_at_k: k must be >= 1");
    GaucResult result;
    double weighted = 0.0;
    double weight_sum = 0.0;
    for (const auto& list : lists) {
        validate(list, "gauc_at_k");
        const auto order = rank_order(list.scores);
        const std::size_t depth = std::min(k, order.size());
        RankedList top;
        top.scores.reserve(depth);
        top.labels.reserve(depth);
        for (std::size_t i = 0; i < depth; ++i) {
            top.scores.push_back(list.scores[order[i]]);
            top.labels.push_back(list.labels[order[i]]);
        }
        const auto a = auc(top);
        if (!a) {
            ++result.skipped;
            continue;
        }
        weighted += *a * static_cast<double>(depth);
        weight_sum += static_cast<double>(depth);
        ++result.used;
    }
    if (weight_sum > 0.0) result.value = weighted / weight_sum;
    return result;
}

std::string MetricReport::to_text() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& [k, v] : metrics) os << "metric." << k << " = " << v << "\n";
    for (const auto& [k, v] : losses) os << "loss." << k << " = " << v << "\n";
    for (const auto& [k, v] : skipped) os << "skipped." << k << " = " << v << "\n";
    for (const auto& [k, v] : meta) os << "meta." << k << " = " << v << "\n";
    return os.str();
}

MetricReport MetricReport::from_text(const std::string& text) {
    MetricReport report;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.rfind("metric.", 0) == 0) {
            report.metrics[key.substr(7)] = std::stod(val);
        } else if (key.rfind("loss.", 0) == 0) {
            report.losses[key.substr(5)] = std::stod(val);
        } else if (key.rfind("skipped.", 0) == 0) {
            report.skipped[key.substr(8)] = static_cast<std::size_t>(std::stoull(val));
        } else if (key.rfind("meta.", 0) == 0) {
            report.meta[key.substr(5)] = val;
        }
    }
    return report;
}

std::string MetricReport::to_table() const {
    std::size_t width = 0;
    for (const auto& [k, v] : metrics) width = std::max(width, k.size());
    for (const auto& [k, v] : losses) width = std::max(width, k.size() + 5);
    for (const auto& [k, v] : skipped) width = std::max(width, k.size() + 8);
    std::ostringstream os;
    char buf[64];
    for (const auto& [k, v] : metrics) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        os << "  " << k << std::string(width - k.size() + 2, ' ') << buf << "\n";
    }
    for (const auto& [k, v] : losses) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        const std::string key = "loss." + k;
        os << "  " << key << std::string(width - key.size() + 2, ' ') << buf << "\n";
    }
    for (const auto& [k, v] : skipped) {
        const std::string key = "skipped." + k;
        os << "  " << key << std::string(width - key.size() + 2, ' ') << v << "\n";
    }
    return os.str();
}

}  // namespace pear::metrics
