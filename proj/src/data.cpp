// SPDX-License-Identifier: Apache-2.0

#include "pear/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pear/rng.hpp"

namespace pear::data {

namespace {

constexpr char kSessionsHeader[] = "#sessions v1";
constexpr char kSchemaHeader[] = "#schema v1";

constexpr std::uint64_t kCatalogTag = 0x636174616c6f67ULL;  // "catalog"
constexpr std::uint64_t kUserTag = 0x75736572ULL;           // "user"
constexpr std::uint64_t kSegmentTag = 0x736567ULL;          // "seg"

// Demographic-style user feature. The click mechanism ignores it: in this
// world personalization is carried entirely by the history list, which is
// what the re-ranker is supposed to exploit.
constexpr std::size_t kUserSegments = 16;

std::size_t user_segment(const SynthConfig& cfg, std::size_t user) {
    return splitmix64(derive_seed(cfg.seed, kSegmentTag, user)) % kUserSegments;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void SynthConfig::validate() const {
    if (num_users == 0 || num_items == 0 || num_categories == 0 || m == 0 ||
        sessions_per_user == 0 || n_max == 0) {
        throw std::invalid_argument("synth config: all counts must be >= 1");
    }
    if (m > num_items) {
        throw std::invalid_argument("synth config: m exceeds the number of items");
    }
    if (frac_train < 0 || frac_val < 0 || frac_test < 0 ||
        std::fabs(frac_train + frac_val + frac_test - 1.0) > 1e-9) {
        throw std::invalid_argument("synth config: split fractions must be >= 0 and sum to 1");
    }
    // Every nonzero fraction must receive at least one session per user.
    const double spu = static_cast<double>(sessions_per_user);
    for (double f : {frac_train, frac_val, frac_test}) {
        if (f > 0.0 && static_cast<std::size_t>(f * spu + 0.5) == 0) {
            throw std::invalid_argument(
                "synth config: impossible split, a nonzero fraction rounds to 0 sessions");
        }
    }
}

SynthConfig SynthConfig::from_kv(const config::KeyValues& kv) {
    SynthConfig c;
    if (kv.has("num_users")) c.num_users = kv.get_uint("num_users");
    if (kv.has("num_items")) c.num_items = kv.get_uint("num_items");
    if (kv.has("num_categories")) c.num_categories = kv.get_uint("num_categories");
    if (kv.has("m")) c.m = kv.get_uint("m");
    if (kv.has("n_max")) c.n_max = kv.get_uint("n_max");
    if (kv.has("sessions_per_user")) c.sessions_per_user = kv.get_uint("sessions_per_user");
    if (kv.has("theta_hist")) c.theta_hist = kv.get_double("theta_hist");
    if (kv.has("theta_div")) c.theta_div = kv.get_double("theta_div");
    if (kv.has("base_logit")) c.base_logit = kv.get_double("base_logit");
    if (kv.has("seed")) c.seed = kv.get_uint("seed");
    if (kv.has("frac_train")) c.frac_train = kv.get_double("frac_train");
    if (kv.has("frac_val")) c.frac_val = kv.get_double("frac_val");
    if (kv.has("frac_test")) c.frac_test = kv.get_double("frac_test");
    if (kv.has("hist_window")) c.hist_window = kv.get_uint("hist_window");
    c.validate();
    return c;
}

config::KeyValues SynthConfig::to_kv() const {
    config::KeyValues kv;
    auto put = [&](const char* k, auto v) { kv.set(k, std::to_string(v)); };
    put("num_users", num_users);
    put("num_items", num_items);
    put("num_categories", num_categories);
    put("m", m);
    put("n_max", n_max);
    put("sessions_per_user", sessions_per_user);
    put("theta_hist", theta_hist);
    put("theta_div", theta_div);
    put("base_logit", base_logit);
    put("seed", seed);
    put("frac_train", frac_train);
    put("frac_val", frac_val);
    put("frac_test", frac_test);
    put("hist_window", hist_window);
    return kv;
}

Catalog build_catalog(const SynthConfig& cfg) {
    Catalog cat;
    cat.category.resize(cfg.num_items);
    cat.quality.resize(cfg.num_items);
    Rng rng(derive_seed(cfg.seed, kCatalogTag));
    for (std::size_t i = 0; i < cfg.num_items; ++i) {
        cat.category[i] = rng.uniform_int(0, cfg.num_categories - 1);
        cat.quality[i] = rng.normal();
    }
    return cat;
}

std::optional<std::size_t> modal_category(const Catalog& catalog,
                                          const std::vector<std::size_t>& clicked_items,
                                          std::size_t window) {
    if (clicked_items.empty() || window == 0) return std::nullopt;
    const std::size_t start =
        clicked_items.size() > window ? clicked_items.size() - window : 0;
    std::vector<std::size_t> counts;
    for (std::size_t i = start; i < clicked_items.size(); ++i) {
        const std::size_t c = catalog.category[clicked_items[i]];
        if (c >= counts.size()) counts.resize(c + 1, 0);
        ++counts[c];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) best = c;  // ties keep the smaller id
    }
    return best;
}

double planted_logit(const SynthConfig& cfg, const Catalog& catalog, std::size_t item,
                     std::optional<std::size_t> modal,
                     std::size_t same_category_before) {
    double logit = cfg.base_logit + catalog.quality[item];
    if (modal && catalog.category[item] == *modal) logit += cfg.theta_hist;
    logit -= cfg.theta_div * static_cast<double>(same_category_before);
    return logit;
}

embedding::FeatureSchema synth_schema(const SynthConfig& cfg, std::size_t embed_dim) {
    embedding::FeatureSchema schema;
    schema.user_fields = {{"segment", kUserSegments, embed_dim}};
    schema.item_fields = {{"item_id", cfg.num_items, embed_dim},
                          {"category", cfg.num_categories, embed_dim}};
    return schema;
}

std::vector<GeneratedSession> simulate(const SynthConfig& cfg) {
    cfg.validate();
    const Catalog catalog = build_catalog(cfg);
    const std::size_t window = cfg.effective_window();

    std::vector<GeneratedSession> out;
    out.reserve(cfg.num_users * cfg.sessions_per_user);
    std::vector<std::size_t> pool(cfg.num_items);

    for (std::size_t u = 0; u < cfg.num_users; ++u) {
        Rng rng(derive_seed(cfg.seed, kUserTag, u));
        std::vector<std::size_t> clicked;  // full click history, oldest first

        for (std::size_t s = 0; s < cfg.sessions_per_user; ++s) {
            // Sample m distinct items via a partial Fisher-Yates pass.
            for (std::size_t i = 0; i < cfg.num_items; ++i) pool[i] = i;
            for (std::size_t j = 0; j < cfg.m; ++j) {
                const std::size_t pick = j + rng.uniform_int(0, cfg.num_items - 1 - j);
                std::swap(pool[j], pool[pick]);
            }

            GeneratedSession gs;
            gs.session_index = s;
            gs.record.user_id = u;
            gs.record.user_values = {user_segment(cfg, u) + 1};

            const std::size_t keep = std::min(clicked.size(), cfg.n_max);
            for (std::size_t i = clicked.size() - keep; i < clicked.size(); ++i) {
                const std::size_t item = clicked[i];
                gs.record.history.push_back({item + 1, catalog.category[item] + 1});
            }

            const auto modal = modal_category(catalog, clicked, window);
            std::vector<std::size_t> cat_seen(cfg.num_categories, 0);
            for (std::size_t j = 0; j < cfg.m; ++j) {
                const std::size_t item = pool[j];
                const std::size_t cat = catalog.category[item];
                const double p =
                    sigmoid(planted_logit(cfg, catalog, item, modal, cat_seen[cat]));
                ++cat_seen[cat];
                const int label = rng.bernoulli(p) ? 1 : 0;
                gs.record.candidates.push_back({item + 1, cat + 1});
                gs.record.labels.push_back(label);
                gs.click_probs.push_back(p);
            }
            for (std::size_t j = 0; j < cfg.m; ++j) {
                if (gs.record.labels[j]) clicked.push_back(pool[j]);
            }
            out.push_back(std::move(gs));
        }
    }
    return out;
}

namespace {

// Largest-remainder split of one user's session count.
std::array<std::size_t, 3> split_counts(std::size_t total, const SynthConfig& cfg) {
    const double fr[3] = {cfg.frac_train, cfg.frac_val, cfg.frac_test};
    std::array<std::size_t, 3> counts{};
    double rem[3];
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = fr[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(exact);
        rem[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    while (assigned < total) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (rem[i] > rem[best]) best = i;
        }
        ++counts[best];
        rem[best] = -1.0;
        ++assigned;
    }
    for (int i = 0; i < 3; ++i) {
        if (fr[i] > 0.0 && counts[i] == 0) {
            throw std::invalid_argument("synth config: impossible split for " +
                                        std::to_string(total) + " sessions per user");
        }
    }
    return counts;
}

std::string join_fields(const std::vector<std::size_t>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(values[i]);
    }
    return s;
}

}  // namespace

void generate(const SynthConfig& cfg, const std::string& out_dir) {
    const auto sessions = simulate(cfg);
    const auto counts = split_counts(cfg.sessions_per_user, cfg);

    std::vector<SessionRecord> splits[3];
    for (const auto& gs : sessions) {
        // Chronological per user: earliest sessions train, latest test.
        int slot = 0;
        if (gs.session_index >= counts[0] + counts[1]) {
            slot = 2;
        } else if (gs.session_index >= counts[0]) {
            slot = 1;
        }
        splits[slot].push_back(gs.record);
    }

    std::filesystem::create_directories(out_dir);
    save_schema(out_dir + "/schema.txt", synth_schema(cfg, 8));
    {
        std::ofstream cfg_out(out_dir + "/gen-config.txt", std::ios::binary);
        cfg_out << cfg.to_kv().to_text();
    }
    const char* names[3] = {"train.tsv", "val.tsv", "test.tsv"};
    for (int i = 0; i < 3; ++i) {
        save_sessions(out_dir + "/" + names[i], splits[i]);
    }
}

void save_sessions(const std::string& path, const std::vector<SessionRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_sessions: cannot open '" + path + "'");
    out << kSessionsHeader << "\n";
    for (const auto& r : records) {
        out << r.user_id << '\t' << join_fields(r.user_values) << '\t';
        for (std::size_t i = 0; i < r.history.size(); ++i) {
            if (i) out << ';';
            out << join_fields(r.history[i]);
        }
        out << '\t';
        for (std::size_t i = 0; i < r.candidates.size(); ++i) {
            if (i) out << ';';
            out << join_fields(r.candidates[i]) << ':' << r.labels[i];
        }
        out << '\n';
    }
}

namespace {

std::vector<std::size_t> parse_fields(const std::string& csv, const std::string& where) {
    std::vector<std::size_t> out;
    std::istringstream is(csv);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stoull(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("junk");
        } catch (const std::logic_error&) {
            throw std::runtime_error(where + ": bad field index '" + tok + "'");
        }
    }
    if (out.empty()) throw std::runtime_error(where + ": empty field group");
    return out;
}

void check_indices(const std::vector<std::size_t>& values,
                   const std::vector<embedding::FieldSpec>& fields,
                   const std::string& where) {
    if (values.size() != fields.size()) {
        throw std::runtime_error(where + ": got " + std::to_string(values.size()) +
                                 " indices, schema has " + std::to_string(fields.size()) +
                                 " fields");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] > fields[i].cardinality) {
            throw std::runtime_error(where + ": index " + std::to_string(values[i]) +
                                     " exceeds cardinality " +
                                     std::to_string(fields[i].cardinality) + " of field '" +
                                     fields[i].name + "'");
        }
    }
}

}  // namespace

std::vector<SessionRecord> load_sessions(const std::string& path,
                                         const embedding::FeatureSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_sessions: cannot open '" + path + "'");

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": empty file, expected '" +
                                 std::string(kSessionsHeader) + "' header");
    }
    ++line_no;
    if (line != kSessionsHeader) {
        throw std::runtime_error(path + ":1: bad header, expected '" +
                                 std::string(kSessionsHeader) + "'");
    }

    std::vector<SessionRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);

        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            if (tab == std::string::npos) {
                cols.push_back(line.substr(start));
                break;
            }
            cols.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (cols.size() != 4) {
            throw std::runtime_error(where + ": expected 4 tab-separated columns, got " +
                                     std::to_string(cols.size()));
        }

        SessionRecord r;
        try {
            std::size_t pos = 0;
            r.user_id = std::stoull(cols[0], &pos);
            if (pos != cols[0].size()) throw std::invalid_argument("junk");
        } catch (const std::logic_error&) {
            throw std::runtime_error(where + ": bad user id '" + cols[0] + "'");
        }
        r.user_values = parse_fields(cols[1], where);
        check_indices(r.user_values, schema.user_fields, where);

        if (!cols[2].empty()) {
            std::istringstream hs(cols[2]);
            std::string group;
            while (std::getline(hs, group, ';')) {
                auto values = parse_fields(group, where);
                check_indices(values, schema.item_fields, where);
                r.history.push_back(std::move(values));
            }
        }

        if (cols[3].empty()) throw std::runtime_error(where + ": session has no candidates");
        std::istringstream cs(cols[3]);
        std::string group;
        while (std::getline(cs, group, ';')) {
            const auto colon = group.rfind(':');
            if (colon == std::string::npos) {
                throw std::runtime_error(where + ": candidate group '" + group +
                                         "' missing ':label'");
            }
            auto values = parse_fields(group.substr(0, colon), where);
            check_indices(values, schema.item_fields, where);
            const std::string lab = group.substr(colon + 1);
            if (lab != "0" && lab != "1") {
                throw std::runtime_error(where + ": label '" + lab + "' not in {0,1}");
            }
            r.candidates.push_back(std::move(values));
            r.labels.push_back(lab == "1" ? 1 : 0);
        }
        records.push_back(std::move(r));
    }
    return records;
}

void save_schema(const std::string& path, const embedding::FeatureSchema& schema) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_schema: cannot open '" + path + "'");
    out << kSchemaHeader << "\n";
    for (const auto& f : schema.user_fields) {
        out << "user_field = " << f.name << ":" << f.cardinality << ":" << f.embed_dim << "\n";
    }
    for (const auto& f : schema.item_fields) {
        out << "item_field = " << f.name << ":" << f.cardinality << ":" << f.embed_dim << "\n";
    }
}

embedding::FeatureSchema load_schema(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_schema: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != kSchemaHeader) {
        throw std::runtime_error(path + ": bad or missing schema header");
    }
    embedding::FeatureSchema schema;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto c1 = value.find(':');
        const auto c2 = value.rfind(':');
        if (c1 == std::string::npos || c2 == c1) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected name:cardinality:embed_dim");
        }
        embedding::FieldSpec f;
        f.name = value.substr(0, c1);
        f.cardinality = std::stoull(value.substr(c1 + 1, c2 - c1 - 1));
        f.embed_dim = std::stoull(value.substr(c2 + 1));
        if (key == "user_field") {
            schema.user_fields.push_back(std::move(f));
        } else if (key == "item_field") {
            schema.item_fields.push_back(std::move(f));
        } else {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": unknown key '" + key + "'");
        }
    }
    schema.validate();
    return schema;
}

}  // namespace pear::data
