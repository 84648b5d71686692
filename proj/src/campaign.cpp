/*
 * Copyright 2026 The rankperturb Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rankperturb/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "rankperturb/error.hpp"

namespace rankperturb {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string_view unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

std::string normalize_key(std::string_view key) {
    std::string k(trim(key));
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    value = unquote(value);
    T out{};
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || p != value.data() + value.size()) {
        throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
    }
    return out;
}

std::vector<Strategy> parse_strategy_list(std::string_view value) {
    value = trim(value);
    if (!value.empty() && value.front() == '[' && value.back() == ']') {
        value = value.substr(1, value.size() - 2);
    }
    std::vector<Strategy> out;
    while (!trim(value).empty()) {
        const auto comma = value.find(',');
        const auto item = unquote(value.substr(0, comma));
        if (!item.empty()) {
            const auto s = parse_strategy(item);
            if (std::find(out.begin(), out.end(), s) == out.end()) {
                out.push_back(s);
            }
        }
        if (comma == std::string_view::npos) {
            break;
        }
        value = value.substr(comma + 1);
    }
    if (out.empty()) {
        throw ConfigError("strategy list is empty");
    }
    return out;
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        for (auto& t : tokenize(line)) {
            out.insert(std::move(t.norm));
        }
    }
    return out;
}

struct QueryOutcome {
    QuerySummary summary;
    std::vector<AttackResult> results;
};

QueryOutcome attack_query(const CampaignConfig& config, const Query& q,
                          const std::unordered_map<std::string_view, const Document*>& docs,
                          const EmbeddingStore& store, const Bm25Index& index, const ReferenceRanker& ranker) {
    QueryOutcome out;
    out.summary.query_id = q.id;

    const auto hits = index.retrieve(q, config.topk);
    out.summary.candidates = hits.size();

    QueryCenter center;
    try {
        center = query_center(q, store);
    } catch (const NoCenterError&) {
        for (auto s : config.strategies) {
            out.results.push_back(skipped_result(q.id, "", s, 0, "no_center"));
        }
        return out;
    }
    out.summary.center = center.token;
    out.summary.center_similarity = center.similarity;
    if (hits.empty()) {
        return out;
    }

    std::vector<Document> candidates;
    candidates.reserve(hits.size());
    for (const auto& h : hits) {
        candidates.push_back(*docs.at(h.doc_id));
    }
    const auto list = rerank(q, candidates, ranker);
    const auto loss = config.loss();

    for (const auto& entry : list.entries()) {
        if (entry.rank < config.rank_lo || entry.rank > config.rank_hi) {
            continue;
        }
        ++out.summary.targets;
        const Document& d = *docs.at(entry.doc_id);
        for (auto s : config.strategies) {
            try {
                Perturbation p;
                switch (s) {
                    case Strategy::one_word_start:
                        p = attack_start(center, d);
                        break;
                    case Strategy::one_word_sim:
                        p = attack_sim(center, d, store);
                        break;
                    case Strategy::one_word_best_grad:
                        p = attack_best_grad(q, center, d, list, ranker, loss, config.k);
                        break;
                }
                out.results.push_back(evaluate_attack(q, list, d, p, s, ranker, store));
            } catch (const NoCandidateError&) {
                out.results.push_back(skipped_result(q.id, d.id, s, entry.rank, "no_candidate"));
            } catch (const DomainError&) {
                out.results.push_back(skipped_result(q.id, d.id, s, entry.rank, "degenerate_input"));
            }
        }
    }
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    return out;
}

}  // namespace

// --- configuration ----------------------------------------------------------

void CampaignConfig::validate() const {
    if (strategies.empty()) {
        throw ConfigError("no attack strategy configured");
    }
    if (topk == 0) {
        throw ConfigError("topk must be at least 1");
    }
    if (!(1 <= rank_lo && rank_lo <= rank_hi && rank_hi <= topk)) {
        throw ConfigError("target rank range must satisfy 1 <= lo <= hi <= topk (got [" +
                          std::to_string(rank_lo) + ", " + std::to_string(rank_hi) + "], topk " +
                          std::to_string(topk) + ")");
    }
    if (k == 0) {
        throw ConfigError("k must be at least 1");
    }
    ranker_params().validate();
    if (!(k1 > 0.0) || !(b >= 0.0 && b <= 1.0)) {
        throw ConfigError("BM25 parameters out of range (k1 > 0, 0 <= b <= 1)");
    }
}

RankerParams CampaignConfig::ranker_params() const {
    return RankerParams{lambda_pos, beta, loss_top_m, seed};
}

Bm25Params CampaignConfig::bm25_params() const {
    Bm25Params p;
    p.k1 = k1;
    p.b = b;
    if (!stopwords.empty()) {
        p.stopwords = load_stopwords(stopwords);
    }
    return p;
}

void apply_setting(CampaignConfig& c, std::string_view raw_key, std::string_view value) {
    const auto key = normalize_key(raw_key);
    if (key == "corpus") {
        c.corpus = std::string(unquote(value));
    } else if (key == "queries") {
        c.queries = std::string(unquote(value));
    } else if (key == "embeddings") {
        c.embeddings = std::string(unquote(value));
    } else if (key == "index") {
        c.index = std::string(unquote(value));
    } else if (key == "stopwords") {
        c.stopwords = std::string(unquote(value));
    } else if (key == "output" || key == "output_dir" || key == "out") {
        c.output_dir = std::string(unquote(value));
    } else if (key == "format" || key == "corpus_format") {
        c.corpus_format = parse_corpus_format(unquote(value));
    } else if (key == "strategies" || key == "strategy") {
        c.strategies = parse_strategy_list(value);
    } else if (key == "topk") {
        c.topk = parse_number<std::size_t>(key, value);
    } else if (key == "lo" || key == "rank_lo") {
        c.rank_lo = parse_number<std::size_t>(key, value);
    } else if (key == "hi" || key == "rank_hi") {
        c.rank_hi = parse_number<std::size_t>(key, value);
    } else if (key == "k") {
        c.k = parse_number<std::size_t>(key, value);
    } else if (key == "beta") {
        c.beta = parse_number<double>(key, value);
    } else if (key == "lambda_pos") {
        c.lambda_pos = parse_number<double>(key, value);
    } else if (key == "k1") {
        c.k1 = parse_number<double>(key, value);
    } else if (key == "b") {
        c.b = parse_number<double>(key, value);
    } else if (key == "loss_top_m") {
        c.loss_top_m = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
        c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "threads") {
        c.threads = parse_number<std::size_t>(key, value);
    } else {
        throw ConfigError("unknown configuration key '" + std::string(raw_key) + "'");
    }
}

void apply_config_file(CampaignConfig& c, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    const auto base = path.parent_path();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        // A '#' inside a quoted value is kept.
        bool quoted = false;
        for (std::size_t i = 0; i < view.size(); ++i) {
            if (view[i] == '"') {
                quoted = !quoted;
            } else if (view[i] == '#' && !quoted) {
                view = view.substr(0, i);
                break;
            }
        }
        view = trim(view);
        if (view.empty() || view.front() == '[') {
            continue;  // blank, comment, or TOML table header
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = normalize_key(view.substr(0, eq));
        try {
            apply_setting(c, key, view.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        // Relative paths are relative to the config file.
        if (key == "corpus") {
            c.corpus = base / c.corpus;
        } else if (key == "queries") {
            c.queries = base / c.queries;
        } else if (key == "embeddings") {
            c.embeddings = base / c.embeddings;
        } else if (key == "index") {
            c.index = base / c.index;
        } else if (key == "stopwords") {
            c.stopwords = base / c.stopwords;
        } else if (key == "output" || key == "output_dir" || key == "out") {
            c.output_dir = base / c.output_dir;
        }
    }
}

nlohmann::ordered_json to_json(const CampaignConfig& c) {
    nlohmann::ordered_json j;
    auto names = nlohmann::ordered_json::array();
    for (auto s : c.strategies) {
        names.push_back(std::string(to_string(s)));
    }
    j["strategies"] = std::move(names);
    j["topk"] = c.topk;
    j["rank_lo"] = c.rank_lo;
    j["rank_hi"] = c.rank_hi;
    j["k"] = c.k;
    j["beta"] = c.beta;
    j["lambda_pos"] = c.lambda_pos;
    j["k1"] = c.k1;
    j["b"] = c.b;
    j["loss_top_m"] = c.loss_top_m;
    j["seed"] = c.seed;
    return j;
}

// --- execution --------------------------------------------------------------

CampaignRun run_campaign(const CampaignConfig& config, std::span<const Document> corpus,
                         std::span<const Query> queries, const EmbeddingStore& store,
                         const Bm25Index& index) {
    config.validate();
    std::unordered_map<std::string_view, const Document*> docs;
    docs.reserve(corpus.size());
    for (const auto& d : corpus) {
        docs.emplace(d.id, &d);
    }
    const ReferenceRanker ranker(store, config.ranker_params());

    std::vector<QueryOutcome> outcomes(queries.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (auto i = next++; i < queries.size(); i = next++) {
            try {
                outcomes[i] = attack_query(config, queries[i], docs, store, index, ranker);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    auto nthreads = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<std::size_t>(nthreads, std::max<std::size_t>(queries.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < nthreads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }

    CampaignRun run;
    for (auto& o : outcomes) {
        run.queries.push_back(std::move(o.summary));
        std::move(o.results.begin(), o.results.end(), std::back_inserter(run.results));
    }
    std::sort(run.results.begin(), run.results.end(), [](const AttackResult& a, const AttackResult& b) {
        return std::tie(a.query_id, a.doc_id, a.strategy) < std::tie(b.query_id, b.doc_id, b.strategy);
    });
    run.reports = aggregate_by_strategy(run.results, config.strategies);
    return run;
}

CampaignOutputs run_campaign(const CampaignConfig& config) {
    config.validate();
    if (config.corpus.empty() || config.queries.empty() || config.embeddings.empty()) {
        throw ConfigError("corpus, queries and embeddings paths are required");
    }
    const auto format = config.corpus_format.value_or(corpus_format_for(config.corpus));
    const auto corpus = load_corpus(config.corpus, format);
    const auto queries = load_queries(config.queries);
    const auto store = load_embeddings(config.embeddings);
    if (store.empty()) {
        throw DataError(config.embeddings.string() + ": no embeddings");
    }
    auto params = config.bm25_params();
    Bm25Index index = config.index.empty() ? Bm25Index::build(corpus, params) : Bm25Index::load(config.index);
    if (!config.index.empty()) {
        if (index.doc_count() != corpus.size()) {
            throw DataError(config.index.string() + ": index does not match the corpus");
        }
    }

    const auto run = run_campaign(config, corpus, queries, store, index);

    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) {
        throw DataError("cannot create output directory " + config.output_dir.string());
    }
    CampaignOutputs out;
    out.results = config.output_dir / "results.jsonl";
    out.report_json = config.output_dir / "report.json";
    out.report_csv = config.output_dir / "report.csv";
    out.isr_csv = config.output_dir / "isr.csv";
    out.queries_tsv = config.output_dir / "queries.tsv";

    write_results_jsonl(run.results, out.results);
    nlohmann::ordered_json extra;
    extra["config"] = to_json(config);
    extra["queries"] = run.queries.size();
    write_reports(run.reports, config.output_dir, extra);

    auto qout = open_output(out.queries_tsv);
    qout << "query_id\tcandidates\ttargets\tcenter\tcenter_similarity\n";
    for (const auto& q : run.queries) {
        qout << q.query_id << '\t' << q.candidates << '\t' << q.targets << '\t'
             << (q.center.empty() ? "-" : q.center) << '\t'
             << (q.center.empty() ? std::string("-") : format_double(q.center_similarity)) << '\n';
    }
    return out;
}

// --- reports ----------------------------------------------------------------

void write_reports(std::span<const MetricsReport> reports, const std::filesystem::path& dir,
                   const nlohmann::ordered_json& extra) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    nlohmann::ordered_json j = extra.is_object() ? extra : nlohmann::ordered_json::object();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        arr.push_back(to_json(r));
    }
    j["strategies"] = std::move(arr);
    {
        auto out = open_output(dir / "report.json");
        out << j.dump(2) << '\n';
    }
    {
        auto out = open_output(dir / "report.csv");
        write_report_csv(reports, out);
    }
    emit_isr_plotdata(reports, dir / "isr.csv");
}

std::vector<MetricsReport> report_from_results(const std::filesystem::path& results) {
    const auto rows = read_results_jsonl(results);
    std::vector<Strategy> present;
    for (auto s : kAllStrategies) {
        if (std::any_of(rows.begin(), rows.end(), [&](const AttackResult& r) { return r.strategy == s; })) {
            present.push_back(s);
        }
    }
    return aggregate_by_strategy(rows, present);
}

void emit_isr_plotdata(std::span<const MetricsReport> reports, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << "interval_lo,interval_hi,strategy,isr_pct,attempts\n";
    for (const auto& r : reports) {
        for (const auto& b : r.isr) {
            out << b.lo << ',' << b.hi << ',' << r.strategy << ',';
            if (auto rate = b.rate()) {
                out << format_double(*rate);
            }
            out << ',' << b.attempts << '\n';
        }
    }
    if (!out) {
        throw DataError("failed writing " + path.string());
    }
}

std::vector<IsrRow> read_isr_plotdata(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "interval_lo,interval_hi,strategy,isr_pct,attempts") {
        throw DataError(path.string() + ": unexpected ISR header");
    }
    std::vector<IsrRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        if (cells.size() != 5) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
        }
        try {
            IsrRow r;
            r.interval_lo = parse_number<std::size_t>("interval_lo", cells[0]);
            r.interval_hi = parse_number<std::size_t>("interval_hi", cells[1]);
            r.strategy = cells[2];
            if (!cells[3].empty()) {
                r.isr_pct = parse_number<double>("isr_pct", cells[3]);
            }
            r.attempts = parse_number<std::size_t>("attempts", cells[4]);
            rows.push_back(std::move(r));
        } catch (const ConfigError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace rankperturb
