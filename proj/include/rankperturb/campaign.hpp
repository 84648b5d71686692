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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rankperturb/attacks.hpp"
#include "rankperturb/bm25.hpp"
#include "rankperturb/embeddings.hpp"
#include "rankperturb/metrics.hpp"
#include "rankperturb/ranker.hpp"

namespace rankperturb {

struct CampaignConfig {
    std::filesystem::path corpus;
    std::filesystem::path queries;
    std::filesystem::path embeddings;
    std::filesystem::path index;      // optional prebuilt BM25 index
    std::filesystem::path stopwords;  // optional, one word per line
    std::filesystem::path output_dir = "out";
    std::optional<CorpusFormat> corpus_format;  // default: from extension

    std::vector<Strategy> strategies{kAllStrategies.begin(), kAllStrategies.end()};
    std::size_t topk = 100;
    std::size_t rank_lo = 11;
    std::size_t rank_hi = 100;
    std::size_t k = 20;
    double beta = 1.0;
    double lambda_pos = 0.01;
    double k1 = 0.9;
    double b = 0.4;
    std::size_t loss_top_m = 0;  // 0: the full list
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0: hardware concurrency

    /// Throws ConfigError unless 1 <= rank_lo <= rank_hi <= topk, k >= 1,
    /// and the ranker and BM25 parameters are in range.
    void validate() const;

    RankerParams ranker_params() const;
    Bm25Params bm25_params() const;
    LossSpec loss() const { return ranker_params().loss(); }
};

/// Sets one option by its config-file key (`topk`, `lambda_pos`,
/// `strategies`, ...). Dashes and underscores are interchangeable in keys.
/// Throws ConfigError for unknown keys or unparsable values.
void apply_setting(CampaignConfig& config, std::string_view key, std::string_view value);

/// Reads `key = value` lines; `#` starts a comment, values may be quoted,
/// and lists may be written `a, b` or `["a", "b"]`. Relative paths are
/// resolved against the file's directory.
void apply_config_file(CampaignConfig& config, const std::filesystem::path& path);

struct QuerySummary {
    std::string query_id;
    std::size_t candidates = 0;  // BM25 list length (may be < topk)
    std::string center;          // empty when the query has no center
    double center_similarity = 0.0;
    std::size_t targets = 0;     // documents in the attacked rank range
};

struct CampaignRun {
    std::vector<AttackResult> results;  // sorted by (query_id, doc_id, strategy)
    std::vector<MetricsReport> reports;  // one per configured strategy
    std::vector<QuerySummary> queries;   // input order
};

/// Runs every configured strategy against every document ranked within
/// [rank_lo, rank_hi] after BM25 retrieval and reranking. Queries run
/// concurrently; the output order does not depend on scheduling.
CampaignRun run_campaign(const CampaignConfig& config, std::span<const Document> corpus,
                         std::span<const Query> queries, const EmbeddingStore& store,
                         const Bm25Index& index);

struct CampaignOutputs {
    std::filesystem::path results;     // results.jsonl
    std::filesystem::path report_json; // report.json
    std::filesystem::path report_csv;  // report.csv
    std::filesystem::path isr_csv;     // isr.csv
    std::filesystem::path queries_tsv; // queries.tsv
};

/// Loads the inputs named by `config`, runs the campaign and writes its
/// files into `config.output_dir`.
CampaignOutputs run_campaign(const CampaignConfig& config);

/// Writes report.json, report.csv and isr.csv into `dir`. `extra` entries
/// (such as the run configuration) are added to report.json.
void write_reports(std::span<const MetricsReport> reports, const std::filesystem::path& dir,
                   const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

/// Reads a results file and aggregates it per strategy, in the canonical
/// strategy order, keeping only strategies that occur in the file.
std::vector<MetricsReport> report_from_results(const std::filesystem::path& results);

struct IsrRow {
    std::size_t interval_lo = 0;
    std::size_t interval_hi = 0;
    std::string strategy;
    std::optional<double> isr_pct;  // empty for a bucket without attempts
    std::size_t attempts = 0;

    bool operator==(const IsrRow&) const = default;
};

/// CSV `interval_lo,interval_hi,strategy,isr_pct,attempts`, one row per
/// bucket and strategy; empty buckets leave isr_pct blank.
void emit_isr_plotdata(std::span<const MetricsReport> reports, const std::filesystem::path& path);
std::vector<IsrRow> read_isr_plotdata(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const CampaignConfig& config);

}  // namespace rankperturb
