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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankperturb/attacks.hpp"
#include "rankperturb/embeddings.hpp"
#include "rankperturb/ranker.hpp"

namespace rankperturb {

enum class AttackStatus { attempted, skipped };

/// Outcome of one strategy on one (query, document) pair.
struct AttackResult {
    std::string query_id;
    std::string doc_id;
    Strategy strategy = Strategy::one_word_start;
    AttackStatus status = AttackStatus::attempted;

    std::size_t orig_rank = 0;  // 0 when unknown (skipped before ranking)
    std::size_t new_rank = 0;
    double orig_score = 0.0;
    double new_score = 0.0;
    std::optional<Edit> edit;
    std::optional<double> ss;  // unset when a document has no in-vocabulary token
    double pp = 0.0;
    std::size_t doc_length = 0;
    std::string skip_reason;

    bool attempted() const noexcept { return status == AttackStatus::attempted; }
    /// Strict promotion: new_rank < orig_rank.
    bool success() const noexcept { return attempted() && new_rank < orig_rank; }
    long rank_boost() const noexcept {
        return static_cast<long>(orig_rank) - static_cast<long>(new_rank);
    }
    double score_boost() const noexcept { return new_score - orig_score; }

    bool operator==(const AttackResult&) const = default;
};

/// Rank `doc_id` would take if its score in `list` became `new_score`, with
/// every other entry fixed.
std::size_t rank_after_rescoring(const RankedList& list, std::string_view doc_id, double new_score);

/// 100 * edited tokens / |d|, counted on the original document. Throws
/// DomainError for an empty document.
double perturbation_pct(const Document& original, const Edit& edit);

/// Scores the perturbed document, drops it into `list` in place of the
/// original and reads its new rank. Throws DataError if `original` is not
/// in the list.
AttackResult evaluate_attack(const Query& q, const RankedList& list, const Document& original,
                             const Perturbation& perturbed, Strategy strategy, const Ranker& ranker,
                             const EmbeddingStore& store);

AttackResult skipped_result(std::string query_id, std::string doc_id, Strategy strategy,
                            std::size_t orig_rank, std::string reason);

struct IsrBucket {
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::size_t attempts = 0;
    std::size_t successes = 0;

    /// Success percentage; unset for an empty bucket.
    std::optional<double> rate() const;
};

/// The nine rank decades [11-20] ... [91-100], empty.
std::vector<IsrBucket> isr_buckets();

struct MetricsReport {
    std::string strategy;
    std::size_t attempted = 0;
    std::size_t successes = 0;
    std::size_t skipped = 0;
    double sr = 0.0;       // percent
    double ss_mean = 0.0;  // mean-word-embedding cosine ("SS-mwe")
    double pp_mean = 0.0;  // percent
    double rb_mean = 0.0;
    double sb_mean = 0.0;
    double rb_success_mean = 0.0;
    double sb_success_mean = 0.0;
    std::vector<IsrBucket> isr;
};

/// Folds results into one report. Means are over attempted results,
/// failures included; results outside ranks 11-100 count towards SR but not
/// towards any ISR bucket.
MetricsReport aggregate(std::span<const AttackResult> results, std::string label = {});

/// One report per strategy, in the given order.
std::vector<MetricsReport> aggregate_by_strategy(std::span<const AttackResult> results,
                                                 std::span<const Strategy> strategies);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double x);

nlohmann::ordered_json to_json(const AttackResult& r);
AttackResult attack_result_from_json(const nlohmann::json& j);

void write_results_jsonl(std::span<const AttackResult> results, const std::filesystem::path& path);
std::vector<AttackResult> read_results_jsonl(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const MetricsReport& r);
/// One row per strategy; columns sr, ss_mwe, pp, rb, sb, the success-only
/// means, and one column per ISR bucket.
void write_report_csv(std::span<const MetricsReport> reports, std::ostream& out);

}  // namespace rankperturb
