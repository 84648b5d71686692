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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankperturb/bm25.hpp"
#include "rankperturb/embeddings.hpp"
#include "rankperturb/text.hpp"

namespace rankperturb {

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based
};

/// True when (score_a, id_a) sorts strictly ahead of (score_b, id_b):
/// higher score first, equal scores by ascending doc id.
inline bool ranks_ahead(double score_a, std::string_view id_a, double score_b, std::string_view id_b) {
    return score_a != score_b ? score_a > score_b : id_a < id_b;
}

/// A reranked candidate list for one query.
class RankedList {
public:
    RankedList() = default;

    /// Sorts by the ranking tie rule and assigns ranks 1..n. Throws DataError
    /// on duplicate doc ids.
    static RankedList from_scores(std::string query_id, std::vector<ScoredDoc> scored);

    const std::string& query_id() const noexcept { return query_id_; }
    std::span<const RankedEntry> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const RankedEntry& operator[](std::size_t i) const { return entries_[i]; }

    /// 0-based index of the document, if present.
    std::optional<std::size_t> index_of(std::string_view doc_id) const;
    /// Throws DataError when the document is not in the list.
    const RankedEntry& entry(std::string_view doc_id) const;

private:
    std::string query_id_;
    std::vector<RankedEntry> entries_;
};

/// Settings of the pairwise hinge loss over a ranked list.
struct LossSpec {
    double beta = 1.0;
    /// Only the first `top_m` competitors (in rank order) enter the sum;
    /// 0 means the whole list.
    std::size_t top_m = 0;
};

struct RankerParams {
    double lambda_pos = 0.01;  // position-decay strength, w(i) = 1 / (1 + lambda_pos * i)
    double beta = 1.0;         // hinge margin
    std::size_t loss_top_m = 0;
    std::uint64_t seed = 0;  // reserved for rankers with randomized initialization

    LossSpec loss() const { return LossSpec{beta, loss_top_m}; }
    /// Throws ConfigError when lambda_pos < 0 or beta <= 0.
    void validate() const;
};

struct TokenGradient {
    std::size_t position = 0;
    Vector grad;              // d loss / d e_{t_i}
    double importance = 0.0;  // squared L2 norm of grad
};

/// Scores of the competitors of `doc_id` that enter the hinge loss.
/// Throws DataError when `doc_id` is not in the list.
std::vector<double> competitor_scores(const RankedList& list, std::string_view doc_id, std::size_t top_m);

/// sum over competitors of max(0, beta - target + competitor).
double hinge_loss(double target_score, std::span<const double> competitors, double beta);

/// Number of competitors whose hinge term is strictly positive.
std::size_t active_hinges(double target_score, std::span<const double> competitors, double beta);

/// A relevance scorer f(q, d). Gradient access is an optional capability.
class Ranker {
public:
    virtual ~Ranker() = default;

    virtual std::string name() const = 0;
    virtual double score(const Query& q, const Document& d) const = 0;

    virtual bool supports_gradients() const { return false; }
    /// Gradient of the hinge loss with respect to each token's input
    /// embedding. The default throws CapabilityError.
    virtual std::vector<TokenGradient> token_gradients(const Query& q, const Document& d,
                                                       const RankedList& list, const LossSpec& loss) const;
};

/// Scores every candidate and sorts with the ranking tie rule. Throws
/// ConfigError for an empty candidate set.
RankedList rerank(const Query& q, std::span<const Document> candidates, const Ranker& ranker);

/// Hinge loss of `d` against the competitor scores stored in `list`.
double hinge_loss(const Query& q, const Document& d, const RankedList& list, const Ranker& ranker,
                  const LossSpec& loss);

/// Per-position input embeddings of a document; empty for OOV positions.
struct EmbeddedDocument {
    std::vector<std::optional<Vector>> positions;
};

/// Soft term matching over the embedding space:
///
///   f(q, d) = sum_j max_i w(i) * cos(v(q_j), e_i),   w(i) = 1 / (1 + lambda_pos * i)
///
/// where j runs over in-vocabulary query tokens and i over in-vocabulary
/// document positions. Argmax ties go to the smallest position. A document
/// without in-vocabulary tokens scores 0. The ranker's input space is the
/// store itself, so gradients are taken with respect to store vectors
/// placed at each position.
class ReferenceRanker final : public Ranker {
public:
    /// `store` must outlive the ranker.
    ReferenceRanker(const EmbeddingStore& store, RankerParams params);

    std::string name() const override { return "reference"; }
    double score(const Query& q, const Document& d) const override;

    bool supports_gradients() const override { return true; }
    std::vector<TokenGradient> token_gradients(const Query& q, const Document& d, const RankedList& list,
                                               const LossSpec& loss) const override;

    const RankerParams& params() const noexcept { return params_; }
    const EmbeddingStore& store() const noexcept { return store_; }

    double position_weight(std::size_t i) const;

    EmbeddedDocument embed(const Document& d) const;
    double score(const Query& q, const EmbeddedDocument& d) const;
    /// Same as token_gradients, on explicit (possibly perturbed) embeddings.
    std::vector<TokenGradient> token_gradients(const Query& q, const EmbeddedDocument& d,
                                               std::string_view doc_id, const RankedList& list,
                                               const LossSpec& loss) const;

private:
    const EmbeddingStore& store_;
    RankerParams params_;
};

}  // namespace rankperturb
