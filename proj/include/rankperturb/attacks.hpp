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

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "rankperturb/embeddings.hpp"
#include "rankperturb/ranker.hpp"
#include "rankperturb/text.hpp"

namespace rankperturb {

enum class Strategy { one_word_start, one_word_sim, one_word_best_grad };

inline constexpr std::array<Strategy, 3> kAllStrategies = {
    Strategy::one_word_start, Strategy::one_word_sim, Strategy::one_word_best_grad};

std::string_view to_string(Strategy s);
/// Throws ConfigError for an unknown name.
Strategy parse_strategy(std::string_view name);

enum class EditKind { insert, substitute };

std::string_view to_string(EditKind k);
EditKind parse_edit_kind(std::string_view name);

/// A single-token perturbation. For inserts `position` is the index the new
/// token occupies in the perturbed document.
struct Edit {
    EditKind kind = EditKind::insert;
    std::size_t position = 0;
    Token inserted;
    std::optional<Token> replaced;  // substitutions only

    bool operator==(const Edit&) const = default;
};

struct Perturbation {
    Document document;
    Edit edit;
};

/// Applies `edit` to `d`. Throws DomainError when the position is out of
/// range for the edit kind, or a substitution lacks `replaced`.
Document apply_edit(const Document& d, const Edit& edit);

/// Inserts the query center in front of the document.
Perturbation attack_start(const QueryCenter& center, const Document& d);

/// Replaces the in-vocabulary token most similar to the query center (and
/// different from it) by the center. Ties go to the earliest position.
/// Throws NoCandidateError when no token is eligible.
Perturbation attack_sim(const QueryCenter& center, const Document& d, const EmbeddingStore& store);

struct InsertionCandidate {
    std::size_t position = 0;  // the center is inserted before this token
    double score = 0.0;
};

/// Positions of the min(k, |d|) largest importances, ties by position.
std::vector<std::size_t> top_k_positions(std::span<const TokenGradient> gradients, std::size_t k);

/// The candidate insertions evaluated by attack_best_grad, in the order
/// their positions were selected. Throws CapabilityError when the ranker has
/// no gradients and DomainError for an empty document.
std::vector<InsertionCandidate> best_grad_candidates(const Query& q, const QueryCenter& center,
                                                     const Document& d, const RankedList& list,
                                                     const Ranker& ranker, const LossSpec& loss,
                                                     std::size_t k);

/// Gradient-guided insertion: rank token positions by the squared norm of
/// the hinge-loss gradient, try inserting the center before each of the top
/// k, and keep the highest-scoring result (ties by smallest position).
Perturbation attack_best_grad(const Query& q, const QueryCenter& center, const Document& d,
                              const RankedList& list, const Ranker& ranker, const LossSpec& loss,
                              std::size_t k);

}  // namespace rankperturb
