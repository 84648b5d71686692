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

#include "rankperturb/attacks.hpp"

#include <algorithm>
#include <numeric>

#include "rankperturb/error.hpp"

namespace rankperturb {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::one_word_start:
            return "one_word_start";
        case Strategy::one_word_sim:
            return "one_word_sim";
        case Strategy::one_word_best_grad:
            return "one_word_best_grad";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    for (auto s : kAllStrategies) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ConfigError("unknown strategy '" + std::string(name) +
                      "' (expected one_word_start, one_word_sim or one_word_best_grad)");
}

std::string_view to_string(EditKind k) {
    return k == EditKind::insert ? "insert" : "substitute";
}

EditKind parse_edit_kind(std::string_view name) {
    if (name == "insert") {
        return EditKind::insert;
    }
    if (name == "substitute") {
        return EditKind::substitute;
    }
    throw DataError("unknown edit kind '" + std::string(name) + "'");
}

Document apply_edit(const Document& d, const Edit& edit) {
    Document out = d;
    const auto pos = static_cast<std::ptrdiff_t>(edit.position);
    if (edit.kind == EditKind::insert) {
        if (edit.position > d.size()) {
            throw DomainError("insert position past the end of the document");
        }
        out.tokens.insert(out.tokens.begin() + pos, edit.inserted);
    } else {
        if (edit.position >= d.size() || !edit.replaced) {
            throw DomainError("invalid substitution");
        }
        out.tokens[edit.position] = edit.inserted;
    }
    return out;
}

Perturbation attack_start(const QueryCenter& center, const Document& d) {
    Edit edit{EditKind::insert, 0, Token::from_norm(center.token), std::nullopt};
    return Perturbation{apply_edit(d, edit), std::move(edit)};
}

Perturbation attack_sim(const QueryCenter& center, const Document& d, const EmbeddingStore& store) {
    const auto target = store.lookup(center.token);
    if (!target) {
        throw DomainError("query center '" + center.token + "' is not in the embedding store");
    }
    std::optional<std::size_t> best;
    double best_sim = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& t = d.tokens[i];
        if (t.norm == center.token) {
            continue;
        }
        const auto v = store.lookup(t.norm);
        if (!v) {
            continue;
        }
        const double sim = cosine(*v, *target);
        if (!best || sim > best_sim) {
            best = i;
            best_sim = sim;
        }
    }
    if (!best) {
        throw NoCandidateError("document '" + d.id + "' has no in-vocabulary token other than '" +
                               center.token + "'");
    }
    Edit edit{EditKind::substitute, *best, Token::from_norm(center.token), d.tokens[*best]};
    return Perturbation{apply_edit(d, edit), std::move(edit)};
}

std::vector<std::size_t> top_k_positions(std::span<const TokenGradient> gradients, std::size_t k) {
    std::vector<std::size_t> order(gradients.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto n = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (gradients[a].importance != gradients[b].importance) {
                              return gradients[a].importance > gradients[b].importance;
                          }
                          return gradients[a].position < gradients[b].position;
                      });
    order.resize(n);
    for (auto& i : order) {
        i = gradients[i].position;
    }
    return order;
}

std::vector<InsertionCandidate> best_grad_candidates(const Query& q, const QueryCenter& center,
                                                     const Document& d, const RankedList& list,
                                                     const Ranker& ranker, const LossSpec& loss,
                                                     std::size_t k) {
    if (!ranker.supports_gradients()) {
        throw CapabilityError("one_word_best_grad needs a ranker with token gradients; '" +
                              ranker.name() + "' has none");
    }
    if (d.tokens.empty()) {
        throw DomainError("one_word_best_grad on empty document '" + d.id + "'");
    }
    if (k == 0) {
        throw ConfigError("one_word_best_grad needs k >= 1");
    }
    const auto grads = ranker.token_gradients(q, d, list, loss);
    const auto positions = top_k_positions(grads, k);

    const auto inserted = Token::from_norm(center.token);
    std::vector<InsertionCandidate> out;
    out.reserve(positions.size());
    Document candidate = d;
    for (auto pos : positions) {
        candidate.tokens = d.tokens;
        candidate.tokens.insert(candidate.tokens.begin() + static_cast<std::ptrdiff_t>(pos), inserted);
        out.push_back(InsertionCandidate{pos, ranker.score(q, candidate)});
    }
    return out;
}

Perturbation attack_best_grad(const Query& q, const QueryCenter& center, const Document& d,
                              const RankedList& list, const Ranker& ranker, const LossSpec& loss,
                              std::size_t k) {
    const auto candidates = best_grad_candidates(q, center, d, list, ranker, loss, k);
    const auto best = std::min_element(candidates.begin(), candidates.end(),
                                       [](const InsertionCandidate& a, const InsertionCandidate& b) {
                                           if (a.score != b.score) {
                                               return a.score > b.score;
                                           }
                                           return a.position < b.position;
                                       });
    Edit edit{EditKind::insert, best->position, Token::from_norm(center.token), std::nullopt};
    return Perturbation{apply_edit(d, edit), std::move(edit)};
}

}  // namespace rankperturb
