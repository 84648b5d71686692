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

#include "rankperturb/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rankperturb/error.hpp"

namespace rankperturb {

namespace {

struct VectorView {
    const double* data = nullptr;  // null for out-of-vocabulary positions
    double norm = 0.0;
};

struct TermMatch {
    std::size_t position = 0;
    double cosine = 0.0;
    double weighted = 0.0;
    bool found = false;
};

std::vector<VectorView> query_views(const Query& q, const EmbeddingStore& store) {
    std::vector<VectorView> out;
    for (const auto& t : q.tokens) {
        if (auto row = store.find(t.norm)) {
            out.push_back({store.vector(*row).data(), store.norm(*row)});
        }
    }
    if (out.empty()) {
        throw DomainError("query '" + q.id + "' has no in-vocabulary token");
    }
    return out;
}

std::vector<VectorView> document_views(const Document& d, const EmbeddingStore& store) {
    std::vector<VectorView> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (auto row = store.find(d.tokens[i].norm)) {
            out[i] = {store.vector(*row).data(), store.norm(*row)};
        }
    }
    return out;
}

std::vector<VectorView> document_views(const EmbeddedDocument& d) {
    std::vector<VectorView> out(d.positions.size());
    for (std::size_t i = 0; i < d.positions.size(); ++i) {
        if (const auto& v = d.positions[i]) {
            const double n = l2_norm(*v);
            if (n > 0.0) {
                out[i] = {v->data(), n};
            }
        }
    }
    return out;
}

// Must match cosine() in embeddings.cpp operation for operation.
double view_cosine(const VectorView& a, const VectorView& b, std::size_t dim) {
    const double d = dot({a.data, dim}, {b.data, dim});
    return std::clamp(d / (a.norm * b.norm), -1.0, 1.0);
}

}  // namespace

// --- RankedList -------------------------------------------------------------

RankedList RankedList::from_scores(std::string query_id, std::vector<ScoredDoc> scored) {
    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        return ranks_ahead(a.score, a.doc_id, b.score, b.doc_id);
    });
    RankedList list;
    list.query_id_ = std::move(query_id);
    list.entries_.reserve(scored.size());
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (!seen.insert(scored[i].doc_id).second) {
            throw DataError("duplicate doc_id '" + scored[i].doc_id + "' in ranked list");
        }
        list.entries_.push_back(RankedEntry{std::move(scored[i].doc_id), scored[i].score, i + 1});
    }
    return list;
}

std::optional<std::size_t> RankedList::index_of(std::string_view doc_id) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].doc_id == doc_id) {
            return i;
        }
    }
    return std::nullopt;
}

const RankedEntry& RankedList::entry(std::string_view doc_id) const {
    if (auto i = index_of(doc_id)) {
        return entries_[*i];
    }
    throw DataError("document '" + std::string(doc_id) + "' is not in the ranked list for query '" +
                    query_id_ + "'");
}

// --- Hinge loss -------------------------------------------------------------

void RankerParams::validate() const {
    if (!(lambda_pos >= 0.0) || !std::isfinite(lambda_pos)) {
        throw ConfigError("lambda_pos must be non-negative");
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw ConfigError("hinge margin beta must be positive");
    }
}

std::vector<double> competitor_scores(const RankedList& list, std::string_view doc_id, std::size_t top_m) {
    if (!list.index_of(doc_id)) {
        throw DataError("document '" + std::string(doc_id) + "' is not in the ranked list for query '" +
                        list.query_id() + "'");
    }
    std::vector<double> out;
    for (const auto& e : list.entries()) {
        if (top_m != 0 && out.size() == top_m) {
            break;
        }
        if (e.doc_id != doc_id) {
            out.push_back(e.score);
        }
    }
    return out;
}

double hinge_loss(double target_score, std::span<const double> competitors, double beta) {
    double loss = 0.0;
    for (double c : competitors) {
        loss += std::max(0.0, beta - target_score + c);
    }
    return loss;
}

std::size_t active_hinges(double target_score, std::span<const double> competitors, double beta) {
    return static_cast<std::size_t>(std::count_if(competitors.begin(), competitors.end(),
                                                  [&](double c) { return beta - target_score + c > 0.0; }));
}

double hinge_loss(const Query& q, const Document& d, const RankedList& list, const Ranker& ranker,
                  const LossSpec& loss) {
    const auto comp = competitor_scores(list, d.id, loss.top_m);
    return hinge_loss(ranker.score(q, d), comp, loss.beta);
}

// --- Ranker -----------------------------------------------------------------

std::vector<TokenGradient> Ranker::token_gradients(const Query&, const Document&, const RankedList&,
                                                   const LossSpec&) const {
    throw CapabilityError("ranker '" + name() + "' does not expose token gradients");
}

RankedList rerank(const Query& q, std::span<const Document> candidates, const Ranker& ranker) {
    if (candidates.empty()) {
        throw ConfigError("rerank needs at least one candidate");
    }
    std::vector<ScoredDoc> scored;
    scored.reserve(candidates.size());
    for (const auto& d : candidates) {
        scored.push_back(ScoredDoc{d.id, ranker.score(q, d)});
    }
    return RankedList::from_scores(q.id, std::move(scored));
}

// --- ReferenceRanker --------------------------------------------------------

namespace {

std::vector<TermMatch> match_terms(std::span<const VectorView> query, std::span<const VectorView> doc,
                                   std::size_t dim, const ReferenceRanker& ranker) {
    std::vector<TermMatch> out(query.size());
    for (std::size_t j = 0; j < query.size(); ++j) {
        auto& m = out[j];
        for (std::size_t i = 0; i < doc.size(); ++i) {
            if (doc[i].data == nullptr) {
                continue;
            }
            const double c = view_cosine(query[j], doc[i], dim);
            const double w = ranker.position_weight(i) * c;
            if (!m.found || w > m.weighted) {
                m = TermMatch{i, c, w, true};
            }
        }
    }
    return out;
}

double total(std::span<const TermMatch> matches) {
    double s = 0.0;
    for (const auto& m : matches) {
        if (m.found) {
            s += m.weighted;
        }
    }
    return s;
}

}  // namespace

ReferenceRanker::ReferenceRanker(const EmbeddingStore& store, RankerParams params)
    : store_(store), params_(params) {
    params_.validate();
}

double ReferenceRanker::position_weight(std::size_t i) const {
    return 1.0 / (1.0 + params_.lambda_pos * static_cast<double>(i));
}

EmbeddedDocument ReferenceRanker::embed(const Document& d) const {
    EmbeddedDocument out;
    out.positions.reserve(d.size());
    for (const auto& t : d.tokens) {
        if (auto v = store_.lookup(t.norm)) {
            out.positions.emplace_back(Vector(v->begin(), v->end()));
        } else {
            out.positions.emplace_back(std::nullopt);
        }
    }
    return out;
}

double ReferenceRanker::score(const Query& q, const Document& d) const {
    const auto qv = query_views(q, store_);
    const auto dv = document_views(d, store_);
    return total(match_terms(qv, dv, store_.dim(), *this));
}

double ReferenceRanker::score(const Query& q, const EmbeddedDocument& d) const {
    const auto qv = query_views(q, store_);
    const auto dv = document_views(d);
    return total(match_terms(qv, dv, store_.dim(), *this));
}

std::vector<TokenGradient> ReferenceRanker::token_gradients(const Query& q, const Document& d,
                                                            const RankedList& list,
                                                            const LossSpec& loss) const {
    return token_gradients(q, embed(d), d.id, list, loss);
}

std::vector<TokenGradient> ReferenceRanker::token_gradients(const Query& q, const EmbeddedDocument& d,
                                                            std::string_view doc_id,
                                                            const RankedList& list,
                                                            const LossSpec& loss) const {
    const auto comp = competitor_scores(list, doc_id, loss.top_m);
    const auto qv = query_views(q, store_);
    const auto dv = document_views(d);
    const auto dim = store_.dim();
    const auto matches = match_terms(qv, dv, dim, *this);
    const auto active = static_cast<double>(active_hinges(total(matches), comp, loss.beta));

    std::vector<TokenGradient> out(dv.size());
    for (std::size_t i = 0; i < dv.size(); ++i) {
        out[i].position = i;
        out[i].grad.assign(dim, 0.0);
    }
    if (active > 0.0) {
        // Only f(q, d) depends on d's embeddings:
        //   dL/de_i = -A * sum_{j: argmax_j = i} w(i) * dcos(u_j, e)/de
        //   dcos(u, e)/de = u / (|u||e|) - cos(u, e) * e / |e|^2
        for (std::size_t j = 0; j < qv.size(); ++j) {
            const auto& m = matches[j];
            if (!m.found) {
                continue;
            }
            const auto& u = qv[j];
            const auto& e = dv[m.position];
            const double c = dot({u.data, dim}, {e.data, dim}) / (u.norm * e.norm);
            const double scale = -active * position_weight(m.position);
            auto& g = out[m.position].grad;
            for (std::size_t k = 0; k < dim; ++k) {
                g[k] += scale * (u.data[k] / (u.norm * e.norm) - c * e.data[k] / (e.norm * e.norm));
            }
        }
    }
    for (auto& tg : out) {
        tg.importance = dot(tg.grad, tg.grad);
    }
    return out;
}

}  // namespace rankperturb
