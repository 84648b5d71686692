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

#include "rankperturb/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "rankperturb/error.hpp"

namespace rankperturb {

namespace {

double clamp_unit(double x) {
    return std::clamp(x, -1.0, 1.0);
}

// Cosine from a precomputed dot product and norms; every similarity in this
// file goes through here so that equal inputs give bit-identical results.
double cosine_from(double dot_product, double norm_a, double norm_b) {
    return clamp_unit(dot_product / (norm_a * norm_b));
}

std::optional<Vector> mean_vector(const std::vector<Token>& tokens, const EmbeddingStore& store) {
    Vector sum(store.dim(), 0.0);
    std::size_t n = 0;
    for (const auto& t : tokens) {
        if (auto v = store.lookup(t.norm)) {
            for (std::size_t c = 0; c < sum.size(); ++c) {
                sum[c] += (*v)[c];
            }
            ++n;
        }
    }
    if (n == 0) {
        return std::nullopt;
    }
    for (auto& x : sum) {
        x /= static_cast<double>(n);
    }
    return sum;
}

}  // namespace

EmbeddingStore EmbeddingStore::from_entries(std::vector<std::pair<std::string, Vector>> entries) {
    EmbeddingStore store;
    if (entries.empty()) {
        return store;
    }
    store.dim_ = entries.front().second.size();
    if (store.dim_ == 0) {
        throw DataError("embedding vectors must have at least one component");
    }
    store.tokens_.reserve(entries.size());
    store.data_.reserve(entries.size() * store.dim_);
    store.norms_.reserve(entries.size());
    for (auto& [token, vec] : entries) {
        if (vec.size() != store.dim_) {
            throw DataError("embedding for '" + token + "' has " + std::to_string(vec.size()) +
                            " components, expected " + std::to_string(store.dim_));
        }
        if (!std::all_of(vec.begin(), vec.end(), [](double x) { return std::isfinite(x); })) {
            throw DataError("embedding for '" + token + "' has a non-finite component");
        }
        const double n = l2_norm(vec);
        if (n == 0.0) {
            throw DataError("embedding for '" + token + "' is the zero vector");
        }
        if (!store.rows_.emplace(token, store.tokens_.size()).second) {
            throw DataError("duplicate embedding token '" + token + "'");
        }
        store.tokens_.push_back(std::move(token));
        store.data_.insert(store.data_.end(), vec.begin(), vec.end());
        store.norms_.push_back(n);
    }
    return store;
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view norm) const {
    // Heterogeneous lookup on unordered_map needs C++20 library support that
    // libstdc++ 11 lacks.
    auto it = rows_.find(std::string(norm));
    if (it == rows_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::span<const double>> EmbeddingStore::lookup(std::string_view norm) const {
    if (auto row = find(norm)) {
        return vector(*row);
    }
    return std::nullopt;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<std::pair<std::string, Vector>> entries;
    std::size_t dim = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const char* p = line.data();
        const char* end = p + line.size();
        auto skip_space = [&] {
            while (p < end && (*p == ' ' || *p == '\t')) {
                ++p;
            }
        };
        skip_space();
        if (p == end) {
            continue;
        }
        const char* tok_begin = p;
        while (p < end && *p != ' ' && *p != '\t') {
            ++p;
        }
        std::string token(tok_begin, p);
        Vector vec;
        vec.reserve(dim);
        for (skip_space(); p < end; skip_space()) {
            double x = 0.0;
            auto [next, ec] = std::from_chars(p, end, x);
            if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t')) {
                throw DataError(path.string() + ":" + std::to_string(lineno) +
                                ": malformed number in embedding for '" + token + "'");
            }
            vec.push_back(x);
            p = next;
        }
        if (dim == 0) {
            dim = vec.size();
            if (dim == 0) {
                throw DataError(path.string() + ":" + std::to_string(lineno) + ": no vector components");
            }
        } else if (vec.size() != dim) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(dim) + " components, found " + std::to_string(vec.size()));
        }
        entries.emplace_back(std::move(token), std::move(vec));
    }
    try {
        return EmbeddingStore::from_entries(std::move(entries));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    char buf[64];
    for (std::size_t row = 0; row < store.size(); ++row) {
        out << store.token(row);
        for (double x : store.vector(row)) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
            out << ' ' << std::string_view(buf, p - buf);
        }
        out << '\n';
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double l2_norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DomainError("cosine of vectors with different lengths");
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw DomainError("cosine of a zero vector");
    }
    return cosine_from(dot(a, b), na, nb);
}

std::optional<Vector> centroid(const std::vector<Token>& tokens, const EmbeddingStore& store) {
    return mean_vector(tokens, store);
}

Neighbor nearest_token(std::span<const double> v, const EmbeddingStore& store) {
    if (store.empty()) {
        throw DomainError("nearest-token search in an empty embedding store");
    }
    if (v.size() != store.dim()) {
        throw DomainError("query vector length does not match the store dimensionality");
    }
    const double nv = l2_norm(v);
    if (nv == 0.0) {
        throw DomainError("nearest-token search for the zero vector");
    }
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t row = 0; row < store.size(); ++row) {
        const double sim = cosine_from(dot(store.vector(row), v), store.norm(row), nv);
        if (sim > best_sim || (sim == best_sim && store.token(row) < store.token(best))) {
            best = row;
            best_sim = sim;
        }
    }
    return Neighbor{store.token(best), best_sim};
}

QueryCenter query_center(const Query& q, const EmbeddingStore& store) {
    auto c = centroid(q.tokens, store);
    if (!c) {
        throw NoCenterError("query '" + q.id + "' has no in-vocabulary token");
    }
    if (l2_norm(*c) == 0.0) {
        // Opposite vectors can cancel exactly; there is no direction to match.
        throw NoCenterError("query '" + q.id + "' has a zero centroid");
    }
    auto nn = nearest_token(*c, store);
    return QueryCenter{std::move(nn.token), std::move(*c), nn.similarity};
}

double document_similarity(const Document& original, const Document& perturbed,
                           const EmbeddingStore& store) {
    auto a = mean_vector(original.tokens, store);
    auto b = mean_vector(perturbed.tokens, store);
    if (!a || !b) {
        throw DomainError("document '" + (a ? perturbed.id : original.id) +
                          "' has no in-vocabulary token");
    }
    return std::max(0.0, cosine(*a, *b));
}

}  // namespace rankperturb
