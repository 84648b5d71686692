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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rankperturb/text.hpp"

namespace rankperturb {

using Vector = std::vector<double>;

/// Immutable token -> vector map. Vectors are stored row-major in one flat
/// buffer together with their Euclidean norms.
class EmbeddingStore {
public:
    /// Validates every entry: equal dimensionality, finite, non-zero, no
    /// duplicate tokens. Throws DataError otherwise.
    static EmbeddingStore from_entries(std::vector<std::pair<std::string, Vector>> entries);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }

    const std::string& token(std::size_t row) const { return tokens_[row]; }
    std::span<const double> vector(std::size_t row) const {
        return {data_.data() + row * dim_, dim_};
    }
    double norm(std::size_t row) const { return norms_[row]; }

    std::optional<std::size_t> find(std::string_view norm) const;
    bool contains(std::string_view norm) const { return find(norm).has_value(); }
    std::optional<std::span<const double>> lookup(std::string_view norm) const;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> tokens_;
    std::vector<double> data_;
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> rows_;
};

/// Reads the counter-fitted text layout: `token v1 v2 ... vdim` per line.
/// The dimensionality comes from the first line.
EmbeddingStore load_embeddings(const std::filesystem::path& path);

/// Writes the same layout `load_embeddings` reads, rows in store order.
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Cosine similarity clamped to [-1, 1]. Throws DomainError on a length
/// mismatch or a zero-norm argument.
double cosine(std::span<const double> a, std::span<const double> b);

/// Mean of the vectors of the in-vocabulary tokens; empty when none is.
std::optional<Vector> centroid(const std::vector<Token>& tokens, const EmbeddingStore& store);

struct Neighbor {
    std::string token;
    double similarity = 0.0;
};

/// Exhaustive cosine scan. Ties go to the lexicographically smallest token.
Neighbor nearest_token(std::span<const double> v, const EmbeddingStore& store);

struct QueryCenter {
    std::string token;
    Vector centroid;
    double similarity = 0.0;
};

/// The vocabulary token nearest to the centroid of the query's
/// in-vocabulary tokens. Query terms themselves are eligible.
/// Throws NoCenterError when every query token is out of vocabulary.
QueryCenter query_center(const Query& q, const EmbeddingStore& store);

/// Cosine of the two documents' mean word vectors, clamped below at 0.
/// Throws DomainError when either document has no in-vocabulary token.
double document_similarity(const Document& original, const Document& perturbed,
                           const EmbeddingStore& store);

}  // namespace rankperturb
