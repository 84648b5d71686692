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
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rankperturb/text.hpp"

namespace rankperturb {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
    /// Query terms dropped before scoring. Empty by default.
    std::unordered_set<std::string> stopwords;
};

struct Posting {
    std::uint32_t doc = 0;  // index into Bm25Index::doc_ids()
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

/// In-memory Okapi BM25 inverted index. Immutable once built.
class Bm25Index {
public:
    /// Throws ConfigError for an empty corpus or out-of-range parameters and
    /// DataError for duplicate document ids.
    static Bm25Index build(std::span<const Document> corpus, Bm25Params params = {});

    /// Top-k documents by BM25 score, descending, ties by ascending doc_id.
    /// Documents with a zero score are left out.
    std::vector<ScoredDoc> retrieve(const Query& q, std::size_t k) const;

    /// BM25 score of an indexed document; 0 when nothing matches.
    double score(const Query& q, std::string_view doc_id) const;

    const Bm25Params& params() const noexcept { return params_; }
    std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    double avg_doc_len() const noexcept { return avg_doc_len_; }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
    std::optional<std::uint32_t> doc_length(std::string_view doc_id) const;

    /// Empty span when the term is not in the corpus.
    std::span<const Posting> postings(std::string_view term) const;
    std::size_t term_count() const noexcept { return postings_.size(); }

    double idf(std::size_t df) const;

    /// Text serialization; terms are written in sorted order so equal
    /// indexes produce identical files.
    void save(const std::filesystem::path& path) const;
    static Bm25Index load(const std::filesystem::path& path);

private:
    double term_weight(std::uint32_t tf, std::uint32_t doc_len, std::size_t df) const;

    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::unordered_map<std::string, std::uint32_t> doc_rows_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avg_doc_len_ = 0.0;
};

}  // namespace rankperturb
