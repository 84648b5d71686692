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
#include <vector>

#include "rankperturb/embeddings.hpp"
#include "rankperturb/text.hpp"

namespace rankperturb {

/// Shape of a seeded synthetic collection: topical word clusters in the
/// embedding space, documents mixing two topics with filler words, and
/// short single-topic queries.
struct SyntheticSpec {
    std::size_t dim = 64;
    std::size_t topics = 40;
    std::size_t words_per_topic = 15;
    std::size_t filler_words = 800;
    std::size_t oov_words = 200;
    double topic_spread = 1.2;  // noise scale of a word around its topic direction

    std::size_t docs = 2000;
    std::size_t min_doc_len = 60;
    std::size_t max_doc_len = 140;
    double primary_rate = 0.30;
    double secondary_rate = 0.10;
    double stray_rate = 0.06;  // words from arbitrary topics
    double oov_rate = 0.03;

    std::size_t queries = 50;
    std::size_t min_query_len = 2;
    std::size_t max_query_len = 4;

    std::uint64_t seed = 13;
};

struct SyntheticCollection {
    EmbeddingStore store;
    std::vector<Document> corpus;
    std::vector<Query> queries;
};

SyntheticCollection make_synthetic(const SyntheticSpec& spec);

/// Writes corpus.tsv, queries.tsv and embeddings.txt into `dir`.
void write_synthetic(const SyntheticCollection& collection, const std::filesystem::path& dir);

}  // namespace rankperturb
