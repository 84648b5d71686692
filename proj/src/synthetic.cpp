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

#include "rankperturb/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>

#include "rankperturb/error.hpp"

namespace rankperturb {

namespace {

std::string numbered(char prefix, std::size_t i, std::size_t j = SIZE_MAX) {
    std::string s(1, prefix);
    s += std::to_string(i);
    if (j != SIZE_MAX) {
        s += 'w';
        s += std::to_string(j);
    }
    return s;
}

Vector random_direction(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    double n = 0.0;
    while (n == 0.0) {
        for (auto& x : v) {
            x = normal(rng);
        }
        n = l2_norm(v);
    }
    for (auto& x : v) {
        x /= n;
    }
    return v;
}

std::string join(const std::vector<Token>& tokens) {
    std::string s;
    for (const auto& t : tokens) {
        if (!s.empty()) {
            s += ' ';
        }
        s += t.surface;
    }
    return s;
}

}  // namespace

SyntheticCollection make_synthetic(const SyntheticSpec& spec) {
    if (spec.dim == 0 || spec.topics == 0 || spec.words_per_topic == 0 || spec.filler_words == 0 ||
        spec.docs == 0 || spec.min_doc_len == 0 || spec.min_doc_len > spec.max_doc_len ||
        spec.min_query_len == 0 || spec.min_query_len > spec.max_query_len ||
        spec.max_query_len > spec.words_per_topic) {
        throw ConfigError("inconsistent synthetic collection parameters");
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double noise = spec.topic_spread / std::sqrt(static_cast<double>(spec.dim));

    std::vector<std::pair<std::string, Vector>> entries;
    std::vector<std::vector<std::string>> topic_words(spec.topics);
    for (std::size_t t = 0; t < spec.topics; ++t) {
        const auto dir = random_direction(rng, spec.dim);
        for (std::size_t w = 0; w < spec.words_per_topic; ++w) {
            Vector v = dir;
            for (auto& x : v) {
                x += noise * normal(rng);
            }
            topic_words[t].push_back(numbered('t', t, w));
            entries.emplace_back(topic_words[t].back(), std::move(v));
        }
    }
    std::vector<std::string> filler;
    for (std::size_t f = 0; f < spec.filler_words; ++f) {
        filler.push_back(numbered('f', f));
        entries.emplace_back(filler.back(), random_direction(rng, spec.dim));
    }

    SyntheticCollection out;
    out.store = EmbeddingStore::from_entries(std::move(entries));

    std::uniform_int_distribution<std::size_t> pick_topic(0, spec.topics - 1);
    std::uniform_int_distribution<std::size_t> pick_word(0, spec.words_per_topic - 1);
    std::uniform_int_distribution<std::size_t> pick_filler(0, spec.filler_words - 1);
    std::uniform_int_distribution<std::size_t> pick_oov(0, spec.oov_words > 0 ? spec.oov_words - 1 : 0);
    std::uniform_int_distribution<std::size_t> pick_len(spec.min_doc_len, spec.max_doc_len);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto width = std::to_string(spec.docs).size();
    for (std::size_t d = 0; d < spec.docs; ++d) {
        const auto primary = pick_topic(rng);
        const auto secondary = pick_topic(rng);
        const auto len = pick_len(rng);
        std::vector<Token> tokens;
        tokens.reserve(len);
        for (std::size_t i = 0; i < len; ++i) {
            const double u = unit(rng);
            std::string w;
            if (u < spec.primary_rate) {
                w = topic_words[primary][pick_word(rng)];
            } else if (u < spec.primary_rate + spec.secondary_rate) {
                w = topic_words[secondary][pick_word(rng)];
            } else if (u < spec.primary_rate + spec.secondary_rate + spec.stray_rate) {
                w = topic_words[pick_topic(rng)][pick_word(rng)];
            } else if (spec.oov_words > 0 &&
                       u < spec.primary_rate + spec.secondary_rate + spec.stray_rate + spec.oov_rate) {
                w = numbered('x', pick_oov(rng));
            } else {
                w = filler[pick_filler(rng)];
            }
            tokens.push_back(Token::from_norm(std::move(w)));
        }
        auto id = std::to_string(d);
        id.insert(0, width - id.size(), '0');
        out.corpus.push_back(Document{"d" + id, std::move(tokens)});
    }

    std::uniform_int_distribution<std::size_t> pick_qlen(spec.min_query_len, spec.max_query_len);
    for (std::size_t qi = 0; qi < spec.queries; ++qi) {
        const auto topic = pick_topic(rng);
        const auto len = pick_qlen(rng);
        std::vector<std::size_t> chosen;
        while (chosen.size() < len) {
            const auto w = pick_word(rng);
            if (std::find(chosen.begin(), chosen.end(), w) == chosen.end()) {
                chosen.push_back(w);
            }
        }
        std::vector<Token> tokens;
        for (auto w : chosen) {
            tokens.push_back(Token::from_norm(topic_words[topic][w]));
        }
        out.queries.push_back(Query{"q" + std::to_string(qi), std::move(tokens)});
    }
    return out;
}

void write_synthetic(const SyntheticCollection& collection, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "corpus.tsv", std::ios::binary);
        for (const auto& d : collection.corpus) {
            out << d.id << '\t' << join(d.tokens) << '\n';
        }
    }
    {
        std::ofstream out(dir / "queries.tsv", std::ios::binary);
        for (const auto& q : collection.queries) {
            out << q.id << '\t' << join(q.tokens) << '\n';
        }
    }
    save_embeddings(collection.store, dir / "embeddings.txt");
}

}  // namespace rankperturb
