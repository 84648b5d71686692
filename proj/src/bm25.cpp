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

#include "rankperturb/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rankperturb/error.hpp"

namespace rankperturb {

namespace {

constexpr std::string_view kIndexMagic = "rankperturb-bm25 1";

bool by_score_then_id(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

void check_params(const Bm25Params& p) {
    if (!(p.k1 > 0.0) || !std::isfinite(p.k1)) {
        throw ConfigError("BM25 k1 must be positive");
    }
    if (!(p.b >= 0.0 && p.b <= 1.0)) {
        throw ConfigError("BM25 b must lie in [0, 1]");
    }
}

}  // namespace

Bm25Index Bm25Index::build(std::span<const Document> corpus, Bm25Params params) {
    if (corpus.empty()) {
        throw ConfigError("cannot build a BM25 index over an empty corpus");
    }
    check_params(params);

    Bm25Index index;
    index.params_ = std::move(params);
    index.doc_ids_.reserve(corpus.size());
    index.doc_lengths_.reserve(corpus.size());

    std::uint64_t total_len = 0;
    for (const auto& doc : corpus) {
        const auto row = static_cast<std::uint32_t>(index.doc_ids_.size());
        if (!index.doc_rows_.emplace(doc.id, row).second) {
            throw DataError("duplicate doc_id '" + doc.id + "'");
        }
        index.doc_ids_.push_back(doc.id);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(doc.size()));
        total_len += doc.size();

        std::map<std::string_view, std::uint32_t> tf;
        for (const auto& t : doc.tokens) {
            ++tf[t.norm];
        }
        for (const auto& [term, count] : tf) {
            index.postings_[std::string(term)].push_back(Posting{row, count});
        }
    }
    index.avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(corpus.size());
    return index;
}

double Bm25Index::idf(std::size_t df) const {
    const double n = static_cast<double>(doc_count());
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double Bm25Index::term_weight(std::uint32_t tf, std::uint32_t doc_len, std::size_t df) const {
    const double f = tf;
    const double len_norm = avg_doc_len_ > 0.0 ? doc_len / avg_doc_len_ : 0.0;
    const double denom = f + params_.k1 * (1.0 - params_.b + params_.b * len_norm);
    return idf(df) * f * (params_.k1 + 1.0) / denom;
}

std::vector<ScoredDoc> Bm25Index::retrieve(const Query& q, std::size_t k) const {
    if (k == 0) {
        throw ConfigError("retrieve needs k >= 1");
    }
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& t : q.tokens) {
        if (params_.stopwords.count(t.norm)) {
            continue;
        }
        const auto plist = postings(t.norm);
        for (const auto& p : plist) {
            acc[p.doc] += term_weight(p.tf, doc_lengths_[p.doc], plist.size());
        }
    }
    std::vector<ScoredDoc> hits;
    hits.reserve(acc.size());
    for (const auto& [row, s] : acc) {
        if (s > 0.0) {
            hits.push_back(ScoredDoc{doc_ids_[row], s});
        }
    }
    const auto n = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(),
                      by_score_then_id);
    hits.resize(n);
    return hits;
}

double Bm25Index::score(const Query& q, std::string_view doc_id) const {
    auto it = doc_rows_.find(std::string(doc_id));
    if (it == doc_rows_.end()) {
        return 0.0;
    }
    const auto row = it->second;
    double s = 0.0;
    for (const auto& t : q.tokens) {
        if (params_.stopwords.count(t.norm)) {
            continue;
        }
        const auto plist = postings(t.norm);
        auto p = std::lower_bound(plist.begin(), plist.end(), row,
                                  [](const Posting& a, std::uint32_t r) { return a.doc < r; });
        if (p != plist.end() && p->doc == row) {
            s += term_weight(p->tf, doc_lengths_[row], plist.size());
        }
    }
    return s;
}

std::optional<std::uint32_t> Bm25Index::doc_length(std::string_view doc_id) const {
    auto it = doc_rows_.find(std::string(doc_id));
    if (it == doc_rows_.end()) {
        return std::nullopt;
    }
    return doc_lengths_[it->second];
}

std::span<const Posting> Bm25Index::postings(std::string_view term) const {
    auto it = postings_.find(std::string(term));
    if (it == postings_.end()) {
        return {};
    }
    return it->second;
}

void Bm25Index::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.precision(17);
    out << kIndexMagic << '\n';
    out << "k1\t" << params_.k1 << "\nb\t" << params_.b << '\n';
    out << "docs\t" << doc_ids_.size() << '\n';
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        out << doc_ids_[i] << '\t' << doc_lengths_[i] << '\n';
    }
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) {
        terms.push_back(&term);
    }
    std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return *a < *b; });
    out << "terms\t" << terms.size() << '\n';
    for (const auto* term : terms) {
        out << *term;
        for (const auto& p : postings_.at(*term)) {
            out << '\t' << p.doc << ':' << p.tf;
        }
        out << '\n';
    }
    if (!out) {
        throw DataError("failed writing " + path.string());
    }
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    auto fail = [&](const std::string& what) {
        return DataError(path.string() + ": " + what);
    };
    std::string line;
    if (!std::getline(in, line) || line != kIndexMagic) {
        throw fail("not a BM25 index file");
    }
    auto read_field = [&](std::string_view key) {
        if (!std::getline(in, line)) {
            throw fail("truncated header");
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.substr(0, tab) != key) {
            throw fail("expected field '" + std::string(key) + "'");
        }
        return line.substr(tab + 1);
    };

    Bm25Index index;
    try {
        index.params_.k1 = std::stod(read_field("k1"));
        index.params_.b = std::stod(read_field("b"));
        const auto ndocs = std::stoull(read_field("docs"));
        std::uint64_t total_len = 0;
        for (std::uint64_t i = 0; i < ndocs; ++i) {
            if (!std::getline(in, line)) {
                throw fail("truncated document table");
            }
            const auto tab = line.rfind('\t');
            if (tab == std::string::npos) {
                throw fail("malformed document row");
            }
            auto id = line.substr(0, tab);
            const auto len = static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1)));
            index.doc_rows_.emplace(id, static_cast<std::uint32_t>(i));
            index.doc_ids_.push_back(std::move(id));
            index.doc_lengths_.push_back(len);
            total_len += len;
        }
        if (ndocs == 0) {
            throw fail("index has no documents");
        }
        index.avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(ndocs);
        const auto nterms = std::stoull(read_field("terms"));
        for (std::uint64_t i = 0; i < nterms; ++i) {
            if (!std::getline(in, line)) {
                throw fail("truncated postings");
            }
            std::istringstream row(line);
            std::string term;
            std::getline(row, term, '\t');
            auto& plist = index.postings_[term];
            std::string cell;
            while (std::getline(row, cell, '\t')) {
                const auto colon = cell.find(':');
                if (colon == std::string::npos) {
                    throw fail("malformed posting for term '" + term + "'");
                }
                Posting p{static_cast<std::uint32_t>(std::stoul(cell.substr(0, colon))),
                          static_cast<std::uint32_t>(std::stoul(cell.substr(colon + 1)))};
                if (p.doc >= ndocs) {
                    throw fail("posting refers to unknown document");
                }
                plist.push_back(p);
            }
        }
    } catch (const std::logic_error&) {
        throw fail("malformed number");
    }
    check_params(index.params_);
    return index;
}

}  // namespace rankperturb
