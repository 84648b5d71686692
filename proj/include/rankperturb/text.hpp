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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rankperturb {

struct Token {
    std::string surface;  // fragment as it appeared in the input
    std::string norm;     // lowercased form used for matching

    /// A token whose surface and normalized form are both `norm`.
    static Token from_norm(std::string norm);

    bool operator==(const Token&) const = default;
};

struct Document {
    std::string id;
    std::vector<Token> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    bool operator==(const Document&) const = default;
};

struct Query {
    std::string id;
    std::vector<Token> tokens;

    bool operator==(const Query&) const = default;
};

enum class CorpusFormat { tsv, jsonl };

/// Lowercases ASCII letters and splits on every maximal run of
/// non-alphanumeric characters. Bytes >= 0x80 count as word characters so
/// that UTF-8 sequences are never split apart.
std::vector<Token> tokenize(std::string_view text);

/// Normalized forms joined by single spaces.
std::string join_norms(const std::vector<Token>& tokens);

Document make_document(std::string id, std::string_view text);
Query make_query(std::string id, std::string_view text);

/// Picks the format from the file extension: `.jsonl`/`.json` is JSONL,
/// everything else TSV.
CorpusFormat corpus_format_for(const std::filesystem::path& path);
CorpusFormat parse_corpus_format(std::string_view name);

/// TSV rows are `doc_id<TAB>text`; JSONL rows are objects with string
/// fields `id` and `contents`. Blank lines are skipped. Throws DataError
/// naming the line for malformed rows and naming the id for duplicates.
std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format);

/// `query_id<TAB>text` rows. A query without tokens is a DataError.
std::vector<Query> load_queries(const std::filesystem::path& path);

}  // namespace rankperturb
