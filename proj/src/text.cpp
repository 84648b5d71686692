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

#include "rankperturb/text.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "rankperturb/error.hpp"

namespace rankperturb {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char to_lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string location(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return in;
}

// Splits `id<TAB>text`.
std::pair<std::string, std::string_view> split_tsv(const std::filesystem::path& path,
                                                   std::size_t lineno, std::string_view line) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
        throw DataError(location(path, lineno) + ": malformed line, expected id<TAB>text");
    }
    return {std::string(line.substr(0, tab)), line.substr(tab + 1)};
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    auto in = open_input(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // CRLF input
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        fn(lineno, std::string_view(line));
    }
}

}  // namespace

Token Token::from_norm(std::string norm) {
    Token t;
    t.surface = norm;
    t.norm = std::move(norm);
    return t;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        const std::size_t start = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i > start) {
            Token t;
            t.surface = std::string(text.substr(start, i - start));
            t.norm.resize(t.surface.size());
            std::transform(t.surface.begin(), t.surface.end(), t.norm.begin(), to_lower_ascii);
            out.push_back(std::move(t));
        }
    }
    return out;
}

std::string join_norms(const std::vector<Token>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) {
            out += ' ';
        }
        out += t.norm;
    }
    return out;
}

Document make_document(std::string id, std::string_view text) {
    return Document{std::move(id), tokenize(text)};
}

Query make_query(std::string id, std::string_view text) {
    return Query{std::move(id), tokenize(text)};
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::jsonl : CorpusFormat::tsv;
}

CorpusFormat parse_corpus_format(std::string_view name) {
    if (name == "tsv") {
        return CorpusFormat::tsv;
    }
    if (name == "jsonl") {
        return CorpusFormat::jsonl;
    }
    throw ConfigError("unknown corpus format '" + std::string(name) + "' (expected tsv or jsonl)");
}

std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;

    auto add = [&](std::string id, std::string_view text) {
        if (!seen.insert(id).second) {
            throw DataError(path.string() + ": duplicate doc_id '" + id + "'");
        }
        docs.push_back(make_document(std::move(id), text));
    };

    for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        if (format == CorpusFormat::tsv) {
            auto [id, text] = split_tsv(path, lineno, line);
            add(std::move(id), text);
            return;
        }
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw DataError(location(path, lineno) + ": malformed JSON");
        }
        if (!row.is_object() || !row.contains("id") || !row["id"].is_string() ||
            !row.contains("contents") || !row["contents"].is_string()) {
            throw DataError(location(path, lineno) + ": expected string fields 'id' and 'contents'");
        }
        add(row["id"].get<std::string>(), row["contents"].get_ref<const std::string&>());
    });
    return docs;
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
    std::vector<Query> queries;
    std::unordered_set<std::string> seen;
    for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        auto [id, text] = split_tsv(path, lineno, line);
        if (!seen.insert(id).second) {
            throw DataError(path.string() + ": duplicate query_id '" + id + "'");
        }
        auto q = make_query(std::move(id), text);
        if (q.tokens.empty()) {
            throw DataError(location(path, lineno) + ": query '" + q.id + "' has no tokens");
        }
        queries.push_back(std::move(q));
    });
    return queries;
}

}  // namespace rankperturb
