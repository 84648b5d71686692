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

#include "rankperturb/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "rankperturb/error.hpp"

namespace rankperturb {

std::size_t rank_after_rescoring(const RankedList& list, std::string_view doc_id, double new_score) {
    list.entry(doc_id);  // throws DataError when absent
    std::size_t ahead = 0;
    for (const auto& e : list.entries()) {
        if (e.doc_id != doc_id && ranks_ahead(e.score, e.doc_id, new_score, doc_id)) {
            ++ahead;
        }
    }
    return ahead + 1;
}

double perturbation_pct(const Document& original, const Edit&) {
    if (original.tokens.empty()) {
        throw DomainError("perturbation percentage of empty document '" + original.id + "'");
    }
    // Every edit in this library touches exactly one token.
    return 100.0 / static_cast<double>(original.size());
}

AttackResult evaluate_attack(const Query& q, const RankedList& list, const Document& original,
                             const Perturbation& perturbed, Strategy strategy, const Ranker& ranker,
                             const EmbeddingStore& store) {
    const auto& entry = list.entry(original.id);
    AttackResult r;
    r.query_id = q.id;
    r.doc_id = original.id;
    r.strategy = strategy;
    r.status = AttackStatus::attempted;
    r.orig_rank = entry.rank;
    r.orig_score = entry.score;
    r.new_score = ranker.score(q, perturbed.document);
    r.new_rank = rank_after_rescoring(list, original.id, r.new_score);
    r.edit = perturbed.edit;
    try {
        r.ss = document_similarity(original, perturbed.document, store);
    } catch (const DomainError&) {
        r.ss.reset();
    }
    r.pp = perturbation_pct(original, perturbed.edit);
    r.doc_length = original.size();
    return r;
}

AttackResult skipped_result(std::string query_id, std::string doc_id, Strategy strategy,
                            std::size_t orig_rank, std::string reason) {
    AttackResult r;
    r.query_id = std::move(query_id);
    r.doc_id = std::move(doc_id);
    r.strategy = strategy;
    r.status = AttackStatus::skipped;
    r.orig_rank = orig_rank;
    r.skip_reason = std::move(reason);
    return r;
}

std::optional<double> IsrBucket::rate() const {
    if (attempts == 0) {
        return std::nullopt;
    }
    return 100.0 * static_cast<double>(successes) / static_cast<double>(attempts);
}

std::vector<IsrBucket> isr_buckets() {
    std::vector<IsrBucket> out;
    for (std::size_t lo = 11; lo <= 91; lo += 10) {
        out.push_back(IsrBucket{lo, lo + 9, 0, 0});
    }
    return out;
}

MetricsReport aggregate(std::span<const AttackResult> results, std::string label) {
    MetricsReport rep;
    rep.strategy = std::move(label);
    rep.isr = isr_buckets();

    double ss_sum = 0.0, pp_sum = 0.0, rb_sum = 0.0, sb_sum = 0.0;
    double rb_succ = 0.0, sb_succ = 0.0;
    std::size_t ss_n = 0;
    for (const auto& r : results) {
        if (!r.attempted()) {
            ++rep.skipped;
            continue;
        }
        ++rep.attempted;
        const bool ok = r.success();
        if (ok) {
            ++rep.successes;
            rb_succ += static_cast<double>(r.rank_boost());
            sb_succ += r.score_boost();
        }
        if (r.ss) {
            ss_sum += *r.ss;
            ++ss_n;
        }
        pp_sum += r.pp;
        rb_sum += static_cast<double>(r.rank_boost());
        sb_sum += r.score_boost();
        for (auto& b : rep.isr) {
            if (r.orig_rank >= b.lo && r.orig_rank <= b.hi) {
                ++b.attempts;
                b.successes += ok ? 1 : 0;
                break;
            }
        }
    }
    if (rep.attempted > 0) {
        const auto n = static_cast<double>(rep.attempted);
        rep.sr = 100.0 * static_cast<double>(rep.successes) / n;
        rep.pp_mean = pp_sum / n;
        rep.rb_mean = rb_sum / n;
        rep.sb_mean = sb_sum / n;
    }
    if (ss_n > 0) {
        rep.ss_mean = ss_sum / static_cast<double>(ss_n);
    }
    if (rep.successes > 0) {
        rep.rb_success_mean = rb_succ / static_cast<double>(rep.successes);
        rep.sb_success_mean = sb_succ / static_cast<double>(rep.successes);
    }
    return rep;
}

std::vector<MetricsReport> aggregate_by_strategy(std::span<const AttackResult> results,
                                                 std::span<const Strategy> strategies) {
    std::vector<MetricsReport> out;
    for (auto s : strategies) {
        std::vector<AttackResult> subset;
        for (const auto& r : results) {
            if (r.strategy == s) {
                subset.push_back(r);
            }
        }
        out.push_back(aggregate(subset, std::string(to_string(s))));
    }
    return out;
}

std::string format_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

// --- JSON -------------------------------------------------------------------

namespace {

nlohmann::ordered_json token_json(const Token& t) {
    return {{"surface", t.surface}, {"norm", t.norm}};
}

Token token_from_json(const nlohmann::json& j) {
    return Token{j.at("surface").get<std::string>(), j.at("norm").get<std::string>()};
}

}  // namespace

nlohmann::ordered_json to_json(const AttackResult& r) {
    nlohmann::ordered_json j;
    j["query_id"] = r.query_id;
    j["doc_id"] = r.doc_id;
    j["strategy"] = std::string(to_string(r.strategy));
    j["status"] = r.attempted() ? "attempted" : "skipped";
    j["orig_rank"] = r.orig_rank;
    if (!r.attempted()) {
        j["reason"] = r.skip_reason;
        return j;
    }
    j["new_rank"] = r.new_rank;
    j["orig_score"] = r.orig_score;
    j["new_score"] = r.new_score;
    j["success"] = r.success();
    j["rank_boost"] = r.rank_boost();
    j["score_boost"] = r.score_boost();
    j["ss"] = r.ss ? nlohmann::ordered_json(*r.ss) : nlohmann::ordered_json(nullptr);
    j["pp"] = r.pp;
    j["doc_length"] = r.doc_length;
    if (r.edit) {
        nlohmann::ordered_json e;
        e["kind"] = std::string(to_string(r.edit->kind));
        e["position"] = r.edit->position;
        e["inserted"] = token_json(r.edit->inserted);
        e["replaced"] = r.edit->replaced ? token_json(*r.edit->replaced) : nlohmann::ordered_json(nullptr);
        j["edit"] = std::move(e);
    }
    return j;
}

AttackResult attack_result_from_json(const nlohmann::json& j) {
    AttackResult r;
    r.query_id = j.at("query_id").get<std::string>();
    r.doc_id = j.at("doc_id").get<std::string>();
    r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    const auto status = j.at("status").get<std::string>();
    r.orig_rank = j.at("orig_rank").get<std::size_t>();
    if (status == "skipped") {
        r.status = AttackStatus::skipped;
        r.skip_reason = j.value("reason", "");
        return r;
    }
    if (status != "attempted") {
        throw DataError("unknown attack status '" + status + "'");
    }
    r.new_rank = j.at("new_rank").get<std::size_t>();
    r.orig_score = j.at("orig_score").get<double>();
    r.new_score = j.at("new_score").get<double>();
    if (!j.at("ss").is_null()) {
        r.ss = j.at("ss").get<double>();
    }
    r.pp = j.at("pp").get<double>();
    r.doc_length = j.at("doc_length").get<std::size_t>();
    if (j.contains("edit")) {
        const auto& e = j.at("edit");
        Edit edit;
        edit.kind = parse_edit_kind(e.at("kind").get<std::string>());
        edit.position = e.at("position").get<std::size_t>();
        edit.inserted = token_from_json(e.at("inserted"));
        if (!e.at("replaced").is_null()) {
            edit.replaced = token_from_json(e.at("replaced"));
        }
        r.edit = std::move(edit);
    }
    return r;
}

void write_results_jsonl(std::span<const AttackResult> results, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    for (const auto& r : results) {
        out << to_json(r).dump() << '\n';
    }
    if (!out) {
        throw DataError("failed writing " + path.string());
    }
}

std::vector<AttackResult> read_results_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<AttackResult> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(attack_result_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["strategy"] = r.strategy;
    j["attempted"] = r.attempted;
    j["successes"] = r.successes;
    j["skipped"] = r.skipped;
    j["sr"] = r.sr;
    j["ss_mwe"] = r.ss_mean;
    j["pp"] = r.pp_mean;
    j["rb"] = r.rb_mean;
    j["sb"] = r.sb_mean;
    j["rb_success_only"] = r.rb_success_mean;
    j["sb_success_only"] = r.sb_success_mean;
    auto isr = nlohmann::ordered_json::array();
    for (const auto& b : r.isr) {
        nlohmann::ordered_json row;
        row["lo"] = b.lo;
        row["hi"] = b.hi;
        row["attempts"] = b.attempts;
        row["successes"] = b.successes;
        const auto rate = b.rate();
        row["isr"] = rate ? nlohmann::ordered_json(*rate) : nlohmann::ordered_json(nullptr);
        isr.push_back(std::move(row));
    }
    j["isr"] = std::move(isr);
    return j;
}

void write_report_csv(std::span<const MetricsReport> reports, std::ostream& out) {
    out << "strategy,attempted,successes,skipped,sr,ss_mwe,pp,rb,sb,rb_success_only,sb_success_only";
    for (const auto& b : isr_buckets()) {
        out << ",isr_" << b.lo << '_' << b.hi;
    }
    out << '\n';
    for (const auto& r : reports) {
        out << r.strategy << ',' << r.attempted << ',' << r.successes << ',' << r.skipped << ','
            << format_double(r.sr) << ',' << format_double(r.ss_mean) << ',' << format_double(r.pp_mean)
            << ',' << format_double(r.rb_mean) << ',' << format_double(r.sb_mean) << ','
            << format_double(r.rb_success_mean) << ',' << format_double(r.sb_success_mean);
        for (const auto& b : r.isr) {
            out << ',';
            if (auto rate = b.rate()) {
                out << format_double(*rate);
            }
        }
        out << '\n';
    }
}

}  // namespace rankperturb
