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

// Acceptance suite. Runs every exit criterion at its pinned tolerance and
// prints one PASS/FAIL line per criterion. argv[1] is the rankperturb CLI
// binary, used by the end-to-end determinism check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "rankperturb/attacks.hpp"
#include "rankperturb/bm25.hpp"
#include "rankperturb/campaign.hpp"
#include "rankperturb/embeddings.hpp"
#include "rankperturb/metrics.hpp"
#include "rankperturb/ranker.hpp"
#include "rankperturb/synthetic.hpp"

namespace fs = std::filesystem;
using namespace rankperturb;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int prec = 3) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << x;
    return ss.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 1. Token gradients against central finite differences of the hinge loss.
Outcome gradient_correctness() {
    constexpr double kStep = 1e-4;
    constexpr double kMaxRelErr = 1e-4;
    constexpr double kMinMagnitude = 1e-8;
    constexpr int kInstances = 25;
    constexpr double kTimeLimit = 10.0;

    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<std::size_t> dim_d(2, 10), len_d(1, 12), list_d(2, 10);
    double worst = 0.0;
    std::size_t checked = 0;
    int instances = 0;
    while (instances < kInstances) {
        const auto dim = dim_d(rng);
        const auto store = oracle::random_store(rng, 30, dim);
        const ReferenceRanker ranker(store, RankerParams{0.05, 1.0, 0, 0});
        const Query q{"q", oracle::random_tokens(rng, store, 1 + instances % 4)};
        const Document d{"target", oracle::random_tokens(rng, store, len_d(rng), 0.15)};
        const double f = ranker.score(q, d);
        std::normal_distribution<double> around(f, 0.5);
        std::vector<ScoredDoc> rows{{"target", f}};
        const auto n = list_d(rng);
        for (std::size_t i = 1; i < n; ++i) {
            rows.push_back({"c" + std::to_string(i), around(rng)});
        }
        const auto list = RankedList::from_scores("q", rows);
        const auto comp = competitor_scores(list, "target", 0);
        // Central differences straddling a hinge kink do not estimate the
        // derivative; such instances are redrawn.
        bool near_kink = false;
        for (double c : comp) {
            near_kink |= std::abs(1.0 - f + c) < 1e-2;
        }
        if (near_kink) {
            continue;
        }
        ++instances;
        const auto emb = ranker.embed(d);
        const auto grads = ranker.token_gradients(q, emb, "target", list, LossSpec{1.0, 0});
        for (std::size_t i = 0; i < emb.positions.size(); ++i) {
            if (!emb.positions[i]) {
                continue;
            }
            for (std::size_t c = 0; c < dim; ++c) {
                auto plus = emb;
                auto minus = emb;
                (*plus.positions[i])[c] += kStep;
                (*minus.positions[i])[c] -= kStep;
                const double fd = (hinge_loss(ranker.score(q, plus), comp, 1.0) -
                                   hinge_loss(ranker.score(q, minus), comp, 1.0)) /
                                  (2 * kStep);
                const double g = grads[i].grad[c];
                if (std::abs(g) > kMinMagnitude) {
                    worst = std::max(worst, std::abs(fd - g) / std::abs(g));
                    ++checked;
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    return {worst < kMaxRelErr && checked > 0 && secs < kTimeLimit,
            std::to_string(instances) + " instances, " + std::to_string(checked) +
                " components, max rel err " + fmt(worst) + " (< 1e-4), " + fmt(secs) + " s (< 10 s)"};
}

struct BestGradInstance {
    double best_grad_score = 0.0;
    double start_score = 0.0;
    double orig_score = 0.0;
};

// 2 and 4. attack_best_grad with k >= |d| against exhaustive insertion.
Outcome best_grad_equivalence(double lambda_pos, std::uint64_t seed, std::vector<BestGradInstance>* log) {
    constexpr int kInstances = 60;
    constexpr double kTimeLimit = 30.0;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> len_d(1, 30), qlen_d(1, 4);
    int mismatches = 0;
    for (int n = 0; n < kInstances; ++n) {
        const auto store = oracle::random_store(rng, 80, 8);
        const ReferenceRanker ranker(store, RankerParams{lambda_pos, 1.0, 0, 0});
        const Query q{"q", oracle::random_tokens(rng, store, qlen_d(rng))};
        const Document d{"d", oracle::random_tokens(rng, store, len_d(rng), 0.1)};
        const double f = ranker.score(q, d);
        const auto list = RankedList::from_scores("q", {{"d", f}, {"a", f + 0.5}, {"b", f - 0.2}, {"c", f + 2}});
        const auto center = query_center(q, store);
        const auto k = d.size() + static_cast<std::size_t>(n % 3);
        const auto p = attack_best_grad(q, center, d, list, ranker, LossSpec{}, k);
        const double got = ranker.score(q, p.document);
        const auto [pos, best] =
            oracle::best_insertion(d, center.token, [&](const Document& c) { return ranker.score(q, c); });
        if (got != best || p.edit.position != pos) {
            ++mismatches;
        }
        if (log) {
            log->push_back({got, ranker.score(q, attack_start(center, d).document), f});
        }
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < kTimeLimit,
            std::to_string(kInstances) + " instances (lambda_pos " + fmt(lambda_pos) + "), " +
                std::to_string(mismatches) + " mismatches, " + fmt(secs) + " s (< 30 s)"};
}

Outcome dominance(const std::vector<BestGradInstance>& flat) {
    int violations = 0;
    double min_sb = 1e300;
    for (const auto& r : flat) {
        violations += r.best_grad_score >= r.start_score ? 0 : 1;
        min_sb = std::min({min_sb, r.best_grad_score - r.orig_score, r.start_score - r.orig_score});
    }
    return {violations == 0 && min_sb >= 0.0 && !flat.empty(),
            std::to_string(flat.size()) + " instances at lambda_pos 0, " + std::to_string(violations) +
                " with f(best_grad) < f(start), min score boost " + fmt(min_sb)};
}

// 3. Query centers against an independent exhaustive scan.
Outcome query_center_oracle() {
    std::mt19937_64 rng(3003);
    const auto store = oracle::random_store(rng, 1000, 12);
    std::uniform_int_distribution<std::size_t> qlen(1, 6);
    int mismatches = 0;
    for (int i = 0; i < 100; ++i) {
        Query q{"q" + std::to_string(i), oracle::random_tokens(rng, store, qlen(rng), 0.2)};
        if (!oracle::mean_of(q.tokens, store)) {
            q.tokens.push_back(Token::from_norm(store.token(i)));
        }
        const auto got = query_center(q, store);
        const auto want = oracle::nearest(*oracle::mean_of(q.tokens, store), store);
        if (got.token != want.first) {
            ++mismatches;
        }
    }
    return {mismatches == 0, "1000-word vocabulary, 100 queries, " + std::to_string(mismatches) + " mismatches"};
}

// 5. Metric identities.
Outcome metric_identities() {
    std::mt19937_64 rng(5005);
    const auto store = oracle::random_store(rng, 200, 16);
    std::vector<std::string> failures;

    double worst_ss = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Document d{"d", oracle::random_tokens(rng, store, 1 + i % 40, 0.1)};
        if (!oracle::mean_of(d.tokens, store)) {
            continue;
        }
        worst_ss = std::max(worst_ss, std::abs(document_similarity(d, d, store) - 1.0));
    }
    if (!(worst_ss <= 1e-9)) {
        failures.push_back("SS(d,d)");
    }

    int pp_bad = 0;
    for (std::size_t n = 1; n <= 500; ++n) {
        Document d{"d", std::vector<Token>(n, Token::from_norm("w0"))};
        const Edit e{EditKind::insert, 0, Token::from_norm("w1"), std::nullopt};
        pp_bad += perturbation_pct(d, e) == 100.0 / static_cast<double>(n) ? 0 : 1;
    }
    if (pp_bad) {
        failures.push_back("PP");
    }

    double worst_isr = 0.0;
    std::uniform_int_distribution<std::size_t> rank(11, 100);
    std::uniform_int_distribution<int> shift(-20, 40);
    for (int batch = 0; batch < 10; ++batch) {
        std::vector<AttackResult> rs;
        for (int i = 0; i < 500 + batch * 50; ++i) {
            AttackResult r;
            r.orig_rank = rank(rng);
            r.new_rank = static_cast<std::size_t>(std::max<long>(1, static_cast<long>(r.orig_rank) - shift(rng)));
            r.pp = 1.0;
            rs.push_back(r);
        }
        const auto rep = aggregate(rs);
        double weighted = 0.0;
        std::size_t total = 0;
        for (const auto& b : rep.isr) {
            if (auto rate = b.rate()) {
                weighted += *rate * static_cast<double>(b.attempts);
                total += b.attempts;
            }
        }
        worst_isr = std::max(worst_isr, std::abs(weighted / static_cast<double>(total) - rep.sr));
    }
    if (!(worst_isr <= 1e-9)) {
        failures.push_back("ISR/SR");
    }

    int rank_bad = 0;
    std::uniform_int_distribution<int> coarse(0, 400);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ScoredDoc> rows;
        for (int i = 0; i < 100; ++i) {
            rows.push_back({"d" + std::to_string(i), coarse(rng) / 100.0});
        }
        const auto list = RankedList::from_scores("q", rows);
        const auto target = "d" + std::to_string(trial);
        const double s = coarse(rng) / 100.0;
        rank_bad += rank_after_rescoring(list, target, s) == oracle::resorted_rank(list, target, s) ? 0 : 1;
    }
    if (rank_bad) {
        failures.push_back("new_rank");
    }

    std::string detail = "max |SS(d,d)-1| " + fmt(worst_ss) + ", PP mismatches " + std::to_string(pp_bad) +
                         ", max |ISR mean - SR| " + fmt(worst_isr) + ", re-sort mismatches " +
                         std::to_string(rank_bad) + "/100";
    for (const auto& f : failures) {
        detail += " [failed: " + f + "]";
    }
    return {failures.empty(), detail};
}

// 6. Desk-scale directional behaviour on the seeded synthetic collection.
Outcome desk_scale() {
    constexpr double kMaxPp = 3.0;
    constexpr double kMinIsrSpread = 5.0;
    constexpr double kTimeLimit = 300.0;
    const auto t0 = Clock::now();

    SyntheticSpec spec;  // 2000 documents, 50 queries
    const auto data = make_synthetic(spec);
    const auto index = Bm25Index::build(data.corpus);
    CampaignConfig config;  // ranks 11-100, all three strategies, k = 20
    const auto run = run_campaign(config, data.corpus, data.queries, data.store, index);
    const double secs = seconds_since(t0);

    const auto& start = run.reports[0];
    const auto& sim = run.reports[1];
    const auto& grad = run.reports[2];
    bool pp_ok = true;
    bool isr_ok = true;
    std::string isr_detail;
    for (const auto& r : run.reports) {
        pp_ok &= r.attempted > 0 && r.pp_mean < kMaxPp;
        double lo = 1e300, hi = -1e300;
        for (const auto& b : r.isr) {
            if (auto rate = b.rate()) {
                lo = std::min(lo, *rate);
                hi = std::max(hi, *rate);
            }
        }
        isr_ok &= hi - lo >= kMinIsrSpread;
        isr_detail += " " + r.strategy.substr(9) + " " + fmt(hi - lo);
    }
    const bool order_ok = grad.sr > sim.sr;
    const std::string detail =
        std::to_string(data.corpus.size()) + " docs, " + std::to_string(data.queries.size()) + " queries; SR start " +
        fmt(start.sr, 4) + ", sim " + fmt(sim.sr, 4) + ", best_grad " + fmt(grad.sr, 4) +
        (order_ok ? " (best_grad > sim)" : " (best_grad <= sim!)") + "; PP " + fmt(start.pp_mean) + "/" +
        fmt(sim.pp_mean) + "/" + fmt(grad.pp_mean) + " (< 3%); ISR max-min spread" + isr_detail +
        " (>= 5); " + fmt(secs) + " s (< 300 s)";
    return {order_ok && pp_ok && isr_ok && secs < kTimeLimit, detail};
}

// 7. BM25 scores and the prefix property.
Outcome bm25_correctness() {
    const std::vector<Document> two = {make_document("d1", "x x y"), make_document("d2", "a b c")};
    const auto small = Bm25Index::build(two, Bm25Params{0.9, 0.4, {}});
    const auto hits = small.retrieve(make_query("q", "x"), 100);
    const double expected = std::log(1.0 + 1.5 / 1.5) * (2 * 1.9) / (2 + 0.9 * (0.6 + 0.4 * 1.0));
    const bool hand_ok = hits.size() == 1 && std::abs(hits[0].score - expected) < 1e-6;

    std::mt19937_64 rng(7007);
    std::uniform_int_distribution<std::size_t> ndocs(1, 50), len(1, 15);
    std::uniform_int_distribution<int> word(0, 19);
    int prefix_bad = 0;
    int score_bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Document> corpus;
        const auto n = ndocs(rng);
        for (std::size_t i = 0; i < n; ++i) {
            std::string text;
            for (auto l = len(rng); l > 0; --l) {
                text += "t" + std::to_string(word(rng)) + " ";
            }
            corpus.push_back(make_document("doc" + std::to_string(i), text));
        }
        const auto index = Bm25Index::build(corpus);
        const auto q = make_query("q", "t" + std::to_string(word(rng)) + " t" + std::to_string(word(rng)));
        const auto all = index.retrieve(q, 1000);
        const auto brute = oracle::bm25_scores(corpus, q, 0.9, 0.4);
        for (const auto& h : all) {
            score_bad += std::abs(h.score - brute.at(h.doc_id)) < 1e-6 ? 0 : 1;
        }
        for (std::size_t k = 1; k <= all.size() + 1; ++k) {
            const auto top = index.retrieve(q, k);
            for (std::size_t i = 0; i < top.size(); ++i) {
                prefix_bad += top[i].doc_id == all[i].doc_id ? 0 : 1;
            }
        }
    }
    return {hand_ok && prefix_bad == 0 && score_bad == 0,
            "hand-computed " + fmt(hits.empty() ? 0.0 : hits[0].score, 10) + " vs " + fmt(expected, 10) +
                "; 100 random corpora: " + std::to_string(prefix_bad) + " prefix violations, " +
                std::to_string(score_bad) + " score mismatches"};
}

// 8. Two CLI `attack` runs with identical config and seed.
Outcome end_to_end_determinism(const std::string& cli) {
    if (cli.empty()) {
        return {false, "CLI path not given"};
    }
    const auto dir = fs::temp_directory_path() / "rankperturb_acceptance_e2e";
    fs::remove_all(dir);
    SyntheticSpec spec;
    spec.docs = 400;
    spec.queries = 8;
    spec.topics = 10;
    write_synthetic(make_synthetic(spec), dir / "data");
    {
        std::ofstream cfg(dir / "run.toml");
        cfg << "corpus = \"data/corpus.tsv\"\nqueries = \"data/queries.tsv\"\n"
               "embeddings = \"data/embeddings.txt\"\nseed = 42\n";
    }
    int status = 0;
    for (const char* out : {"run1", "run2"}) {
        const auto cmd = "\"" + cli + "\" attack --config \"" + (dir / "run.toml").string() + "\" --out \"" +
                         (dir / out).string() + "\" > /dev/null";
        status |= std::system(cmd.c_str());
    }
    if (status != 0) {
        return {false, "CLI exited with non-zero status"};
    }
    std::string differing;
    for (const char* f : {"results.jsonl", "report.json", "report.csv", "isr.csv"}) {
        const auto a = slurp(dir / "run1" / f);
        if (a.empty() || a != slurp(dir / "run2" / f)) {
            differing += std::string(" ") + f;
        }
    }
    const auto bytes = fs::file_size(dir / "run1/results.jsonl");
    fs::remove_all(dir);
    return {differing.empty(), differing.empty()
                                   ? "results.jsonl (" + std::to_string(bytes) +
                                         " bytes), report.json, report.csv, isr.csv byte-identical"
                                   : "files differ:" + differing};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    std::vector<BestGradInstance> flat;

    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"AC1 gradient correctness", gradient_correctness},
        {"AC2 best-grad oracle equivalence",
         [&] {
             auto a = best_grad_equivalence(0.0, 2002, &flat);
             auto b = best_grad_equivalence(0.05, 2003, nullptr);
             return Outcome{a.pass && b.pass, a.detail + "; " + b.detail};
         }},
        {"AC3 query-center oracle", query_center_oracle},
        {"AC4 dominance invariant", [&] { return dominance(flat); }},
        {"AC5 metric identities", metric_identities},
        {"AC6 desk-scale directional reproduction", desk_scale},
        {"AC7 BM25 correctness", bm25_correctness},
        {"AC8 end-to-end determinism", [&] { return end_to_end_determinism(cli); }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
