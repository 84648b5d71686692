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

#include "rankperturb/campaign.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rankperturb/error.hpp"
#include "rankperturb/synthetic.hpp"

namespace rankperturb {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 5 queries, 200 documents, 2-d embeddings.
SyntheticSpec toy_spec() {
    SyntheticSpec spec;
    spec.dim = 2;
    spec.topics = 5;
    spec.words_per_topic = 8;
    spec.filler_words = 40;
    spec.oov_words = 10;
    spec.docs = 200;
    spec.min_doc_len = 10;
    spec.max_doc_len = 30;
    spec.queries = 5;
    spec.seed = 5;
    return spec;
}

class CampaignFixture : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("rankperturb_campaign_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        write_synthetic(make_synthetic(toy_spec()), dir_ / "data");
        config_.corpus = dir_ / "data/corpus.tsv";
        config_.queries = dir_ / "data/queries.tsv";
        config_.embeddings = dir_ / "data/embeddings.txt";
        config_.rank_lo = 1;
        config_.rank_hi = 100;
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path dir_;
    CampaignConfig config_;
};

TEST(CampaignConfigTest, Validation) {
    CampaignConfig c;
    EXPECT_NO_THROW(c.validate());
    c.rank_lo = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.rank_lo = 50;
    c.rank_hi = 40;
    EXPECT_THROW(c.validate(), ConfigError);
    c = CampaignConfig{};
    c.rank_hi = 120;
    EXPECT_THROW(c.validate(), ConfigError);
    c = CampaignConfig{};
    c.strategies.clear();
    EXPECT_THROW(c.validate(), ConfigError);
    c = CampaignConfig{};
    c.beta = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(CampaignConfigTest, Settings) {
    CampaignConfig c;
    apply_setting(c, "lambda-pos", "0.25");
    apply_setting(c, "loss_top_m", "10");
    apply_setting(c, "strategies", "one_word_sim, one_word_start");
    EXPECT_DOUBLE_EQ(c.lambda_pos, 0.25);
    EXPECT_EQ(c.loss_top_m, 10u);
    EXPECT_EQ(c.strategies, (std::vector<Strategy>{Strategy::one_word_sim, Strategy::one_word_start}));
    EXPECT_THROW(apply_setting(c, "bogus", "1"), ConfigError);
    EXPECT_THROW(apply_setting(c, "topk", "ten"), ConfigError);
    EXPECT_THROW(apply_setting(c, "strategies", "prada"), ConfigError);
}

TEST(CampaignConfigTest, FileThenFlags) {
    const auto dir = fs::temp_directory_path() / "rankperturb_cfg";
    fs::create_directories(dir);
    std::ofstream(dir / "run.toml") << "# campaign\n[attack]\ncorpus = \"data/c.tsv\"\ntopk = 50  # fewer\n"
                                       "strategies = [\"one_word_best_grad\"]\nk = 5\n";
    CampaignConfig c;
    apply_config_file(c, dir / "run.toml");
    EXPECT_EQ(c.corpus, dir / "data/c.tsv");
    EXPECT_EQ(c.topk, 50u);
    EXPECT_EQ(c.k, 5u);
    EXPECT_EQ(c.strategies, (std::vector<Strategy>{Strategy::one_word_best_grad}));
    apply_setting(c, "k", "7");  // a flag given after the file wins
    EXPECT_EQ(c.k, 7u);

    std::ofstream(dir / "bad.toml") << "topk 50\n";
    EXPECT_THROW(apply_config_file(c, dir / "bad.toml"), ConfigError);
    EXPECT_THROW(apply_config_file(c, dir / "missing.toml"), ConfigError);
    fs::remove_all(dir);
}

TEST_F(CampaignFixture, ByteIdenticalAcrossRunsAndThreadCounts) {
    config_.output_dir = dir_ / "run1";
    config_.threads = 1;
    const auto a = run_campaign(config_);
    config_.output_dir = dir_ / "run2";
    config_.threads = 4;
    const auto b = run_campaign(config_);
    EXPECT_EQ(slurp(a.results), slurp(b.results));
    EXPECT_EQ(slurp(a.report_json), slurp(b.report_json));
    EXPECT_EQ(slurp(a.report_csv), slurp(b.report_csv));
    EXPECT_EQ(slurp(a.isr_csv), slurp(b.isr_csv));
    EXPECT_FALSE(slurp(a.results).empty());
}

TEST_F(CampaignFixture, AttacksConfiguredRankRange) {
    const auto corpus = load_corpus(config_.corpus, CorpusFormat::tsv);
    const auto queries = load_queries(config_.queries);
    const auto store = load_embeddings(config_.embeddings);
    const auto index = Bm25Index::build(corpus);

    const auto all = run_campaign(config_, corpus, queries, store, index);
    bool top_ten = false;
    for (const auto& r : all.results) {
        top_ten |= r.attempted() && r.orig_rank <= 10;
    }
    EXPECT_TRUE(top_ten);
    ASSERT_EQ(all.reports.size(), 3u);
    EXPECT_EQ(all.reports[0].strategy, "one_word_start");
    EXPECT_EQ(all.reports[2].strategy, "one_word_best_grad");

    config_.rank_lo = 11;
    config_.rank_hi = 40;
    config_.strategies = {Strategy::one_word_sim};
    const auto narrow = run_campaign(config_, corpus, queries, store, index);
    ASSERT_EQ(narrow.reports.size(), 1u);
    for (const auto& r : narrow.results) {
        EXPECT_EQ(r.strategy, Strategy::one_word_sim);
        if (r.attempted()) {
            EXPECT_GE(r.orig_rank, 11u);
            EXPECT_LE(r.orig_rank, 40u);
        }
    }
    for (std::size_t i = 1; i < all.results.size(); ++i) {
        const auto& p = all.results[i - 1];
        const auto& q = all.results[i];
        EXPECT_LE(std::tie(p.query_id, p.doc_id, p.strategy), std::tie(q.query_id, q.doc_id, q.strategy));
    }
}

TEST_F(CampaignFixture, QueryWithoutCenterIsSkipped) {
    std::ofstream(config_.queries, std::ios::app) << "qoov\tzzzz yyyy\n";
    config_.output_dir = dir_ / "out";
    const auto out = run_campaign(config_);
    const auto results = read_results_jsonl(out.results);
    std::size_t skipped = 0;
    for (const auto& r : results) {
        if (r.query_id == "qoov") {
            EXPECT_FALSE(r.attempted());
            EXPECT_EQ(r.skip_reason, "no_center");
            ++skipped;
        }
    }
    EXPECT_EQ(skipped, 3u);
    const auto summary = slurp(out.queries_tsv);
    EXPECT_NE(summary.find("qoov\t0\t0\t-\t-"), std::string::npos) << summary;
}

TEST_F(CampaignFixture, ReportSubcommandReproducesReport) {
    config_.output_dir = dir_ / "out";
    const auto out = run_campaign(config_);
    const auto reports = report_from_results(out.results);
    write_reports(reports, dir_ / "again");
    EXPECT_EQ(slurp(out.report_csv), slurp(dir_ / "again/report.csv"));
    EXPECT_EQ(slurp(out.isr_csv), slurp(dir_ / "again/isr.csv"));
}

TEST_F(CampaignFixture, PrebuiltIndexGivesSameResults) {
    const auto corpus = load_corpus(config_.corpus, CorpusFormat::tsv);
    Bm25Index::build(corpus).save(dir_ / "bm25.idx");
    config_.output_dir = dir_ / "a";
    const auto a = run_campaign(config_);
    config_.index = dir_ / "bm25.idx";
    config_.output_dir = dir_ / "b";
    const auto b = run_campaign(config_);
    EXPECT_EQ(slurp(a.results), slurp(b.results));
}

TEST_F(CampaignFixture, MissingInputIsDataError) {
    config_.embeddings = dir_ / "nope.txt";
    try {
        run_campaign(config_);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("nope.txt"), std::string::npos);
    }
}

TEST(IsrPlotData, RowsAndRoundTrip) {
    std::vector<AttackResult> rs;
    for (std::size_t rank = 11; rank <= 80; rank += 3) {
        AttackResult r;
        r.orig_rank = rank;
        r.new_rank = rank % 2 ? rank - 5 : rank;
        r.pp = 1.0;
        rs.push_back(r);
    }
    std::vector<MetricsReport> reps;
    for (auto s : kAllStrategies) {
        reps.push_back(aggregate(rs, std::string(to_string(s))));
    }
    const auto path = fs::temp_directory_path() / "rankperturb_isr.csv";
    emit_isr_plotdata(reps, path);

    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        ++lines;
    }
    EXPECT_EQ(lines, 28u);

    const auto rows = read_isr_plotdata(path);
    ASSERT_EQ(rows.size(), 27u);
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t b = 0; b < 9; ++b) {
            const auto& row = rows[s * 9 + b];
            const auto& bucket = reps[s].isr[b];
            EXPECT_EQ(row.strategy, reps[s].strategy);
            EXPECT_EQ(row.interval_lo, bucket.lo);
            EXPECT_EQ(row.interval_hi, bucket.hi);
            EXPECT_EQ(row.attempts, bucket.attempts);
            EXPECT_EQ(row.isr_pct, bucket.rate());
        }
    }
    // ranks 81-100 were never attempted
    EXPECT_EQ(rows[8].attempts, 0u);
    EXPECT_FALSE(rows[8].isr_pct.has_value());
    fs::remove(path);
}

}  // namespace
}  // namespace rankperturb
