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

// rankperturb: BM25 retrieval, reranking and one-word adversarial attacks.
//
//   rankperturb index  --corpus C --out INDEX
//   rankperturb attack [--config FILE] --corpus C --queries Q --embeddings E --out DIR
//   rankperturb report --results DIR/results.jsonl --out DIR
//   rankperturb synth  --out DIR
//
// Exit status: 0 success, 1 configuration error, 2 data error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rankperturb/bm25.hpp"
#include "rankperturb/campaign.hpp"
#include "rankperturb/error.hpp"
#include "rankperturb/synthetic.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

using namespace rankperturb;

int run_index(const std::string& corpus_path, const std::string& format, const std::string& out,
              double k1, double b) {
    const auto fmt = format.empty() ? corpus_format_for(corpus_path) : parse_corpus_format(format);
    const auto corpus = load_corpus(corpus_path, fmt);
    Bm25Params params;
    params.k1 = k1;
    params.b = b;
    const auto index = Bm25Index::build(corpus, params);
    index.save(out);
    std::cout << "indexed " << index.doc_count() << " documents, " << index.term_count()
              << " terms, avg length " << index.avg_doc_len() << " -> " << out << '\n';
    return 0;
}

void print_summary(const std::vector<MetricsReport>& reports) {
    std::cout << "strategy              attempted  skipped      SR  SS-mwe      PP      RB      SB\n";
    for (const auto& r : reports) {
        std::printf("%-20s %10zu %8zu %7.2f %7.4f %7.3f %7.2f %7.4f\n", r.strategy.c_str(), r.attempted,
                    r.skipped, r.sr, r.ss_mean, r.pp_mean, r.rb_mean, r.sb_mean);
    }
    std::cout << "ISR by original rank:\n          ";
    for (const auto& b : isr_buckets()) {
        std::printf(" %3zu-%-3zu", b.lo, b.hi);
    }
    std::cout << '\n';
    for (const auto& r : reports) {
        std::printf("%-10.10s", r.strategy.c_str() + (r.strategy.rfind("one_word_", 0) == 0 ? 9 : 0));
        for (const auto& b : r.isr) {
            if (auto rate = b.rate()) {
                std::printf(" %7.1f", *rate);
            } else {
                std::printf(" %7s", "-");
            }
        }
        std::cout << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-word adversarial attacks against text rankers"};
    app.require_subcommand(1);

    // index
    auto* index_cmd = app.add_subcommand("index", "Build and persist a BM25 index");
    std::string idx_corpus, idx_format, idx_out;
    double idx_k1 = 0.9, idx_b = 0.4;
    index_cmd->add_option("--corpus", idx_corpus, "Corpus file (TSV or JSONL)")->required();
    index_cmd->add_option("--format", idx_format, "tsv or jsonl (default: from extension)");
    index_cmd->add_option("--out", idx_out, "Index file to write")->required();
    index_cmd->add_option("--k1", idx_k1, "BM25 k1")->capture_default_str();
    index_cmd->add_option("--b", idx_b, "BM25 b")->capture_default_str();

    // attack
    auto* attack_cmd = app.add_subcommand("attack", "Run an attack campaign");
    std::string config_file;
    attack_cmd->add_option("--config", config_file, "key = value config file; flags override it");
    const std::vector<std::pair<std::string, std::string>> attack_flags = {
        {"corpus", "Corpus file (TSV or JSONL)"},
        {"queries", "Queries file (TSV)"},
        {"embeddings", "Word vectors, `token v1 ... vd` per line"},
        {"index", "Prebuilt BM25 index (from `index`)"},
        {"stopwords", "Query stopword list, one per line"},
        {"format", "Corpus format: tsv or jsonl"},
        {"out", "Output directory"},
        {"strategies", "Comma-separated strategies (default: all three)"},
        {"topk", "BM25 candidates per query (default 100)"},
        {"lo", "Lowest attacked rank (default 11)"},
        {"hi", "Highest attacked rank (default 100)"},
        {"k", "Positions tried by one_word_best_grad (default 20)"},
        {"beta", "Hinge margin (default 1.0)"},
        {"lambda-pos", "Position decay of the reference ranker (default 0.01)"},
        {"k1", "BM25 k1 (default 0.9)"},
        {"b", "BM25 b (default 0.4)"},
        {"loss-top-m", "Competitors in the hinge loss (default: all)"},
        {"seed", "Run seed (default 0)"},
        {"threads", "Worker threads (default: all cores)"},
    };
    std::map<std::string, std::string> attack_values;
    std::map<std::string, CLI::Option*> attack_opts;
    for (const auto& [name, help] : attack_flags) {
        attack_opts[name] = attack_cmd->add_option("--" + name, attack_values[name], help);
    }

    // report
    auto* report_cmd = app.add_subcommand("report", "Re-aggregate an existing results file");
    std::string rep_results, rep_out;
    report_cmd->add_option("--results", rep_results, "results.jsonl from `attack`")->required();
    report_cmd->add_option("--out", rep_out, "Directory for report.json, report.csv, isr.csv")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic corpus, queries and embeddings");
    SyntheticSpec spec;
    std::string synth_out;
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--docs", spec.docs)->capture_default_str();
    synth_cmd->add_option("--queries", spec.queries)->capture_default_str();
    synth_cmd->add_option("--dim", spec.dim)->capture_default_str();
    synth_cmd->add_option("--topics", spec.topics)->capture_default_str();
    synth_cmd->add_option("--seed", spec.seed)->capture_default_str();
    synth_cmd->add_option("--spread", spec.topic_spread, "Word noise around its topic direction")
        ->capture_default_str();
    synth_cmd->add_option("--words-per-topic", spec.words_per_topic)->capture_default_str();
    synth_cmd->add_option("--primary-rate", spec.primary_rate)->capture_default_str();
    synth_cmd->add_option("--secondary-rate", spec.secondary_rate)->capture_default_str();
    synth_cmd->add_option("--stray-rate", spec.stray_rate)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*index_cmd) {
            return run_index(idx_corpus, idx_format, idx_out, idx_k1, idx_b);
        }
        if (*attack_cmd) {
            CampaignConfig config;
            if (!config_file.empty()) {
                apply_config_file(config, config_file);
            }
            for (const auto& [name, opt] : attack_opts) {
                if (opt->count() > 0) {
                    apply_setting(config, name, attack_values[name]);
                }
            }
            const auto outputs = run_campaign(config);
            print_summary(report_from_results(outputs.results));
            std::cout << "results: " << outputs.results.string() << "\nreport:  " << outputs.report_json.string()
                      << "\nISR:     " << outputs.isr_csv.string() << '\n';
            return 0;
        }
        if (*report_cmd) {
            const auto reports = report_from_results(rep_results);
            write_reports(reports, rep_out);
            print_summary(reports);
            return 0;
        }
        if (*synth_cmd) {
            write_synthetic(make_synthetic(spec), synth_out);
            std::cout << "wrote corpus.tsv, queries.tsv, embeddings.txt to " << synth_out << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitConfig;
}
