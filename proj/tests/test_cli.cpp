#include <catch2/catch.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "emojivec/cli.hpp"
#include "helpers.hpp"

using namespace emojivec;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

// Runs the built binary through the shell, capturing both streams.
CliResult run_cli(const std::string& args, const testutil::TempDir& tmp,
                  const std::string& extra_env = "") {
    static int counter = 0;
    std::string out_path = tmp.file("cli-out-" + std::to_string(counter));
    std::string err_path = tmp.file("cli-err-" + std::to_string(counter));
    ++counter;
    std::string cmd = extra_env + " " + std::string(EMOJIVEC_CLI_PATH) + " " + args + " >" +
                      out_path + " 2>" + err_path;
    int status = std::system(cmd.c_str());
    CliResult res;
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = testutil::slurp(out_path);
    res.err = testutil::slurp(err_path);
    return res;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// Tiny corpus over the fixture catalog's emojis, diverse enough to train on.
std::string tiny_raw_corpus() {
    std::string text;
    const char* beer = "\xF0\x9F\x8D\xBB";
    const char* party = "\xF0\x9F\x8E\x89";
    const char* dog = "\xF0\x9F\x90\xB6";
    const char* ball = "\xE2\x9A\xBD";
    for (int i = 0; i < 30; ++i) {
        text += std::string("bier durst abend prost ") + beer + "\n";
        text += std::string("party fest musik tanz ") + party + "\n";
        text += std::string("hund welpe spielen leine ") + dog + "\n";
        text += std::string("fussball tor verein rasen ") + ball + "\n";
        text += "bier prost abend heute\n";
        text += "party musik heute tanz\n";
        text += "hund spielen heute leine\n";
        text += "fussball verein heute rasen\n";
    }
    return text;
}

} // namespace

TEST_CASE("help output enumerates every registered flag") {
    cli::AppState st;
    CLI::App app{"", "emojivec"};
    cli::build(app, st);

    // walk every subcommand; each visible option must surface in help text
    std::function<void(CLI::App*)> walk = [&](CLI::App* node) {
        std::string help = node->help();
        for (const auto* opt : node->get_options()) {
            if (opt->get_group().empty()) continue; // hidden options would have no group
            std::string name = opt->get_name();
            INFO(node->get_name() << " option " << name);
            CHECK(help.find(name) != std::string::npos);
        }
        for (auto* sub : node->get_subcommands([](const CLI::App*) { return true; })) {
            CHECK(help.find(sub->get_name()) != std::string::npos);
            walk(sub);
        }
    };
    walk(&app);
}

TEST_CASE("no option is hidden from help") {
    cli::AppState st;
    CLI::App app{"", "emojivec"};
    cli::build(app, st);
    std::function<void(CLI::App*)> walk = [&](CLI::App* node) {
        for (const auto* opt : node->get_options()) CHECK_FALSE(opt->get_group().empty());
        for (auto* sub : node->get_subcommands([](const CLI::App*) { return true; })) walk(sub);
    };
    walk(&app);
}

TEST_CASE("config file values are overridden by flags") {
    testutil::TempDir tmp;
    std::string cfg_path = tmp.file("cfg.ini");
    write_file(cfg_path, "[t2e.baseline]\nclasses = 4\nk = 1\n");
    SECTION("config file alone") {
        auto res = run_cli("--config " + cfg_path + " t2e baseline", tmp);
        CHECK(res.code == 0);
        CHECK(res.out == "0.2500\n");
    }
    SECTION("flag wins over config") {
        auto res = run_cli("--config " + cfg_path + " t2e baseline --classes 2", tmp);
        CHECK(res.code == 0);
        CHECK(res.out == "0.5000\n");
    }
}

TEST_CASE("environment variables override defaults") {
    testutil::TempDir tmp;
    auto res = run_cli("t2e baseline --k 1", tmp, "EMOJIVEC_T2E_BASELINE_CLASSES=2");
    CHECK(res.code == 0);
    CHECK(res.out == "0.5000\n");
}

TEST_CASE("baseline subcommand prints the documented value") {
    testutil::TempDir tmp;
    auto res = run_cli("t2e baseline --classes 117 --k 5", tmp);
    CHECK(res.code == 0);
    CHECK(res.out == "0.0427\n");
}

TEST_CASE("error reporting uses distinct exit codes and single lines") {
    testutil::TempDir tmp;
    SECTION("unknown flag is a usage error") {
        auto res = run_cli("t2e baseline --bogus 1", tmp);
        CHECK(res.code == 2);
        CHECK(res.err.starts_with("error: usage:"));
        CHECK(std::count(res.err.begin(), res.err.end(), '\n') == 1);
    }
    SECTION("missing file") {
        auto res = run_cli("query sim --vectors " + tmp.file("nope.txt") + " --a x --b y", tmp);
        CHECK(res.code == 3);
        CHECK(res.err.starts_with("error: not-found:"));
    }
    SECTION("invariant violation") {
        write_file(tmp.file("c.txt"), "a b c\n");
        auto res = run_cli("train --input " + tmp.file("c.txt") + " --out " + tmp.file("v.txt") +
                               " --epochs 0",
                           tmp);
        CHECK(res.code == 4);
        CHECK(res.err.starts_with("error: config:"));
    }
    SECTION("malformed data") {
        write_file(tmp.file("bad.txt"), "2 2\nfoo 1 2\nbar 1\n");
        auto res = run_cli("query sim --vectors " + tmp.file("bad.txt") + " --a foo --b bar", tmp);
        CHECK(res.code == 5);
        CHECK(res.err.starts_with("error: format:"));
    }
    SECTION("domain error") {
        auto res = run_cli("t2e baseline --classes 3 --k 9", tmp);
        CHECK(res.code == 4);
        CHECK(res.err.starts_with("error: domain:"));
    }
}

TEST_CASE("full pipeline through the binary") {
    testutil::TempDir tmp;
    write_file(tmp.file("catalog.txt"), testutil::kCatalogFixture);
    write_file(tmp.file("raw.txt"), tiny_raw_corpus());

    // preprocess
    auto pre = run_cli("preprocess --input " + tmp.file("raw.txt") + " --catalog " +
                           tmp.file("catalog.txt") + " --out " + tmp.file("clean.txt"),
                       tmp);
    REQUIRE(pre.code == 0);
    REQUIRE(std::filesystem::exists(tmp.file("clean.txt")));
    REQUIRE(std::filesystem::exists(tmp.file("clean.txt.manifest")));

    // stats
    auto stats = run_cli("stats --input " + tmp.file("raw.txt") + " --catalog " +
                             tmp.file("catalog.txt") + " --out " + tmp.file("stats.csv"),
                         tmp);
    REQUIRE(stats.code == 0);
    CHECK(testutil::slurp(tmp.file("stats.csv")).find("sentences_total,240") != std::string::npos);

    // train, twice, deterministically
    std::string train_flags = " --dim 8 --epochs 3 --window 3 --negatives 3 --min-count 1"
                              " --subsample 1.0 --deterministic --seed 3";
    auto t1 = run_cli("train --input " + tmp.file("clean.txt") + " --out " + tmp.file("v1.txt") +
                          train_flags,
                      tmp);
    REQUIRE(t1.code == 0);
    auto t2 = run_cli("train --input " + tmp.file("clean.txt") + " --out " + tmp.file("v2.txt") +
                          train_flags,
                      tmp);
    REQUIRE(t2.code == 0);
    CHECK(testutil::slurp(tmp.file("v1.txt")) == testutil::slurp(tmp.file("v2.txt")));
    CHECK(testutil::slurp(tmp.file("v1.txt.df")) == testutil::slurp(tmp.file("v2.txt.df")));
    CHECK_FALSE(testutil::slurp(tmp.file("v1.txt")).empty());

    // checkpoints
    auto t3 = run_cli("train --input " + tmp.file("clean.txt") + " --out " + tmp.file("v3.txt") +
                          train_flags + " --checkpoint-every 2",
                      tmp);
    REQUIRE(t3.code == 0);
    CHECK(std::filesystem::exists(tmp.file("v3.txt.ck2")));

    // queries
    auto sim = run_cli("query sim --vectors " + tmp.file("v1.txt") + " --a bier --b prost", tmp);
    REQUIRE(sim.code == 0);
    CHECK(std::stod(sim.out) > -1.0001);
    auto e2e = run_cli("query e2e --vectors " + tmp.file("v1.txt") +
                           " --emoji \xF0\x9F\x8D\xBB --k 2 --min-df 0",
                       tmp);
    REQUIRE(e2e.code == 0);
    CHECK(e2e.out.starts_with("rank,key,similarity\n"));
    auto e2t = run_cli("query e2t --vectors " + tmp.file("v1.txt") +
                           " --emoji \xF0\x9F\x8D\xBB --k 3 --min-df 0",
                       tmp);
    REQUIRE(e2t.code == 0);
    CHECK(std::count(e2t.out.begin(), e2t.out.end(), '\n') == 4); // header + 3

    // catalog parse
    auto cat = run_cli("catalog parse --input " + tmp.file("catalog.txt") + " --out " +
                           tmp.file("catalog.csv"),
                       tmp);
    REQUIRE(cat.code == 0);
    CHECK(testutil::slurp(tmp.file("catalog.csv")).find("grinning face") != std::string::npos);

    // eval confusion
    auto conf = run_cli("eval confusion --vectors " + tmp.file("v1.txt") + " --catalog " +
                            tmp.file("catalog.txt") + " --level group --out " +
                            tmp.file("conf.csv"),
                        tmp);
    REQUIRE(conf.code == 0);
    CHECK(conf.err.find("precision_mean=") != std::string::npos);

    // eval spearman
    write_file(tmp.file("judge.csv"), "emoji1,emoji2,score\n"
                                      "\xF0\x9F\x8D\xBB,\xF0\x9F\x8E\x89,3.2\n"
                                      "\xF0\x9F\x8D\xBB,\xF0\x9F\x90\xB6,1.0\n"
                                      "\xF0\x9F\x8E\x89,\xE2\x9A\xBD,2.0\n"
                                      "\xF0\x9F\x90\xB6,\xE2\x9A\xBD,1.5\n");
    auto spear = run_cli("eval spearman --vectors " + tmp.file("v1.txt") + " --judgments " +
                             tmp.file("judge.csv"),
                         tmp);
    REQUIRE(spear.code == 0);
    CHECK(spear.out.find("rho ") != std::string::npos);
    CHECK(spear.out.find("used_pairs 4") != std::string::npos);

    // project
    auto proj = run_cli("project --vectors " + tmp.file("v1.txt") + " --catalog " +
                            tmp.file("catalog.txt") +
                            " --perplexity 2 --iterations 60 --out " + tmp.file("map.csv") +
                            " --kl-log " + tmp.file("kl.csv"),
                        tmp);
    REQUIRE(proj.code == 0);
    auto map_text = testutil::slurp(tmp.file("map.csv"));
    CHECK(map_text.starts_with("emoji,x,y,group,subgroup\n"));
    CHECK(std::count(map_text.begin(), map_text.end(), '\n') == 5); // header + 4 emojis
    CHECK(testutil::slurp(tmp.file("kl.csv")).starts_with("iteration,kl\n"));

    // project is deterministic for a fixed seed
    auto proj2 = run_cli("project --vectors " + tmp.file("v1.txt") + " --catalog " +
                             tmp.file("catalog.txt") +
                             " --perplexity 2 --iterations 60 --out " + tmp.file("map2.csv"),
                         tmp);
    REQUIRE(proj2.code == 0);
    CHECK(testutil::slurp(tmp.file("map.csv")) == testutil::slurp(tmp.file("map2.csv")));

    // continue-train picks up new tokens from the extra corpus
    write_file(tmp.file("extra.txt"), "bier neuwort heute\nneuwort prost heute\n"
                                      "neuwort bier abend\nprost neuwort heute\n");
    auto cont = run_cli("continue-train --base " + tmp.file("v1.txt") + " --input " +
                            tmp.file("extra.txt") + " --out " + tmp.file("v-cont.txt") +
                            " --epochs 2 --min-count 2 --subsample 1.0 --deterministic --seed 4",
                        tmp);
    REQUIRE(cont.code == 0);
    CHECK(testutil::slurp(tmp.file("v-cont.txt")).find("neuwort") != std::string::npos);

    // t2e pipeline: base embedding = word-only training
    auto base = run_cli("train --input " + tmp.file("clean.txt") + " --out " + tmp.file("base.txt") +
                            train_flags + " --mask-emoji",
                        tmp);
    REQUIRE(base.code == 0);
    CHECK(testutil::slurp(tmp.file("base.txt")).find("\xF0\x9F\x8D\xBB") == std::string::npos);

    auto prep = run_cli("t2e prepare --input " + tmp.file("clean.txt") +
                            " --share-threshold 0.01 --per-class 0 --folds 2 --seed 5 --out-dir " +
                            tmp.file("prep"),
                        tmp);
    REQUIRE(prep.code == 0);
    REQUIRE(std::filesystem::exists(tmp.file("prep/classes.txt")));
    REQUIRE(std::filesystem::exists(tmp.file("prep/instances.tsv")));

    auto foldtrain = run_cli("t2e train --prepared " + tmp.file("prep") + " --base " +
                                 tmp.file("base.txt") + " --out-dir " + tmp.file("folds") +
                                 " --folds 2 " + train_flags,
                             tmp);
    REQUIRE(foldtrain.code == 0);
    REQUIRE(std::filesystem::exists(tmp.file("folds/fold0.txt")));
    REQUIRE(std::filesystem::exists(tmp.file("folds/fold1.txt")));

    auto naive = run_cli("t2e naive --prepared " + tmp.file("prep") + " --fold-vectors " +
                             tmp.file("folds") + "/fold{fold}.txt --folds 2 --k 2 --out " +
                             tmp.file("naive.csv"),
                         tmp);
    REQUIRE(naive.code == 0);
    auto naive_text = testutil::slurp(tmp.file("naive.csv"));
    CHECK(naive_text.find("zeror") != std::string::npos);
    CHECK(naive_text.find("naive") != std::string::npos);

    std::string eval_cmd = "t2e evaluate --prepared " + tmp.file("prep") + " --base " +
                           tmp.file("base.txt") + " --catalog " + tmp.file("catalog.txt") +
                           " --folds 2 --k 2 --cls-epochs 10 --cls-lr 0.5 --mlp-hidden 8" +
                           train_flags + " --bench-seed 7 --out-dir ";
    auto ev1 = run_cli(eval_cmd + tmp.file("outA"), tmp);
    REQUIRE(ev1.code == 0);
    auto results = testutil::slurp(tmp.file("outA/results.csv"));
    CHECK(results.find("zeror") != std::string::npos);
    CHECK(results.find("naive") != std::string::npos);
    CHECK(results.find("softmax") != std::string::npos);
    CHECK(results.find("mlp") != std::string::npos);
    REQUIRE(std::filesystem::exists(tmp.file("outA/confusion_naive.csv")));
    REQUIRE(std::filesystem::exists(tmp.file("outA/confusion_ml.csv")));
    REQUIRE(std::filesystem::exists(tmp.file("outA/confusion_diff.csv")));
    REQUIRE(std::filesystem::exists(tmp.file("outA/evaluate.manifest")));
    auto report = testutil::slurp(tmp.file("outA/run_report.txt"));
    CHECK(report.find("seed 7") != std::string::npos);
    CHECK(report.find("classes ") != std::string::npos);
    CHECK(report.find("dropped_eval_oov ") != std::string::npos);

    // byte-identical rerun in deterministic mode
    auto ev2 = run_cli(eval_cmd + tmp.file("outB"), tmp);
    REQUIRE(ev2.code == 0);
    CHECK(testutil::slurp(tmp.file("outA/results.csv")) ==
          testutil::slurp(tmp.file("outB/results.csv")));
    CHECK(testutil::slurp(tmp.file("outA/confusion_diff.csv")) ==
          testutil::slurp(tmp.file("outB/confusion_diff.csv")));
}
