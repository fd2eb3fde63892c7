#include <gtest/gtest.h>

#include "cli_runner.hpp"
#include "model_builder.hpp"
#include "morse/synth.hpp"

using namespace morse;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override { dir = cli::scratch(::testing::UnitTest::GetInstance()->current_test_info()->name()); }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return "'" + (dir / name).string() + "'"; }

    void write_fixture_model() {
        std::ofstream out(dir / "model.tsv");
        save_model(out, fixture::english());
    }

    /// Small planted bundle written to disk.
    void write_bundle_files() {
        SynthSpec s;
        s.n_stems = 20;
        s.rules = {{AffixKind::Suffix, "ing"}, {AffixKind::Suffix, "ed"}};
        s.dim = 16;
        s.n_decoys = 4;
        s.seed = 3;
        write_bundle(dir / "bundle", generate(s));
    }

    fs::path dir;
};

} // namespace

TEST_F(Cli, HelpDocumentsEveryFlag) {
    const std::map<std::string, std::vector<std::string>> flags = {
        {"train",
         {"--vocab", "--embeddings", "--model", "--vocab-size", "--min-stem", "--max-affix", "--sample-cap", "--seed",
          "--lowercase", "--prune-singletons", "--dump-rules", "--dump-pairs", "--jobs"}},
        {"tune",
         {"--model", "--gold", "--out", "--report", "--grid-r-sem", "--grid-r-orth", "--grid-w-sem", "--grid-loc-sem",
          "--no-refine", "--curve", "--curve-out", "--seed", "--jobs"}},
        {"segment",
         {"--model", "--thresholds", "--t-r-sem", "--t-r-orth", "--t-w-sem", "--t-loc-sem", "--input", "--output",
          "--canonical"}},
        {"eval",
         {"--gold", "--pred", "--model", "--thresholds", "--t-r-sem", "--t-r-orth", "--t-w-sem", "--t-loc-sem",
          "--mode", "--probes", "--output"}},
        {"sweep",
         {"--model", "--gold", "--axis1", "--axis2", "--thresholds", "--t-r-sem", "--t-r-orth", "--t-w-sem",
          "--t-loc-sem", "--grid-r-sem", "--grid-r-orth", "--grid-w-sem", "--grid-loc-sem", "--output", "--jobs"}},
        {"synth", {"--out-dir", "--stems", "--suffixes", "--prefixes", "--dim", "--noise", "--decoys", "--seed"}},
    };
    auto top = cli::run("--help", dir);
    EXPECT_EQ(top.exit_code, 0);
    for (const auto& [sub, list] : flags) {
        EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
        auto r = cli::run(sub + " --help", dir);
        EXPECT_EQ(r.exit_code, 0) << sub;
        for (const auto& f : list) EXPECT_NE(r.out.find(f), std::string::npos) << sub << " " << f;
    }
}

TEST_F(Cli, UsageErrorsExitTwo) {
    cli::spit(dir / "vocab.txt", "play\nplaying\n");
    auto r = cli::run("train --vocab " + path("vocab.txt") + " --embeddings " + path("missing.vec") + " --model " +
                          path("m.tsv"),
                      dir);
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("missing.vec"), std::string::npos);
    EXPECT_EQ(cli::run("", dir).exit_code, 2);
    EXPECT_EQ(cli::run("frobnicate", dir).exit_code, 2);
    EXPECT_EQ(cli::run("segment --model", dir).exit_code, 2);

    write_fixture_model();
    cli::spit(dir / "gold.tsv", "jumping\tjump ing\n");
    EXPECT_EQ(cli::run("tune --model " + path("model.tsv") + " --gold " + path("gold.tsv") + " --grid-r-sem 0.5,0.1",
                       dir)
                  .exit_code,
              2);
    EXPECT_EQ(cli::run("tune --model " + path("model.tsv") + " --gold " + path("nogold.tsv"), dir).exit_code, 2);
}

TEST_F(Cli, MalformedEmbeddingsReportLine) {
    cli::spit(dir / "vocab.txt", "play\nplaying\n");
    cli::spit(dir / "emb.vec", "2 3\nplay 1 2 3\nplaying 1 x 3\n");
    auto r = cli::run("train --vocab " + path("vocab.txt") + " --embeddings " + path("emb.vec") + " --model " +
                          path("m.tsv"),
                      dir);
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, CorruptModelExitsThree) {
    cli::spit(dir / "bad.tsv", "morse-model\t99\n");
    auto r = cli::run("segment --model " + path("bad.tsv") + " --t-r-orth 2", dir);
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_NE(r.err.find("version"), std::string::npos);

    write_fixture_model();
    cli::spit(dir / "th.txt", "t_r_sem=oops\n");
    EXPECT_EQ(cli::run("segment --model " + path("model.tsv") + " --thresholds " + path("th.txt"), dir).exit_code, 3);
}

TEST_F(Cli, SegmentsWordsFromStdin) {
    write_fixture_model();
    cli::spit(dir / "words.txt", "jumping\nsing\nunhealthy\nskies\nzebra\n");
    auto r = cli::run("segment --model " + path("model.tsv") + " --t-r-sem 0.2 --t-w-sem 0.2 --t-loc-sem 0.2 --canonical",
                      dir, (dir / "words.txt").string());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out,
              "jumping\tjump-ing\tjump ing\nsing\tsing\tsing\nunhealthy\tun-health-y\tun health y\n"
              "skies\tsk-ies\tsky ies\nzebra\tzebra\tzebra\n");

    cli::spit(dir / "empty.txt", "");
    auto e = cli::run("segment --model " + path("model.tsv") + " --t-r-orth 1", dir, (dir / "empty.txt").string());
    EXPECT_EQ(e.exit_code, 0);
    EXPECT_EQ(e.out, "");

    cli::spit(dir / "messy.txt", "jumping\r\ntwo words\n\nsing\n");
    auto m = cli::run("segment --model " + path("model.tsv") + " --t-r-sem 0.2 --t-w-sem 0.2 --t-loc-sem 0.2", dir,
                      (dir / "messy.txt").string());
    EXPECT_EQ(m.exit_code, 0);
    EXPECT_EQ(m.out, "jumping\tjump-ing\nsing\tsing\n");
    EXPECT_NE(m.err.find("line 2"), std::string::npos);
}

TEST_F(Cli, SegmentRequiresThresholds) {
    write_fixture_model();
    EXPECT_EQ(cli::run("segment --model " + path("model.tsv"), dir).exit_code, 2);
}

TEST_F(Cli, EvalPredAgainstGold) {
    cli::spit(dir / "gold.tsv", "jumping\tjump ing\nunhealthy\tun health y\nsing\tsing\n");
    cli::spit(dir / "pred.tsv", "jumping\tjump-ing\nunhealthy\tun-health-y\nsing\tsing\n");
    auto r = cli::run("eval --gold " + path("gold.tsv") + " --pred " + path("pred.tsv"), dir);
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("\nf1=1\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("mode=boundary\n"), std::string::npos);

    cli::spit(dir / "partial.tsv", "jumping\tjump-ing\n");
    EXPECT_EQ(cli::run("eval --gold " + path("gold.tsv") + " --pred " + path("partial.tsv"), dir).exit_code, 2);
    cli::spit(dir / "wrong.tsv", "jumping\tjum-pingg\n");
    EXPECT_EQ(cli::run("eval --gold " + path("gold.tsv") + " --pred " + path("wrong.tsv"), dir).exit_code, 2);
}

TEST_F(Cli, EvalWithModelAndProbes) {
    write_fixture_model();
    cli::spit(dir / "gold.tsv", "jumping\tjump ing\nskies\tsky ies\n");
    cli::spit(dir / "probes.txt", "sing\n");
    const std::string th = " --t-r-sem 0 --t-r-orth 1 --t-w-sem 0 --t-loc-sem -1";
    auto r = cli::run("eval --gold " + path("gold.tsv") + " --model " + path("model.tsv") + th + " --probes " +
                          path("probes.txt") + " --mode morpheme",
                      dir);
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("mode=morpheme\n"), std::string::npos);
    EXPECT_NE(r.out.find("\nf1=1\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("probe_excess_segments=1\n"), std::string::npos) << r.out;
}

TEST_F(Cli, TrainTuneSegmentEndToEnd) {
    write_bundle_files();
    const std::string b = (dir / "bundle").string();
    auto t = cli::run("train --vocab '" + b + "/vocab.txt' --embeddings '" + b + "/embeddings.vec' --model " +
                          path("model.tsv") + " --dump-rules " + path("rules.tsv") + " --dump-pairs --jobs 2",
                      dir);
    ASSERT_EQ(t.exit_code, 0) << t.err;
    EXPECT_NE(t.err.find("candidate_rules="), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "rules.tsv"));

    auto tu = cli::run("tune --model " + path("model.tsv") + " --gold '" + b + "/gold.tsv' --out " + path("th.txt") +
                           " --grid-r-orth 2,5 --grid-r-sem 0,0.2 --grid-w-sem 0,0.2 --grid-loc-sem 0,0.3,0.6",
                       dir);
    ASSERT_EQ(tu.exit_code, 0) << tu.err;
    EXPECT_NE(tu.out.find("t_r_orth="), std::string::npos);
    EXPECT_NE(tu.out.find("f1="), std::string::npos);

    auto s = cli::run("segment --model " + path("model.tsv") + " --thresholds " + path("th.txt") + " --input '" + b +
                          "/probes.txt'",
                      dir);
    ASSERT_EQ(s.exit_code, 0) << s.err;
    EXPECT_EQ(std::count(s.out.begin(), s.out.end(), '\n'), 4);

    auto sw = cli::run("sweep --model " + path("model.tsv") + " --gold '" + b +
                           "/gold.tsv' --t-r-orth 2 --grid-r-sem 0,0.1,0.2 --grid-w-sem 0,0.5",
                       dir);
    ASSERT_EQ(sw.exit_code, 0) << sw.err;
    EXPECT_EQ(sw.out.substr(0, sw.out.find('\n')), "t_r_sem,t_w_sem,precision,recall");
    EXPECT_EQ(std::count(sw.out.begin(), sw.out.end(), '\n'), 1 + 3 * 2);

    auto curve = cli::run("tune --model " + path("model.tsv") + " --gold '" + b +
                              "/gold.tsv' --grid-r-orth 2 --grid-r-sem 0 --grid-w-sem 0 --grid-loc-sem 0,0.3 "
                              "--curve 0.5,1 --curve-out " + path("curve.csv"),
                          dir);
    ASSERT_EQ(curve.exit_code, 0) << curve.err;
    const auto csv = cli::slurp(dir / "curve.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "fraction,tuning_words,precision,recall,f1");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(Cli, TrainingIsReproducible) {
    write_bundle_files();
    const std::string b = (dir / "bundle").string();
    for (const char* name : {"a.tsv", "b.tsv"}) {
        auto r = cli::run("train --vocab '" + b + "/vocab.txt' --embeddings '" + b + "/embeddings.vec' --model " +
                              path(name) + " --sample-cap 5 --jobs " + (name[0] == 'a' ? "1" : "3"),
                          dir);
        ASSERT_EQ(r.exit_code, 0) << r.err;
    }
    EXPECT_EQ(cli::slurp(dir / "a.tsv"), cli::slurp(dir / "b.tsv"));
}

TEST_F(Cli, SynthWritesBundle) {
    auto r = cli::run("synth --out-dir " + path("syn") + " --stems 5 --suffixes s,er --prefixes re --dim 4 --decoys 2",
                      dir);
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto gold = cli::slurp(dir / "syn" / "gold.tsv");
    EXPECT_EQ(std::count(gold.begin(), gold.end(), '\n'), 15);
    EXPECT_EQ(cli::run("synth --out-dir " + path("syn2") + " --suffixes s,s", dir).exit_code, 2);
}
