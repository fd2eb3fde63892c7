// morse: train, tune, apply and evaluate the morpheme segmenter.
//
// Exit codes: 0 ok, 1 evaluation failure (reserved), 2 usage or input error,
// 3 corrupt model or thresholds file.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "morse/morse.hpp"

namespace fs = std::filesystem;
using namespace morse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitCorrupt = 3;

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return in;
}

/// "-" selects stdin/stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw InputError("cannot write " + path);
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

class Input {
public:
    explicit Input(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ifstream>(open_in(path));
    }
    std::istream& stream() { return file_ ? *file_ : std::cin; }

private:
    std::unique_ptr<std::ifstream> file_;
};

ScoredModel read_model(const std::string& path) {
    auto in = open_in(path);
    return load_model(in);
}

std::vector<GoldEntry> read_gold(const std::string& path) {
    auto in = open_in(path);
    return parse_gold(in);
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Threshold flags shared by segment, eval and sweep: a file plus per-value overrides.
struct ThresholdArgs {
    std::string file;
    std::optional<double> r_sem, r_orth, w_sem, loc_sem;

    void add_to(CLI::App* app) {
        app->add_option("--thresholds", file, "Thresholds file written by `tune`");
        app->add_option("--t-r-sem", r_sem, "Override t_r_sem (rule semantic score threshold)");
        app->add_option("--t-r-orth", r_orth, "Override t_r_orth (rule support size threshold)");
        app->add_option("--t-w-sem", w_sem, "Override t_w_sem (pair semantic score threshold)");
        app->add_option("--t-loc-sem", loc_sem, "Override t_loc_sem (pair cosine threshold)");
    }

    bool given() const { return !file.empty() || r_sem || r_orth || w_sem || loc_sem; }

    Thresholds resolve() const {
        Thresholds t;
        if (!file.empty()) {
            auto in = open_in(file);
            t = load_thresholds(in);
        }
        if (r_sem) t.r_sem = *r_sem;
        if (r_orth) t.r_orth = *r_orth;
        if (w_sem) t.w_sem = *w_sem;
        if (loc_sem) t.loc_sem = *loc_sem;
        t.validate();
        return t;
    }
};

/// Grid axis flags shared by tune and sweep.
struct GridArgs {
    std::string r_sem, r_orth, w_sem, loc_sem;

    void add_to(CLI::App* app) {
        app->add_option("--grid-r-sem", r_sem, "Comma-separated ascending t_r_sem values");
        app->add_option("--grid-r-orth", r_orth, "Comma-separated ascending t_r_orth values");
        app->add_option("--grid-w-sem", w_sem, "Comma-separated ascending t_w_sem values");
        app->add_option("--grid-loc-sem", loc_sem, "Comma-separated ascending t_loc_sem values");
    }

    Grid resolve() const {
        Grid g = Grid::defaults();
        if (!r_sem.empty()) g.axis(ThresholdName::RSem) = parse_axis(r_sem);
        if (!r_orth.empty()) g.axis(ThresholdName::ROrth) = parse_axis(r_orth);
        if (!w_sem.empty()) g.axis(ThresholdName::WSem) = parse_axis(w_sem);
        if (!loc_sem.empty()) g.axis(ThresholdName::LocSem) = parse_axis(loc_sem);
        g.validate();
        return g;
    }
};

void write_thresholds_report(std::ostream& out, const Thresholds& t) { save_thresholds(out, t); }

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string vocab, embeddings, model, dump_rules;
    std::size_t vocab_size = 1000000;
    MiningConfig mining;
    std::uint64_t seed = 42;
    bool lowercase = false, prune = false, dump_pairs = false;
    unsigned jobs = 0;
};

int cmd_train(const TrainArgs& a) {
    a.mining.validate();
    if (!fs::exists(a.vocab)) throw InputError("vocabulary file not found: " + a.vocab);
    if (!fs::exists(a.embeddings)) throw InputError("embeddings file not found: " + a.embeddings);
    const auto t0 = std::chrono::steady_clock::now();

    auto vin = open_in(a.vocab);
    Vocabulary vocab = load_vocab(vin, a.vocab_size, a.lowercase);
    auto ein = open_in(a.embeddings);
    EmbeddingTable emb = load_embeddings(ein, a.lowercase);
    std::size_t removed = 0;
    vocab = restrict_vocab(vocab, emb, &removed);
    std::clog << "vocabulary: " << vocab.size() << " words (" << removed << " without embeddings removed), dim "
              << emb.dim() << "\n";

    const auto t1 = std::chrono::steady_clock::now();
    RuleTable table = mine(vocab, a.mining);
    const auto stats = mining_stats(table);
    std::clog << "candidate_rules=" << stats.candidate_rules << "\n"
              << "candidate_pairs=" << stats.candidate_pairs << "\n"
              << "mining_seconds=" << elapsed_s(t1) << "\n";
    if (!a.dump_rules.empty()) {
        Output out(a.dump_rules);
        write_rule_table(out.stream(), table, a.dump_pairs);
    }

    const auto t2 = std::chrono::steady_clock::now();
    ScoringOptions opt;
    opt.seed = a.seed;
    opt.prune_singletons = a.prune;
    opt.jobs = a.jobs;
    ScoredModel model = score_all(table, emb, a.mining, opt);
    std::clog << "scored_rules=" << model.rules.size() << "\n"
              << "scoring_seconds=" << elapsed_s(t2) << "\n";

    Output out(a.model);
    save_model(out.stream(), model);
    std::clog << "total_seconds=" << elapsed_s(t0) << "\n";
    return kExitOk;
}

struct TuneArgs {
    std::string model, gold, out, report, curve, curve_out;
    GridArgs grid;
    bool no_refine = false;
    std::uint64_t seed = 42;
    unsigned jobs = 0;
};

int cmd_tune(const TuneArgs& a) {
    const Grid grid = a.grid.resolve();
    std::vector<double> fractions;
    if (!a.curve.empty()) {
        fractions = parse_axis(a.curve);
        for (double f : fractions)
            if (!(f > 0 && f <= 1)) throw InputError("--curve fractions must lie in (0, 1]");
    }
    const auto gold = read_gold(a.gold);
    const ScoredModel model = read_model(a.model);
    TuneOptions opt;
    opt.refine = !a.no_refine;
    opt.jobs = a.jobs;

    const auto t0 = std::chrono::steady_clock::now();
    const TuneResult fit = tune(model, gold, grid, opt);
    std::clog << "grid_points=" << fit.points_evaluated << " tuning_seconds=" << elapsed_s(t0) << "\n";
    if (fit.metrics.precision_undefined) std::clog << "warning: no boundaries predicted; precision reported as 1\n";
    if (!a.out.empty()) {
        Output out(a.out);
        save_thresholds(out.stream(), fit.thresholds);
    }
    Output report(a.report);
    write_thresholds_report(report.stream(), fit.thresholds);
    write_report(report.stream(), fit.metrics);

    if (!fractions.empty()) {
        const auto curve = tuning_curve(model, gold, fractions, grid, a.seed, opt);
        Output cout(a.curve_out);
        cout.stream() << "fraction,tuning_words,precision,recall,f1\n";
        for (const auto& p : curve)
            cout.stream() << detail::format_real(p.fraction) << ',' << p.tuning_words << ','
                          << detail::format_real(p.heldout.precision) << ',' << detail::format_real(p.heldout.recall)
                          << ',' << detail::format_real(p.heldout.f1) << '\n';
    }
    return kExitOk;
}

struct SegmentArgs {
    std::string model, input = "-", output = "-";
    ThresholdArgs th;
    bool canonical = false;
};

int cmd_segment(const SegmentArgs& a) {
    if (!a.th.given()) throw InputError("segment needs --thresholds or --t-* values");
    const Thresholds th = a.th.resolve();
    const ScoredModel model = read_model(a.model);
    Input in(a.input);
    Output out(a.output);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in.stream(), line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty() || line.find('\t') != std::string::npos || line.find(' ') != std::string::npos ||
            !utf8::is_valid(line)) {
            std::clog << "skipping malformed input at line " << line_no << "\n";
            continue;
        }
        out.stream() << format_segmentation(segment(model, line, th), a.canonical) << '\n';
    }
    return kExitOk;
}

struct EvalArgs {
    std::string gold, pred, model, mode = "boundary", probes, output = "-";
    ThresholdArgs th;
};

struct Predictions {
    std::unordered_map<std::string, BoundarySet> boundaries;
    std::unordered_map<std::string, Analysis> morphemes;
};

/// Reads `word<TAB>surface[<TAB>canonical]` lines as written by `segment`.
Predictions read_predictions(const std::string& path) {
    auto in = open_in(path);
    Predictions p;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
        if (cols.size() < 2 || cols.size() > 3) throw line_error("malformed prediction", line_no);
        auto surface = split_surface(cols[1]);
        auto b = surface_boundaries(surface, cols[0]);
        if (!b) throw line_error("prediction does not spell the word", line_no);
        p.boundaries[cols[0]] = *b;
        if (cols.size() == 3) {
            auto toks = detail::split_ws(cols[2]);
            p.morphemes[cols[0]] = Analysis(toks.begin(), toks.end());
        } else {
            p.morphemes[cols[0]] = surface;
        }
    }
    return p;
}

int cmd_eval(const EvalArgs& a) {
    if (a.mode != "boundary" && a.mode != "morpheme") throw InputError("--mode must be boundary or morpheme");
    if (a.pred.empty() == a.model.empty()) throw InputError("eval needs exactly one of --pred or --model");
    const auto gold = read_gold(a.gold);
    std::vector<std::string> probe_words;
    if (!a.probes.empty()) {
        auto in = open_in(a.probes);
        for (std::string w; std::getline(in, w);) {
            detail::strip_cr(w);
            if (!w.empty()) probe_words.push_back(w);
        }
    }

    Predictions pred;
    if (!a.pred.empty()) {
        pred = read_predictions(a.pred);
    } else {
        const Thresholds th = a.th.resolve();
        const ScoredModel model = read_model(a.model);
        auto add = [&](const std::string& w) {
            if (pred.boundaries.count(w)) return;
            auto seg = segment(model, w, th);
            pred.boundaries[w] = seg.boundaries;
            pred.morphemes[w] = seg.canonical;
        };
        for (const auto& g : gold) add(g.word);
        for (const auto& w : probe_words) add(w);
    }

    const Metrics m = a.mode == "boundary" ? boundary_eval(pred.boundaries, gold) : morpheme_eval(pred.morphemes, gold);
    if (m.precision_undefined) std::clog << "warning: no positives predicted; precision reported as 1\n";
    if (m.skipped_non_surface) std::clog << "skipped " << m.skipped_non_surface << " non-surface analyses\n";
    Output out(a.output);
    out.stream() << "mode=" << a.mode << '\n';
    write_report(out.stream(), m);
    if (!probe_words.empty()) {
        out.stream() << "probe_words=" << probe_words.size() << '\n'
                     << "probe_excess_segments=" << composition_probe(pred.boundaries, probe_words) << '\n';
    }
    return kExitOk;
}

struct SweepArgs {
    std::string model, gold, axis1 = "t_r_sem", axis2 = "t_w_sem", output = "-";
    ThresholdArgs th;
    GridArgs grid;
    unsigned jobs = 0;
};

int cmd_sweep(const SweepArgs& a) {
    const auto n1 = parse_threshold_name(a.axis1), n2 = parse_threshold_name(a.axis2);
    if (n1 == n2) throw InputError("--axis1 and --axis2 must differ");
    const Grid grid = a.grid.resolve();
    const Thresholds base = a.th.resolve();
    const auto gold = read_gold(a.gold);
    const ScoredModel model = read_model(a.model);
    const auto rows = sweep(model, gold, n1, n2, grid, base, a.jobs);
    Output out(a.output);
    write_sweep_csv(out.stream(), n1, n2, rows);
    return kExitOk;
}

struct SynthArgs {
    std::string out_dir, suffixes = "ing,ed,ly,ness,ment", prefixes;
    SynthSpec spec;
};

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');)
        if (!tok.empty()) out.push_back(tok);
    return out;
}

int cmd_synth(SynthArgs a) {
    a.spec.rules.clear();
    for (const auto& s : split_commas(a.suffixes)) a.spec.rules.push_back({AffixKind::Suffix, s});
    for (const auto& p : split_commas(a.prefixes)) a.spec.rules.push_back({AffixKind::Prefix, p});
    const auto bundle = generate(a.spec);
    write_bundle(a.out_dir, bundle);
    std::clog << "words=" << bundle.vocab.size() << " gold=" << bundle.gold.size()
              << " probes=" << bundle.probes.size() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised morpheme segmentation from affix rules and word embeddings"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Mine affix rules, score them against embeddings, write a model");
    c_train->add_option("--vocab", train.vocab, "Vocabulary file: word[<TAB>count] per line")->required();
    c_train->add_option("--embeddings", train.embeddings, "Embeddings in word2vec text format")->required();
    c_train->add_option("--model", train.model, "Output model file")->required();
    c_train->add_option("--vocab-size", train.vocab_size, "Maximum vocabulary size")->capture_default_str();
    c_train->add_option("--min-stem", train.mining.min_stem, "Minimum stem length")->capture_default_str();
    c_train->add_option("--max-affix", train.mining.max_affix, "Maximum affix length")->capture_default_str();
    c_train->add_option("--sample-cap", train.mining.max_support, "Support-set size above which semantic scores are sampled")
        ->capture_default_str();
    c_train->add_option("--seed", train.seed, "Sampling seed")->capture_default_str();
    c_train->add_flag("--lowercase", train.lowercase, "Lowercase vocabulary and embedding keys");
    c_train->add_flag("--prune-singletons", train.prune, "Drop rules supported by a single pair");
    c_train->add_option("--dump-rules", train.dump_rules, "Write the mined rule table to this file");
    c_train->add_flag("--dump-pairs", train.dump_pairs, "Include support pairs in --dump-rules output");
    c_train->add_option("--jobs", train.jobs, "Worker threads (0 = all cores)")->capture_default_str();

    TuneArgs tune_args;
    auto* c_tune = app.add_subcommand("tune", "Fit thresholds on gold segmentations by grid search");
    c_tune->add_option("--model", tune_args.model, "Model file")->required();
    c_tune->add_option("--gold", tune_args.gold, "Gold segmentation file")->required();
    c_tune->add_option("--out", tune_args.out, "Write chosen thresholds to this file");
    c_tune->add_option("--report", tune_args.report, "Report destination (default stdout)");
    tune_args.grid.add_to(c_tune);
    c_tune->add_flag("--no-refine", tune_args.no_refine, "Skip the local refinement pass");
    c_tune->add_option("--curve", tune_args.curve, "Tuning-set fractions for a learning curve, e.g. 0.2,0.5,1");
    c_tune->add_option("--curve-out", tune_args.curve_out, "CSV destination for --curve (default stdout)");
    c_tune->add_option("--seed", tune_args.seed, "Shuffle seed for --curve")->capture_default_str();
    c_tune->add_option("--jobs", tune_args.jobs, "Worker threads (0 = all cores)")->capture_default_str();

    SegmentArgs seg;
    auto* c_seg = app.add_subcommand("segment", "Segment words read one per line");
    c_seg->add_option("--model", seg.model, "Model file")->required();
    seg.th.add_to(c_seg);
    c_seg->add_option("--input", seg.input, "Word list (default stdin)");
    c_seg->add_option("--output", seg.output, "Destination (default stdout)");
    c_seg->add_flag("--canonical", seg.canonical, "Add a third column with canonical morphemes");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Score predictions against gold segmentations");
    c_eval->add_option("--gold", ev.gold, "Gold segmentation file")->required();
    c_eval->add_option("--pred", ev.pred, "Predictions in `segment` output format");
    c_eval->add_option("--model", ev.model, "Segment the gold words with this model instead of --pred");
    ev.th.add_to(c_eval);
    c_eval->add_option("--mode", ev.mode, "boundary or morpheme")->capture_default_str();
    c_eval->add_option("--probes", ev.probes, "Words that must stay whole; reports excess segments");
    c_eval->add_option("--output", ev.output, "Report destination (default stdout)");

    SweepArgs sw;
    auto* c_sweep = app.add_subcommand("sweep", "Precision/recall over a two-threshold grid, as CSV");
    c_sweep->add_option("--model", sw.model, "Model file")->required();
    c_sweep->add_option("--gold", sw.gold, "Gold segmentation file")->required();
    c_sweep->add_option("--axis1", sw.axis1, "First swept threshold")->capture_default_str();
    c_sweep->add_option("--axis2", sw.axis2, "Second swept threshold")->capture_default_str();
    sw.th.add_to(c_sweep);
    sw.grid.add_to(c_sweep);
    c_sweep->add_option("--output", sw.output, "CSV destination (default stdout)");
    c_sweep->add_option("--jobs", sw.jobs, "Worker threads (0 = all cores)")->capture_default_str();

    SynthArgs syn;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic bundle with planted morphology");
    c_synth->add_option("--out-dir", syn.out_dir, "Output directory")->required();
    c_synth->add_option("--stems", syn.spec.n_stems, "Number of stems")->capture_default_str();
    c_synth->add_option("--suffixes", syn.suffixes, "Comma-separated planted suffixes")->capture_default_str();
    c_synth->add_option("--prefixes", syn.prefixes, "Comma-separated planted prefixes");
    c_synth->add_option("--dim", syn.spec.dim, "Embedding dimension")->capture_default_str();
    c_synth->add_option("--noise", syn.spec.noise_sigma, "Per-component noise relative to offset norm")
        ->capture_default_str();
    c_synth->add_option("--decoys", syn.spec.n_decoys, "Number of non-compositional probe words")
        ->capture_default_str();
    c_synth->add_option("--seed", syn.spec.seed, "Generator seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*c_train) return cmd_train(train);
        if (*c_tune) return cmd_tune(tune_args);
        if (*c_seg) return cmd_segment(seg);
        if (*c_eval) return cmd_eval(ev);
        if (*c_sweep) return cmd_sweep(sw);
        if (*c_synth) return cmd_synth(syn);
    } catch (const CorruptArtifact& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorrupt;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
