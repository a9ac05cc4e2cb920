// SPDX-License-Identifier: Apache-2.0
//
// bpx: partition, train, predict, evaluate and sweep from the command line.
//
// Exit codes: 0 success, 1 usage / parse / I/O errors, 2 structural or
// optimisation errors (dimension mismatches, empty lambda interval, ...).

#include <chrono>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bpx/bp.hpp"
#include "bpx/error.hpp"
#include "bpx/ingest.hpp"
#include "bpx/lambda_selection.hpp"
#include "bpx/linear.hpp"
#include "bpx/metrics.hpp"
#include "bpx/pipeline.hpp"
#include "bpx/serialize.hpp"
#include "bpx/synth.hpp"

namespace fs = std::filesystem;
using namespace bpx;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    unsigned threads = 1;
    std::uint64_t seed = 0;
    bool no_normalize = false;
};

struct PartitionFlags {
    std::string lambda = "1";   // a number, or "cv" for cross-validated selection
    std::string q = "auto";
    std::size_t q_max = 16;
    std::size_t max_alt_iters = 100;
    double conv_tol = 1e-5;
    std::size_t min_labels = 1;
    std::vector<double> cv_lambdas;
    double cv_tolerance = 0.02;
    std::size_t cv_folds = 5;
    std::size_t cv_k = 1;
};

struct SolverFlags {
    double c = 1.0;
    double tol = 1e-4;
    std::size_t max_epochs = 100;
    bool balance = false;
    double prune = 1e-6;
};

double elapsed(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    return out;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    return in;
}

fs::path with_suffix(const std::string& prefix, const std::string& suffix) { return fs::path(prefix + suffix); }

Dataset load(const std::string& path, const Common& common) {
    auto data = load_dataset(path);
    if (!common.no_normalize) data.features = data.features.normalized_rows();
    return data;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--seed", c.seed, "Random seed");
    app->add_flag("--no-normalize", c.no_normalize, "Keep feature rows as read (default: unit L2 rows)");
}

void add_partition_flags(CLI::App* app, PartitionFlags& f) {
    app->add_option("--lambda", f.lambda, "Cluster-size penalty, or 'cv' to select by cross-validation");
    app->add_option("--q", f.q, "Number of paired clusters, or 'auto'");
    app->add_option("--q-max", f.q_max, "Upper bound for --q auto");
    app->add_option("--max-alt-iters", f.max_alt_iters, "Alternating iteration limit");
    app->add_option("--conv-tol", f.conv_tol, "Stop when the objective changes by less than this");
    app->add_option("--min-labels", f.min_labels, "Minimum labels per label cluster");
    app->add_option("--cv-lambdas", f.cv_lambdas, "Candidates for --lambda cv (default 1e-3..1e3 grid)")
        ->delimiter(',');
    app->add_option("--cv-tolerance", f.cv_tolerance, "Absolute accuracy loss tolerated per fold");
    app->add_option("--cv-folds", f.cv_folds, "Folds for --lambda cv");
    app->add_option("--cv-k", f.cv_k, "Accuracy metric for --lambda cv is P@k");
}

void add_solver_flags(CLI::App* app, SolverFlags& f) {
    app->add_option("--C", f.c, "Inverse regularisation strength");
    app->add_option("--tol", f.tol, "Relative gradient-norm tolerance");
    app->add_option("--max-epochs", f.max_epochs, "Newton iteration limit");
    app->add_flag("--balance", f.balance, "Re-weight positive and negative examples per class");
    app->add_option("--prune", f.prune, "Drop weights below this magnitude");
}

TrainConfig train_config(const SolverFlags& f, const Common& c) {
    TrainConfig t;
    t.reg_strength = f.c;
    t.tol = f.tol;
    t.max_epochs = f.max_epochs;
    t.balance_classes = f.balance;
    t.prune_threshold = f.prune;
    t.seed = c.seed;
    t.threads = c.threads;
    return t;
}

double parse_double(const std::string& s, const char* what) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw UsageError(std::string("invalid ") + what + ": " + s);
    return v;
}

BpConfig bp_config(const PartitionFlags& f, const Common& c) {
    BpConfig b;
    if (f.lambda != "cv") b.lambda = parse_double(f.lambda, "--lambda");
    if (f.q != "auto") {
        std::size_t q = 0;
        const auto r = std::from_chars(f.q.data(), f.q.data() + f.q.size(), q);
        if (r.ec != std::errc() || r.ptr != f.q.data() + f.q.size()) throw UsageError("invalid --q: " + f.q);
        b.q = q;
    }
    b.q_max = f.q_max;
    b.max_alt_iters = f.max_alt_iters;
    b.conv_tol = f.conv_tol;
    b.min_labels_per_cluster = f.min_labels;
    b.seed = c.seed;
    b.threads = c.threads;
    return b;
}

// Resolves --lambda cv: the largest candidate inside the intersection of the
// per-fold intervals, i.e. the fastest model within tolerance.
void resolve_lambda(const Dataset& data, const PartitionFlags& f, BpConfig& bp, const TrainConfig& train,
                    const std::string& table_path) {
    if (f.lambda != "cv") return;
    LambdaSelectionOptions opt;
    if (!f.cv_lambdas.empty()) opt.candidates = f.cv_lambdas;
    opt.tolerance = f.cv_tolerance;
    opt.folds = f.cv_folds;
    opt.k = f.cv_k;
    opt.seed = bp.seed;
    BpConfig probe = bp;
    if (!probe.q) {
        // fix q first so each fold compares lambdas at the same cluster count
        probe.q = search_q(data, bp, bp.q_max).chosen_q;
    }
    try {
        const auto sel = select_lambda(data, opt, probe, train);
        auto out = open_out(table_path);
        write_lambda_table(out, sel);
        bp.lambda = sel.lambda_hi();
        std::cerr << "lambda interval [" << sel.lambda_lo() << ", " << sel.lambda_hi() << "], using " << bp.lambda
                  << "\n";
    } catch (const LambdaSelectionError& e) {
        auto out = open_out(table_path);
        write_lambda_table(out, e.partial());
        throw;
    }
}

void warn_degenerate(std::size_t q) {
    if (q == 1) std::cerr << "warning: q = 1 routes everything to one cluster; expect no prediction speedup\n";
}

// ---------------------------------------------------------------------------

struct PartitionCmd {
    Common common;
    PartitionFlags flags;
    SolverFlags solver;
    std::string train;
    std::string out = "partition";
    std::size_t row_limit = 100;

    void run() const {
        const auto data = load(train, common);
        auto bp = bp_config(flags, common);
        resolve_lambda(data, flags, bp, train_config(solver, common), out + "_lambda.csv");
        const auto start = std::chrono::steady_clock::now();
        Partition p;
        if (bp.q) {
            warn_degenerate(*bp.q);
            p = fit_partition(data, bp);
        } else {
            auto report = search_q(data, bp, bp.q_max);
            auto csv = open_out(with_suffix(out, "_qsearch.csv"));
            write_q_search_csv(csv, report);
            p = std::move(report.chosen_partition);
        }
        std::cerr << "data partitioning: " << elapsed(start) << " s\n";
        std::cout << "q = " << p.q << "\n";

        save_binary(with_suffix(out, ".bpxp"), p);
        {
            auto js = open_out(with_suffix(out, ".json"));
            write_partition_json(js, p);
        }
        {
            auto trace = open_out(with_suffix(out, "_trace.csv"));
            trace << "iteration,objective\n";
            for (std::size_t t = 0; t < p.objective_trace.size(); ++t) trace << t + 1 << ',' << p.objective_trace[t] << '\n';
        }
        const auto img = export_permuted_matrix(data.labels, p, row_limit);
        auto pgm = open_out(with_suffix(out, ".pgm"), true);
        write_pgm(pgm, img);
        auto rows = open_out(with_suffix(out, "_rows.csv"));
        write_rows_csv(rows, img);
        auto cols = open_out(with_suffix(out, "_cols.csv"));
        write_cols_csv(cols, img);
    }
};

struct TrainCmd {
    Common common;
    PartitionFlags flags;
    SolverFlags solver;
    std::string train;
    std::string partition;
    std::string out = "model.bpxm";
    bool naive = false;

    void run() const {
        const auto data = load(train, common);
        const auto tc = train_config(solver, common);
        if (naive) {
            const auto start = std::chrono::steady_clock::now();
            const auto model = train_naive(data, tc);
            std::cerr << "training: " << elapsed(start) << " s\n";
            save_binary(out, model);
            return;
        }
        TrainTimings timings;
        BpModel model;
        if (!partition.empty()) {
            auto p = load_partition(partition);
            warn_degenerate(p.q);
            model = train_bp_with_partition(data, std::move(p), tc, &timings);
        } else {
            auto bp = bp_config(flags, common);
            resolve_lambda(data, flags, bp, tc, out + "_lambda.csv");
            if (bp.q) warn_degenerate(*bp.q);
            model = train_bp(data, bp, tc, &timings);
        }
        model.normalize_features = !common.no_normalize;
        std::cerr << "data partitioning: " << timings.partition_seconds << " s\n"
                  << "training: " << timings.training_seconds << " s\n";
        std::cout << "q = " << model.partition.q << "\n";
        save_binary(out, model);
    }
};

struct PredictCmd {
    Common common;
    std::string model;
    std::string test;
    std::string out = "predictions";
    std::size_t k = 5;

    void run() const {
        auto in = open_in(model);
        const auto kind = peek_payload_kind(in);
        auto data = load_dataset(test);
        PredictionResult result;
        if (kind == PayloadKind::bp_model) {
            const auto m = load_bp_model(model);
            const auto x = m.normalize_features ? data.features.normalized_rows() : data.features;
            result = predict_bp(m, x, k, common.threads);
        } else if (kind == PayloadKind::linear_model) {
            const auto m = load_linear_model(model);
            const auto x = common.no_normalize ? data.features : data.features.normalized_rows();
            result = predict_naive(m, x, k, common.threads);
        } else {
            throw ParseError(model + " holds neither a BP model nor a linear model", 0);
        }
        auto preds = open_out(with_suffix(out, ".txt"));
        write_predictions(preds, result);
        auto mults = open_out(with_suffix(out, "_mults.csv"));
        write_mults_csv(mults, result);
    }
};

struct EvalCmd {
    std::string predictions;
    std::string test;
    std::string train;
    std::string mults;
    std::vector<std::size_t> ks{1, 3, 5};
    double naive_cost = 0.0;
    std::string out;

    void run() const {
        const auto truth = load_dataset(test).labels;
        auto pin = open_in(predictions);
        std::optional<std::ifstream> min;
        if (!mults.empty()) min = open_in(mults);
        const auto result = read_predictions(pin, min ? &*min : nullptr);
        if (result.size() != truth.rows()) {
            throw StructuralError("predictions cover " + std::to_string(result.size()) + " rows, test set has " +
                                  std::to_string(truth.rows()));
        }
        std::vector<double> props;
        if (!train.empty()) {
            const auto tr = load_dataset(train);
            const auto counts = column_sums(tr.labels);
            const std::vector<std::uint64_t> c(counts.begin(), counts.end());
            props = label_propensities(c, tr.num_instances());
        }
        const double cost = mults.empty() ? 0.0 : (naive_cost > 0.0 ? naive_cost : static_cast<double>(truth.cols()));
        const auto rows = evaluate(truth, result, props, ks, cost);
        if (!out.empty()) {
            auto csv = open_out(out);
            write_metrics_csv(csv, rows);
        }
        write_summary_table(std::cout, rows);
    }
};

struct SweepCmd {
    Common common;
    PartitionFlags flags;
    SolverFlags solver;
    std::string train;
    std::string test;
    std::vector<double> lambdas;
    std::string out;

    void run() const {
        if (lambdas.empty()) throw UsageError("--lambdas needs at least one value");
        const auto data = load(train, common);
        const auto test_data = load(test, common);
        const auto tc = train_config(solver, common);
        std::ostringstream csv;
        csv.precision(17);
        csv << "lambda,q,P@1,P@3,P@5,speedup\n";
        for (double lambda : lambdas) {
            auto bp = bp_config(flags, common);
            bp.lambda = lambda;
            const auto model = train_bp(data, bp, tc);
            const auto pred = predict_bp(model, test_data.features, 5, common.threads);
            csv << lambda << ',' << model.partition.q;
            for (std::size_t k : {1u, 3u, 5u}) csv << ',' << precision_at_k(test_data.labels, pred.top_labels, k);
            csv << ',' << speedup(pred, static_cast<double>(data.num_labels())) << '\n';
            std::cerr << "lambda " << lambda << " done\n";
        }
        if (out.empty()) {
            std::cout << csv.str();
        } else {
            auto f = open_out(out);
            f << csv.str();
        }
    }
};

struct SynthCmd {
    PlantedSpec spec;
    std::string out = "planted";

    void run() const {
        const auto g = generate(spec);
        save_dataset(g.train, with_suffix(out, "_train.txt"));
        if (spec.test_instances_per_block > 0) save_dataset(g.test, with_suffix(out, "_test.txt"));
        save_binary(with_suffix(out, "_truth.bpxp"), g.truth);
        auto js = open_out(with_suffix(out, "_truth.json"));
        write_partition_json(js, g.truth);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-wise partitioning for extreme multi-label classification"};
    app.set_config("--config", "", "TOML file with default option values (command-line flags win)");
    app.require_subcommand(1);

    PartitionCmd part;
    auto* p = app.add_subcommand("partition", "Cluster instances and labels into q pairs");
    p->add_option("train", part.train, "Training data file")->required();
    p->add_option("--out", part.out, "Output prefix");
    p->add_option("--row-limit", part.row_limit, "Rows per cluster in the permuted-matrix image");
    add_common(p, part.common);
    add_partition_flags(p, part.flags);
    add_solver_flags(p, part.solver);

    TrainCmd train;
    auto* t = app.add_subcommand("train", "Train router and per-cluster classifiers");
    t->add_option("train", train.train, "Training data file")->required();
    t->add_option("--partition", train.partition, "Partition file from 'bpx partition' (otherwise partition here)");
    t->add_option("--out", train.out, "Model file");
    t->add_flag("--naive", train.naive, "Train the plain one-vs-all baseline over all labels");
    add_common(t, train.common);
    add_partition_flags(t, train.flags);
    add_solver_flags(t, train.solver);

    PredictCmd predict;
    auto* pr = app.add_subcommand("predict", "Rank labels for a test set");
    pr->add_option("model", predict.model, "Model file")->required();
    pr->add_option("test", predict.test, "Test data file")->required();
    pr->add_option("--k", predict.k, "Labels per instance")->check(CLI::PositiveNumber);
    pr->add_option("--out", predict.out, "Output prefix");
    add_common(pr, predict.common);

    EvalCmd eval;
    auto* e = app.add_subcommand("eval", "Score predictions");
    e->add_option("predictions", eval.predictions, "Predictions file")->required();
    e->add_option("test", eval.test, "Test data file")->required();
    e->add_option("--train", eval.train, "Training data, for propensity-scored precision");
    e->add_option("--mults", eval.mults, "Multiplication CSV from 'bpx predict', for speedup");
    e->add_option("--k", eval.ks, "Cut-offs")->delimiter(',');
    e->add_option("--naive-cost", eval.naive_cost, "Multiplications of the baseline per instance (default m)");
    e->add_option("--out", eval.out, "Metrics CSV");

    SweepCmd sweep;
    auto* s = app.add_subcommand("sweep", "Precision and speedup as a function of lambda");
    s->add_option("train", sweep.train, "Training data file")->required();
    s->add_option("test", sweep.test, "Test data file")->required();
    s->add_option("--lambdas", sweep.lambdas, "Comma-separated lambda values")->delimiter(',')->required();
    s->add_option("--out", sweep.out, "CSV file (default stdout)");
    add_common(s, sweep.common);
    add_partition_flags(s, sweep.flags);
    add_solver_flags(s, sweep.solver);

    SynthCmd synth;
    auto* y = app.add_subcommand("synth", "Generate planted block-diagonal data");
    y->add_option("--q-true", synth.spec.q_true, "Planted blocks");
    y->add_option("--instances-per-block", synth.spec.instances_per_block);
    y->add_option("--test-instances-per-block", synth.spec.test_instances_per_block);
    y->add_option("--labels-per-block", synth.spec.labels_per_block);
    y->add_option("--num-labels", synth.spec.num_labels, "Label capacity (0: exactly what the blocks need)");
    y->add_option("--d", synth.spec.d, "Feature dimension");
    y->add_option("--density", synth.spec.in_block_density);
    y->add_option("--noise", synth.spec.off_block_noise);
    y->add_option("--popular", synth.spec.popular_labels);
    y->add_option("--separation", synth.spec.feature_separation);
    y->add_option("--seed", synth.spec.seed);
    y->add_option("--out", synth.out, "Output prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*p) part.run();
        if (*t) train.run();
        if (*pr) predict.run();
        if (*e) eval.run();
        if (*s) sweep.run();
        if (*y) synth.run();
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const ParseError& err) {
        std::cerr << "parse error: " << err.what() << "\n";
        return 1;
    } catch (const IoError& err) {
        std::cerr << "i/o error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
