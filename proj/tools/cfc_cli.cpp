// Command-line front end: train / evaluate / benchmark / rules /
// inspect-checkpoint / make-synthetic over the cfc library.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfc/cfc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string dataset;
    std::string label_column = "label";
    double lambda = 0.01;
    std::string delta = "1";     // numeric or "auto"
    double gamma = 1.0;
    int t_max = -1;
    int minority = -1;
    double cost_lo = 0.0, cost_hi = 0.0; // random costs when hi > 0
    std::uint64_t cost_seed = 0;
    double train_frac = 0.6, val_frac = 0.2, test_frac = 0.2;
    std::uint64_t seed = 1;
    bool no_normalize = false;
};

struct TrainOpts {
    int epochs = 200;
    double lr = 1e-3;
    double entropy_weight = 0.01;
    double value_loss_weight = 1.0;
    int hidden = 256;
    int eval_every = 5;
    bool skip_mcts = false;
    int sims = 200;
    double c_puct = 1.5;
    int iterations = 20;
    int samples_per_iter = 512;
    double mcts_lr = 1e-3;
    int rule_bins = 3;
};

void add_common(CLI::App* cmd, CommonOpts& c, bool needs_dataset = true) {
    auto* ds = cmd->add_option("--dataset", c.dataset, "CSV dataset path");
    if (needs_dataset) ds->required()->check(CLI::ExistingFile);
    cmd->add_option("--label", c.label_column, "label column name");
    cmd->add_option("--lambda", c.lambda, "cost scale");
    cmd->add_option("--delta", c.delta, "majority-class reward weight, or 'auto'");
    cmd->add_option("--gamma", c.gamma, "discount factor");
    cmd->add_option("--t-max", c.t_max, "max acquisitions per episode (-1: all features)");
    cmd->add_option("--minority", c.minority, "minority class id for delta weighting");
    cmd->add_option("--random-cost-lo", c.cost_lo, "random cost lower bound");
    cmd->add_option("--random-cost-hi", c.cost_hi, "random cost upper bound (enables random costs)");
    cmd->add_option("--cost-seed", c.cost_seed, "random cost seed (default: global seed)");
    cmd->add_option("--train-frac", c.train_frac, "train fraction");
    cmd->add_option("--val-frac", c.val_frac, "validation fraction");
    cmd->add_option("--test-frac", c.test_frac, "test fraction");
    cmd->add_option("--seed", c.seed, "global seed; sub-streams derive from it");
    cmd->add_flag("--no-normalize", c.no_normalize, "skip z-score normalization");
    cmd->set_config("--config");
}

struct Prepared {
    cfc::SplitResult sp;
    cfc::RewardConfig rc;
    cfc::Dataset full;
};

Prepared prepare(const CommonOpts& c) {
    Prepared out;
    out.full = cfc::load_csv(c.dataset, c.label_column);
    if (c.cost_hi > 0)
        out.full.costs = cfc::assign_random_costs(
            out.full.p, c.cost_lo, c.cost_hi, c.cost_seed ? c.cost_seed : c.seed);

    out.sp = cfc::split(out.full, {c.train_frac, c.val_frac, c.test_frac, c.seed});
    if (!c.no_normalize) {
        auto st = cfc::fit_normalizer(out.sp.train);
        out.sp.train = cfc::apply_normalizer(st, std::move(out.sp.train));
        out.sp.val = cfc::apply_normalizer(st, std::move(out.sp.val));
        out.sp.test = cfc::apply_normalizer(st, std::move(out.sp.test));
    }

    out.rc.lambda = c.lambda;
    out.rc.gamma = c.gamma;
    if (c.delta == "auto") {
        if (out.full.class_count != 2)
            throw cfc::ValidationError("--delta auto requires a binary dataset");
        int minority = c.minority;
        if (minority < 0) {
            long c1 = std::count(out.sp.train.y.begin(), out.sp.train.y.end(), 1);
            minority = 2 * c1 < out.sp.train.n ? 1 : 0;
        }
        out.rc.minority_class = minority;
        out.rc.delta = cfc::imbalance_ratio(out.sp.train, minority);
    } else {
        out.rc.delta = std::stod(c.delta);
        out.rc.minority_class = c.minority;
    }
    out.rc.validate();
    return out;
}

json report_to_json(const cfc::EvalReport& rep) {
    json j;
    j["accuracy"] = rep.accuracy;
    j["mean_cost"] = rep.mean_cost;
    j["mean_features"] = rep.mean_features;
    j["objective"] = rep.objective;
    if (rep.auc) j["auc"] = *rep.auc;
    j["confusion"] = rep.confusion;
    return j;
}

void write_manifest(const fs::path& dir, const CommonOpts& c, const TrainOpts* t,
                    const std::string& command) {
    json j;
    j["schema"] = "cfc-manifest";
    j["version"] = 1;
    j["command"] = command;
    j["dataset"] = c.dataset;
    j["label"] = c.label_column;
    j["lambda"] = c.lambda;
    j["delta"] = c.delta;
    j["gamma"] = c.gamma;
    j["t_max"] = c.t_max;
    j["minority"] = c.minority;
    j["seed"] = c.seed;
    j["split"] = {c.train_frac, c.val_frac, c.test_frac};
    j["normalize"] = !c.no_normalize;
    if (c.cost_hi > 0) j["random_costs"] = {c.cost_lo, c.cost_hi, c.cost_seed ? c.cost_seed : c.seed};
    if (t) {
        j["epochs"] = t->epochs;
        j["lr"] = t->lr;
        j["entropy_weight"] = t->entropy_weight;
        j["hidden"] = t->hidden;
        j["skip_mcts"] = t->skip_mcts;
        j["sims"] = t->sims;
        j["c_puct"] = t->c_puct;
        j["iterations"] = t->iterations;
        j["samples_per_iteration"] = t->samples_per_iter;
    }
    std::ofstream(dir / "manifest.json") << j.dump(2) << "\n";
}

void write_train_log(const fs::path& path, const std::vector<cfc::EpochRecord>& log) {
    std::ofstream out(path);
    for (const auto& r : log) {
        json j;
        j["epoch"] = r.epoch;
        j["mean_reward"] = r.mean_reward;
        j["val_accuracy"] = r.val_accuracy;
        j["val_mean_cost"] = r.val_mean_cost;
        j["entropy"] = r.entropy;
        out << j.dump() << "\n";
    }
}

int cmd_train(const CommonOpts& c, const TrainOpts& t, const std::string& outdir) {
    fs::create_directories(outdir);
    auto prep = prepare(c);

    cfc::A2CConfig acfg;
    acfg.epochs = t.epochs;
    acfg.lr = t.lr;
    acfg.entropy_weight = t.entropy_weight;
    acfg.value_loss_weight = t.value_loss_weight;
    acfg.reward = prep.rc;
    acfg.t_max = c.t_max;
    acfg.seed = c.seed;
    acfg.eval_every = t.eval_every;
    acfg.hidden = t.hidden;

    auto a2c_res = cfc::train_a2c(prep.sp.train, prep.sp.val, acfg);
    cfc::save_checkpoint(a2c_res.net, (fs::path(outdir) / "a2c_checkpoint.txt").string());
    write_train_log(fs::path(outdir) / "train_log.jsonl", a2c_res.log);

    cfc::Network final_net = a2c_res.net;
    if (!t.skip_mcts) {
        cfc::MCTSConfig mcfg;
        mcfg.n_sim = t.sims;
        mcfg.c_puct = t.c_puct;
        mcfg.t_max = c.t_max;
        mcfg.samples_per_iteration = t.samples_per_iter;
        mcfg.iterations = t.iterations;
        mcfg.lr = t.mcts_lr;
        mcfg.seed = c.seed;
        auto imp = cfc::improve(a2c_res.net, prep.sp.train, prep.sp.val, prep.rc, mcfg);
        final_net = imp.net;

        std::ofstream mlog(fs::path(outdir) / "mcts_log.jsonl");
        for (const auto& r : imp.log) {
            json j;
            j["iteration"] = r.iteration;
            j["mean_loss"] = r.mean_loss;
            j["val_accuracy"] = r.val_accuracy;
            j["val_mean_cost"] = r.val_mean_cost;
            j["objective"] = r.objective;
            mlog << j.dump() << "\n";
        }

        // one search trajectory per training sample, for rule extraction
        std::vector<cfc::VisitRecord> records;
        for (int row = 0; row < prep.sp.train.n; ++row) {
            auto ep = cfc::episode_with_mcts(prep.sp.train, row, final_net, prep.rc, mcfg);
            for (auto& r : ep.records) {
                r.sample = row;
                records.push_back(std::move(r));
            }
        }
        auto bins = cfc::compute_bin_edges(prep.sp.train, t.rule_bins);
        cfc::write_visit_log((fs::path(outdir) / "visit_log.jsonl").string(), records, bins,
                             prep.sp.train.p, prep.sp.train.class_count,
                             prep.sp.train.feature_names);
    }

    cfc::save_checkpoint(final_net, (fs::path(outdir) / "checkpoint.txt").string());
    auto rep = cfc::evaluate(final_net, prep.sp.test, prep.rc, c.t_max);
    std::ofstream(fs::path(outdir) / "eval.json") << report_to_json(rep).dump(2) << "\n";
    write_manifest(outdir, c, &t, "train");

    std::cout << "test accuracy " << rep.accuracy << ", mean cost " << rep.mean_cost
              << ", objective " << rep.objective << "\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& c, const std::string& checkpoint, const std::string& out) {
    auto prep = prepare(c);
    auto net = cfc::load_checkpoint(checkpoint);
    auto rep = cfc::evaluate(net, prep.sp.test, prep.rc, c.t_max);
    json j = report_to_json(rep);
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream(out) << j.dump(2) << "\n";
        std::cout << "report written to " << out << "\n";
    }
    return 0;
}

int cmd_benchmark(const CommonOpts& base, const TrainOpts& t, int repeats,
                  const std::string& outdir) {
    fs::create_directories(outdir);
    std::ofstream table(fs::path(outdir) / "results.tsv");
    table << "dataset\tlambda\tseed\taccuracy\tmean_cost\tauc\tobjective\n";

    std::vector<cfc::EvalReport> ok;
    for (int rep_i = 1; rep_i <= repeats; ++rep_i) {
        CommonOpts c = base;
        c.seed = rep_i;
        try {
            auto prep = prepare(c);
            cfc::A2CConfig acfg;
            acfg.epochs = t.epochs;
            acfg.lr = t.lr;
            acfg.entropy_weight = t.entropy_weight;
            acfg.reward = prep.rc;
            acfg.t_max = c.t_max;
            acfg.seed = c.seed;
            acfg.eval_every = t.eval_every;
            acfg.hidden = t.hidden;
            auto res = cfc::train_a2c(prep.sp.train, prep.sp.val, acfg);
            cfc::Network net = res.net;
            if (!t.skip_mcts) {
                cfc::MCTSConfig mcfg;
                mcfg.n_sim = t.sims;
                mcfg.c_puct = t.c_puct;
                mcfg.t_max = c.t_max;
                mcfg.samples_per_iteration = t.samples_per_iter;
                mcfg.iterations = t.iterations;
                mcfg.lr = t.mcts_lr;
                mcfg.seed = c.seed;
                net = cfc::improve(net, prep.sp.train, prep.sp.val, prep.rc, mcfg).net;
            }
            auto rep = cfc::evaluate(net, prep.sp.test, prep.rc, c.t_max);
            ok.push_back(rep);
            table << c.dataset << '\t' << c.lambda << '\t' << rep_i << '\t' << rep.accuracy
                  << '\t' << rep.mean_cost << '\t' << (rep.auc ? std::to_string(*rep.auc) : "-")
                  << '\t' << rep.objective << "\n";
        } catch (const std::exception& e) {
            table << c.dataset << '\t' << c.lambda << '\t' << rep_i << "\tFAILED: " << e.what()
                  << "\n";
            std::cerr << "seed " << rep_i << " failed: " << e.what() << "\n";
        }
        table.flush();
    }
    if (ok.empty()) {
        std::cerr << "all repeats failed\n";
        return 1;
    }
    auto mean_std = [&](auto get) {
        double m = 0, s = 0;
        for (const auto& r : ok) m += get(r);
        m /= ok.size();
        for (const auto& r : ok) s += (get(r) - m) * (get(r) - m);
        s = std::sqrt(s / ok.size());
        return std::pair{m, s};
    };
    auto [acc_m, acc_s] = mean_std([](const cfc::EvalReport& r) { return r.accuracy; });
    auto [cost_m, cost_s] = mean_std([](const cfc::EvalReport& r) { return r.mean_cost; });
    json summary;
    summary["repeats"] = repeats;
    summary["succeeded"] = ok.size();
    summary["accuracy_mean"] = acc_m;
    summary["accuracy_std"] = acc_s;
    summary["mean_cost_mean"] = cost_m;
    summary["mean_cost_std"] = cost_s;
    std::ofstream(fs::path(outdir) / "summary.json") << summary.dump(2) << "\n";
    write_manifest(outdir, base, &t, "benchmark");
    std::cout << "accuracy " << acc_m << " +- " << acc_s << ", mean cost " << cost_m << " +- "
              << cost_s << " over " << ok.size() << "/" << repeats << " runs\n";
    return 0;
}

int cmd_rules(const std::string& log_path, int min_visits, int bins, const std::string& out) {
    auto log = cfc::read_visit_log(log_path);
    auto bin_edges = log.bins;
    if (bins != bin_edges.bins)
        std::cerr << "note: using the " << bin_edges.bins << " bins recorded in the visit log\n";
    auto tree = cfc::aggregate(log.records, bin_edges, log.p, log.class_count, min_visits);
    if (tree.roots.empty())
        std::cerr << "warning: no path reaches " << min_visits << " visits; tree is empty\n";
    std::ofstream(out + ".json") << cfc::rule_tree_to_text(tree);
    std::ofstream dot(out + ".dot");
    cfc::write_dot(tree, log.feature_names, dot);
    std::cout << "wrote " << out << ".json and " << out << ".dot\n";
    return 0;
}

int cmd_inspect(const std::string& path) {
    auto net = cfc::load_checkpoint(path);
    std::cout << "features (p):    " << net.p << "\n"
              << "classes (K):     " << net.K << "\n"
              << "hidden width:    " << net.H << "\n"
              << "init seed:       " << net.init_seed << "\n"
              << "parameter count: " << net.w.size() << "\n";
    double lo = net.w[0], hi = net.w[0];
    for (double v : net.w) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::cout << "weight range:    [" << lo << ", " << hi << "]\n";
    return 0;
}

int cmd_make_synthetic(const std::string& kind, int n, int p, std::uint64_t seed,
                       const std::string& out) {
    cfc::Dataset ds;
    if (kind == "single")
        ds = cfc::make_single_informative(n, seed);
    else if (kind == "redundant")
        ds = cfc::make_redundant(n, seed);
    else if (kind == "gaussian")
        ds = cfc::make_gaussian_binary(n, p, std::max(1, p / 2), 1.6, seed);
    else
        throw cfc::ValidationError("unknown kind: " + kind);
    cfc::write_csv(ds, out);
    std::cout << "wrote " << out << " (n=" << ds.n << ", p=" << ds.p << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cost-sensitive sequential feature acquisition: A2C + MCTS"};
    app.require_subcommand(1);

    CommonOpts c;
    TrainOpts t;
    std::string outdir = "runs/latest";
    std::string checkpoint, report_out, log_path, rules_out = "rules";
    int repeats = 20, min_visits = 50, bins = 3;
    std::string kind = "single";
    int n = 300, p = 8;

    auto* train = app.add_subcommand("train", "train A2C then improve with MCTS");
    add_common(train, c);
    train->add_option("--epochs", t.epochs, "A2C epochs");
    train->add_option("--lr", t.lr, "A2C learning rate");
    train->add_option("--entropy", t.entropy_weight, "entropy regularizer weight");
    train->add_option("--value-loss-weight", t.value_loss_weight, "value loss weight");
    train->add_option("--hidden", t.hidden, "hidden width");
    train->add_option("--eval-every", t.eval_every, "validation cadence in epochs");
    train->add_flag("--skip-mcts", t.skip_mcts, "stop after A2C");
    train->add_option("--sims", t.sims, "MCTS simulations per move");
    train->add_option("--c-puct", t.c_puct, "PUCT exploration constant");
    train->add_option("--iterations", t.iterations, "MCTS improvement iterations");
    train->add_option("--samples-per-iter", t.samples_per_iter, "rows searched per iteration");
    train->add_option("--mcts-lr", t.mcts_lr, "MCTS distillation learning rate");
    train->add_option("--bins", t.rule_bins, "value bins recorded for rule extraction");
    train->add_option("--out", outdir, "output directory");

    auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
    add_common(eval, c);
    eval->add_option("--checkpoint", checkpoint, "checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--out", report_out, "report file (default: stdout)");

    auto* bench = app.add_subcommand("benchmark", "repeat split/train/evaluate over seeds");
    add_common(bench, c);
    bench->add_option("--repeats", repeats, "number of seeded repetitions");
    bench->add_option("--epochs", t.epochs, "A2C epochs");
    bench->add_option("--lr", t.lr, "A2C learning rate");
    bench->add_option("--entropy", t.entropy_weight, "entropy regularizer weight");
    bench->add_option("--hidden", t.hidden, "hidden width");
    bench->add_option("--eval-every", t.eval_every, "validation cadence in epochs");
    bench->add_flag("--skip-mcts", t.skip_mcts, "stop after A2C");
    bench->add_option("--sims", t.sims, "MCTS simulations per move");
    bench->add_option("--iterations", t.iterations, "MCTS improvement iterations");
    bench->add_option("--samples-per-iter", t.samples_per_iter, "rows searched per iteration");
    bench->add_option("--out", outdir, "output directory");

    auto* rules = app.add_subcommand("rules", "extract decision rules from a visit log");
    rules->add_option("--visit-log", log_path, "visit log written by train")
        ->required()
        ->check(CLI::ExistingFile);
    rules->add_option("--min-visits", min_visits, "prune paths below this visit count");
    rules->add_option("--bins", bins, "value bins per feature");
    rules->add_option("--out", rules_out, "output prefix (.json/.dot)");

    auto* inspect = app.add_subcommand("inspect-checkpoint", "print checkpoint metadata");
    inspect->add_option("--checkpoint", checkpoint, "checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);

    auto* synth = app.add_subcommand("make-synthetic", "write a synthetic CSV dataset");
    synth->add_option("--kind", kind, "single | redundant | gaussian");
    synth->add_option("--n", n, "rows");
    synth->add_option("--p", p, "features (gaussian only)");
    synth->add_option("--seed", c.seed, "generator seed");
    synth->add_option("--out", report_out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(c, t, outdir);
        if (eval->parsed()) return cmd_evaluate(c, checkpoint, report_out);
        if (bench->parsed()) return cmd_benchmark(c, t, repeats, outdir);
        if (rules->parsed()) return cmd_rules(log_path, min_visits, bins, rules_out);
        if (inspect->parsed()) return cmd_inspect(checkpoint);
        if (synth->parsed()) return cmd_make_synthetic(kind, n, p, c.seed, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
