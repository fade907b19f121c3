#include "btr/experiments.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace btr {

TrainConfig synthetic_train_config(std::uint64_t seed, bool quick) {
    TrainConfig cfg;
    cfg.hyper = TopicHyper{3, 1.0, 1.0};
    // prior left empty: resolved to m0=0, S0=2I, a0=0.2, b0=4
    cfg.seed = seed;
    if (quick) {
        cfg.estep_iters = 25;
        cfg.burn_in = 8;
        cfg.max_em_iters = 5;
        cfg.infer_iters = 25;
        cfg.infer_burn_in = 5;
        cfg.mstep_draws = 500;
    } else {
        cfg.estep_iters = 100;
        cfg.burn_in = 20;
        cfg.max_em_iters = 15;
    }
    return cfg;
}

namespace {

struct PreparedData {
    GeneratedData gen;
    SplitResult splits;
    Corpus train_raw;       // estep + mstep, original units
    NormStats norm;
    Corpus estep_norm;
    Corpus mstep_norm;
};

Corpus concat_raw(const Corpus& a, const Corpus& b) {
    Corpus out = a;
    out.docs.insert(out.docs.end(), b.docs.begin(), b.docs.end());
    out.x.conservativeResize(a.num_docs() + b.num_docs(), Eigen::NoChange);
    out.x.bottomRows(b.num_docs()) = b.x;
    out.y.conservativeResize(a.num_docs() + b.num_docs());
    out.y.tail(b.num_docs()) = b.y;
    return out;
}

PreparedData prepare(GeneratedData gen, std::uint64_t seed) {
    PreparedData data;
    data.gen = std::move(gen);
    data.splits = split(data.gen.corpus, 0.8, 0.2, 0.5, derive_seed(seed, "split"));
    data.train_raw = concat_raw(data.splits.estep, data.splits.mstep);
    data.norm = compute_norm_stats(data.train_raw);
    data.estep_norm = apply_norm(data.splits.estep, data.norm);
    data.mstep_norm = apply_norm(data.splits.mstep, data.norm);
    return data;
}

struct BtrRun {
    BtrModel model;
    Eigen::VectorXd point_orig;       // posterior mean, original units
    Eigen::MatrixXd draws_orig;       // posterior draws, original units
};

BtrRun fit_btr_original_units(const PreparedData& data, const TrainConfig& cfg) {
    BtrRun run;
    run.model = train_btr(data.estep_norm, data.mstep_norm, cfg, data.norm);
    const int K = cfg.hyper.K;
    const Eigen::MatrixXd draws =
        omega_draws(run.model, cfg.mstep_draws, derive_seed(cfg.seed, "draws"));
    run.draws_orig = to_original_units(draws, data.norm, K);
    run.point_orig =
        to_original_units(run.model.params.omega.transpose(), data.norm, K).row(0);
    return run;
}

Interval bootstrap_stage_coef(StageOrder order, const Corpus& train,
                              const TrainConfig& quick_cfg, int coef_index,
                              int replicates, std::uint64_t seed) {
    auto fit = [&](const Corpus& resampled, std::uint64_t fit_seed) {
        return two_stage_stage_coefs(order, TopicKind::Slda, resampled, quick_cfg, fit_seed);
    };
    const auto intervals = bootstrap_interval(fit, train, replicates, seed);
    return intervals.at(static_cast<size_t>(coef_index));
}

}  // namespace

RecoveryReport run_synthetic_recovery(const ExperimentOptions& opt, std::uint64_t seed) {
    const double sigma_eps = 1.0;  // standard normal response noise
    PreparedData data = prepare(
        gen_synthetic(opt.docs, opt.words_per_doc, sigma_eps, derive_seed(seed, "gen")),
        seed);
    const int K = 3;

    RecoveryReport report;
    report.omega_true = data.gen.truth.omega_true;

    // --- joint model ---
    const TrainConfig cfg = synthetic_train_config(derive_seed(seed, "btr"), false);
    const BtrRun btr = fit_btr_original_units(data, cfg);

    // align topic labels with the generator's before comparing weights
    const std::vector<int> perm = match_topics(btr.model.beta_hat, data.gen.truth.beta_true);
    Eigen::MatrixXd matched(btr.draws_orig.rows(), K + 1);
    Eigen::VectorXd point(K + 1);
    for (int t = 0; t < K; ++t) {
        matched.col(t) = btr.draws_orig.col(perm[static_cast<size_t>(t)]);
        point(t) = btr.point_orig(perm[static_cast<size_t>(t)]);
    }
    matched.col(K) = btr.draws_orig.col(K);
    point(K) = btr.point_orig(K);

    report.btr_estimates = point;
    report.btr_intervals = percentile_intervals(matched);
    report.btr_all_covered = true;
    for (int j = 0; j < K + 1; ++j) {
        if (!report.btr_intervals[static_cast<size_t>(j)].covers(report.omega_true(j))) {
            report.btr_all_covered = false;
        }
    }
    report.btr_test_pr2 =
        pr2(data.splits.test.y, predict_heldout(btr.model, data.splits.test));

    // --- two-stage baselines; the numerical-feature weight is the probe ---
    const TrainConfig quick = synthetic_train_config(derive_seed(seed, "two-stage"), true);
    const double truth_x = 1.0;

    const TwoStageModel lr_first = train_two_stage(
        StageOrder::LrFirst, TopicKind::Slda, data.splits.estep, data.splits.mstep, quick);
    report.lr_first_x_coef = lr_first.treatment_coef(0);
    report.lr_first_interval =
        bootstrap_stage_coef(StageOrder::LrFirst, data.train_raw, quick, 1,
                             opt.bootstrap_replicates, derive_seed(seed, "bs-lr-first"));
    report.lr_first_excludes = !report.lr_first_interval.covers(truth_x);
    report.lr_first_test_pr2 =
        pr2(data.splits.test.y, predict_two_stage(lr_first, data.splits.test, quick));

    const TwoStageModel topic_first = train_two_stage(
        StageOrder::TopicFirst, TopicKind::Slda, data.splits.estep, data.splits.mstep, quick);
    report.topic_first_x_coef = topic_first.treatment_coef(0);
    report.topic_first_interval =
        bootstrap_stage_coef(StageOrder::TopicFirst, data.train_raw, quick, 1,
                             opt.bootstrap_replicates, derive_seed(seed, "bs-topic-first"));
    report.topic_first_excludes = !report.topic_first_interval.covers(truth_x);
    report.topic_first_test_pr2 =
        pr2(data.splits.test.y, predict_two_stage(topic_first, data.splits.test, quick));

    return report;
}

FwlReport run_fwl(int trials, double tol, std::uint64_t seed) {
    FwlReport report;
    report.trials = trials;
    report.min_naive_deviation = std::numeric_limits<double>::infinity();
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < trials; ++t) {
        Rng rng = make_rng(seed, "fwl-trial", static_cast<std::uint64_t>(t));
        const int n = 200, k1 = 2, k2 = 3;
        Eigen::MatrixXd X2(n, k2), E(n, k1), B(k2, k1);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < k2; ++j) X2(i, j) = normal(rng);
            for (int j = 0; j < k1; ++j) E(i, j) = normal(rng);
        }
        for (int i = 0; i < k2; ++i) {
            for (int j = 0; j < k1; ++j) B(i, j) = normal(rng);
        }
        const Eigen::MatrixXd X1 = X2 * B + 0.5 * E;  // correlated with X2
        Eigen::VectorXd beta(k1 + k2), noise(n);
        for (int j = 0; j < k1 + k2; ++j) beta(j) = normal(rng);
        for (int i = 0; i < n; ++i) noise(i) = normal(rng);
        Eigen::MatrixXd X(n, k1 + k2);
        X << X1, X2;
        const Eigen::VectorXd y = X * beta + noise;

        const FwlResult result = fwl_check(y, X1, X2, tol);
        if (result.pass) ++report.passed;
        report.worst_deviation = std::max(report.worst_deviation, result.max_deviation);
        report.min_naive_deviation =
            std::min(report.min_naive_deviation, result.naive_deviation);
    }
    report.all_pass = report.passed == report.trials;
    return report;
}

namespace {

BiasPoint bias_point_from(const PreparedData& data, const ExperimentOptions& opt,
                          std::uint64_t seed) {
    BiasPoint point;
    point.truth = data.gen.truth.treatment_coef;
    const int K = 3;
    const int treatment_col = data.gen.truth.treatment_col;

    const TrainConfig cfg = synthetic_train_config(derive_seed(seed, "btr"), opt.quick);
    const BtrRun btr = fit_btr_original_units(data, cfg);
    point.btr_estimate = btr.point_orig(K + treatment_col);
    point.btr_interval =
        percentile_intervals(btr.draws_orig.col(K + treatment_col)).at(0);

    const TrainConfig quick = synthetic_train_config(derive_seed(seed, "two-stage"), true);
    const int coef_index = 1 + treatment_col;

    const TwoStageModel lr_first = train_two_stage(
        StageOrder::LrFirst, TopicKind::Slda, data.splits.estep, data.splits.mstep, quick);
    point.lr_first_estimate = lr_first.treatment_coef(treatment_col);
    point.lr_first_interval =
        bootstrap_stage_coef(StageOrder::LrFirst, data.train_raw, quick, coef_index,
                             opt.bootstrap_replicates, derive_seed(seed, "bs-lr-first"));

    const TwoStageModel topic_first = train_two_stage(
        StageOrder::TopicFirst, TopicKind::Slda, data.splits.estep, data.splits.mstep, quick);
    point.topic_first_estimate = topic_first.treatment_coef(treatment_col);
    point.topic_first_interval =
        bootstrap_stage_coef(StageOrder::TopicFirst, data.train_raw, quick, coef_index,
                             opt.bootstrap_replicates, derive_seed(seed, "bs-topic-first"));
    return point;
}

}  // namespace

BiasPoint run_booking_point(const ExperimentOptions& opt, double rho, std::uint64_t seed) {
    PreparedData data = prepare(
        gen_booking_semisynth(opt.docs, opt.words_per_doc, rho, 1.0,
                              derive_seed(seed, "gen-booking")),
        seed);
    return bias_point_from(data, opt, seed);
}

BiasPoint run_yelp_point(const ExperimentOptions& opt, double gamma1, std::uint64_t seed) {
    PreparedData data = prepare(
        gen_yelp_semisynth(opt.docs, opt.words_per_doc, gamma1, 1.0,
                           derive_seed(seed, "gen-yelp")),
        seed);
    return bias_point_from(data, opt, seed);
}

BiasReport run_bias_sweep(const std::string& dataset, const ExperimentOptions& opt,
                          double knob, int num_seeds, std::uint64_t seed) {
    BiasReport report;
    report.dataset = dataset;
    report.knob = knob;
    for (int s = 0; s < num_seeds; ++s) {
        const std::uint64_t point_seed = derive_seed(seed, "bias-seed",
                                                     static_cast<std::uint64_t>(s));
        if (dataset == "booking") {
            report.points.push_back(run_booking_point(opt, knob, point_seed));
        } else if (dataset == "yelp") {
            report.points.push_back(run_yelp_point(opt, knob, point_seed));
        } else {
            throw DataError("unknown bias dataset: " + dataset);
        }
    }
    return report;
}

double BiasReport::mean_abs_bias_btr() const {
    double sum = 0.0;
    for (const auto& p : points) sum += std::abs(p.btr_bias());
    return sum / points.size();
}

double BiasReport::mean_abs_bias_lr_first() const {
    double sum = 0.0;
    for (const auto& p : points) sum += std::abs(p.lr_first_bias());
    return sum / points.size();
}

double BiasReport::mean_abs_bias_topic_first() const {
    double sum = 0.0;
    for (const auto& p : points) sum += std::abs(p.topic_first_bias());
    return sum / points.size();
}

bool BiasReport::mean_intervals_cover() const {
    if (points.empty()) return false;
    Interval btr_mean, lr_mean, tf_mean;
    btr_mean.lo = lr_mean.lo = tf_mean.lo = 0.0;
    btr_mean.hi = lr_mean.hi = tf_mean.hi = 0.0;
    for (const auto& p : points) {
        btr_mean.lo += p.btr_interval.lo;
        btr_mean.hi += p.btr_interval.hi;
        lr_mean.lo += p.lr_first_interval.lo;
        lr_mean.hi += p.lr_first_interval.hi;
        tf_mean.lo += p.topic_first_interval.lo;
        tf_mean.hi += p.topic_first_interval.hi;
    }
    const double n = static_cast<double>(points.size());
    btr_mean.lo /= n;
    btr_mean.hi /= n;
    lr_mean.lo /= n;
    lr_mean.hi /= n;
    tf_mean.lo /= n;
    tf_mean.hi /= n;
    const double truth = points[0].truth;
    return btr_mean.covers(truth) && lr_mean.covers(truth) && tf_mean.covers(truth);
}

bool BiasReport::all_covered() const {
    for (const auto& p : points) {
        if (!p.btr_interval.covers(p.truth) || !p.lr_first_interval.covers(p.truth) ||
            !p.topic_first_interval.covers(p.truth)) {
            return false;
        }
    }
    return true;
}

namespace {

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

std::string fmt(const Interval& iv) {
    return "[" + fmt(iv.lo) + ", " + fmt(iv.hi) + "]";
}

}  // namespace

std::string RecoveryReport::to_markdown() const {
    std::ostringstream out;
    out << "## Synthetic ground-truth recovery\n\n";
    out << "| weight | truth | BTR estimate | BTR 95% interval | covered |\n";
    out << "|---|---|---|---|---|\n";
    const char* names[] = {"z1bar", "z2bar", "z3bar", "x"};
    for (int j = 0; j < 4; ++j) {
        out << "| " << names[j] << " | " << fmt(omega_true(j)) << " | "
            << fmt(btr_estimates(j)) << " | " << fmt(btr_intervals[static_cast<size_t>(j)])
            << " | " << (btr_intervals[static_cast<size_t>(j)].covers(omega_true(j)) ? "yes" : "NO")
            << " |\n";
    }
    out << "\n| pipeline | x estimate | bootstrap interval | excludes truth (1.0) |\n";
    out << "|---|---|---|---|\n";
    out << "| LR-first | " << fmt(lr_first_x_coef) << " | " << fmt(lr_first_interval)
        << " | " << (lr_first_excludes ? "yes" : "NO") << " |\n";
    out << "| topic-first | " << fmt(topic_first_x_coef) << " | " << fmt(topic_first_interval)
        << " | " << (topic_first_excludes ? "yes" : "NO") << " |\n";
    out << "\nTest pR2: BTR " << fmt(btr_test_pr2) << ", LR-first " << fmt(lr_first_test_pr2)
        << ", topic-first " << fmt(topic_first_test_pr2) << "\n";
    return out.str();
}

std::string FwlReport::to_markdown() const {
    std::ostringstream out;
    out << "## Regression decomposition check\n\n"
        << "- trials: " << trials << ", passed: " << passed << "\n"
        << "- worst residualized deviation: " << fmt(worst_deviation) << "\n"
        << "- smallest naive (un-residualized) deviation: " << fmt(min_naive_deviation)
        << "\n";
    return out.str();
}

std::string BiasReport::to_markdown() const {
    std::ostringstream out;
    out << "## Treatment-effect bias (" << dataset << ", knob=" << fmt(knob) << ")\n\n";
    out << "| seed | BTR | BTR interval | LR-first | interval | topic-first | interval |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        out << "| " << i << " | " << fmt(p.btr_estimate) << " | " << fmt(p.btr_interval)
            << " | " << fmt(p.lr_first_estimate) << " | " << fmt(p.lr_first_interval)
            << " | " << fmt(p.topic_first_estimate) << " | " << fmt(p.topic_first_interval)
            << " |\n";
    }
    out << "\nMean |bias|: BTR " << fmt(mean_abs_bias_btr()) << ", LR-first "
        << fmt(mean_abs_bias_lr_first()) << ", topic-first "
        << fmt(mean_abs_bias_topic_first()) << "; truth " << fmt(points.empty() ? 0.0 : points[0].truth)
        << "; all intervals cover truth: " << (all_covered() ? "yes" : "no")
        << "; seed-averaged intervals cover truth: "
        << (mean_intervals_cover() ? "yes" : "no") << "\n";
    return out.str();
}

}  // namespace btr
