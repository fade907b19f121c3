#include <doctest.h>

#include <cstdio>

#include "btr/pipelines.hpp"
#include "btr/eval.hpp"
#include "btr/synthgen.hpp"

using namespace btr;

namespace {

struct Prepared {
    SplitResult splits;
    NormStats norm;
    Corpus estep_n;
    Corpus mstep_n;
};

Corpus concat(const Corpus& a, const Corpus& b) {
    Corpus out = a;
    out.docs.insert(out.docs.end(), b.docs.begin(), b.docs.end());
    out.x.conservativeResize(a.num_docs() + b.num_docs(), Eigen::NoChange);
    out.x.bottomRows(b.num_docs()) = b.x;
    out.y.conservativeResize(a.num_docs() + b.num_docs());
    out.y.tail(b.num_docs()) = b.y;
    return out;
}

Prepared prepare(const Corpus& corpus, std::uint64_t seed) {
    Prepared p;
    p.splits = split(corpus, 0.8, 0.2, 0.5, seed);
    p.norm = compute_norm_stats(concat(p.splits.estep, p.splits.mstep));
    p.estep_n = apply_norm(p.splits.estep, p.norm);
    p.mstep_n = apply_norm(p.splits.mstep, p.norm);
    return p;
}

TrainConfig small_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.hyper = TopicHyper{3, 1.0, 1.0};
    cfg.estep_iters = 15;
    cfg.burn_in = 5;
    cfg.max_em_iters = 3;
    cfg.mstep_draws = 200;
    cfg.infer_iters = 20;
    cfg.infer_burn_in = 5;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("train config validation flags inconsistent iteration controls") {
    TrainConfig cfg = small_config(1);
    CHECK_NOTHROW(cfg.validate());
    cfg.burn_in = cfg.estep_iters;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = small_config(1);
    cfg.hyper.K = 0;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = small_config(1);
    cfg.mstep_draws = 1;
    CHECK_THROWS_AS(cfg.validate(), DataError);
}

TEST_CASE("joint training is deterministic in the seed") {
    GeneratedData gen = gen_synthetic(120, 20, 1.0, 13);
    Prepared p = prepare(gen.corpus, 14);
    TrainConfig cfg = small_config(15);
    BtrModel a = train_btr(p.estep_n, p.mstep_n, cfg, p.norm);
    BtrModel b = train_btr(p.estep_n, p.mstep_n, cfg, p.norm);
    CHECK(a.params.omega.isApprox(b.params.omega));
    CHECK(a.beta_hat.isApprox(b.beta_hat));
    CHECK(a.trace == b.trace);

    cfg.seed = 16;
    BtrModel c = train_btr(p.estep_n, p.mstep_n, cfg, p.norm);
    CHECK(!a.params.omega.isApprox(c.params.omega));
}

TEST_CASE("a single em iteration leaves a single trace entry") {
    GeneratedData gen = gen_synthetic(60, 15, 1.0, 17);
    Prepared p = prepare(gen.corpus, 18);
    TrainConfig cfg = small_config(19);
    cfg.max_em_iters = 1;
    BtrModel model = train_btr(p.estep_n, p.mstep_n, cfg, p.norm);
    CHECK(model.trace.size() == 1);
    CHECK(model.beta_hat.rows() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(model.beta_hat.row(k).sum() == doctest::Approx(1.0));
    }
}

TEST_CASE("the returned parameters belong to the best validation iteration") {
    GeneratedData gen = gen_synthetic(100, 20, 1.0, 20);
    Prepared p = prepare(gen.corpus, 21);
    TrainConfig cfg = small_config(22);
    cfg.max_em_iters = 4;
    cfg.convergence_tol = -1.0;  // never stop early
    BtrModel model = train_btr(p.estep_n, p.mstep_n, cfg, p.norm);
    CHECK(model.trace.size() == 4);
    const double best = *std::min_element(model.trace.begin(), model.trace.end());
    // the stored posterior reproduces the best validation mse when re-applied
    CHECK(best <= model.trace.front() + 1e-12);
}

TEST_CASE("training a feature-free corpus is the supervised-topics-only model") {
    GeneratedData gen = gen_synthetic(100, 20, 1.0, 23);
    Corpus text_only = gen.corpus;
    text_only.x = Eigen::MatrixXd(text_only.num_docs(), 0);
    text_only.feature_names.clear();
    Prepared p = prepare(text_only, 24);
    TrainConfig cfg = small_config(25);
    BtrModel model = train_btr(p.estep_n, p.mstep_n, cfg, p.norm);
    CHECK(model.params.omega.size() == 3);  // only topic weights remain
    CHECK(model.num_features == 0);
    const Eigen::VectorXd yhat = predict_heldout(model, p.splits.test);
    CHECK(yhat.size() == p.splits.test.num_docs());
    CHECK(yhat.allFinite());
}

TEST_CASE("fold-in with degenerate topics recovers block proportions") {
    GeneratedData gen = gen_synthetic(50, 40, 1.0, 26);
    const Eigen::MatrixXd beta = block_topics(3, 3);
    InferredTopics inf = infer_topics(beta, TopicHyper{3, 1.0, 1.0}, gen.corpus, 30, 5, 27);
    for (int d = 0; d < 50; ++d) {
        Eigen::Vector3d share = Eigen::Vector3d::Zero();
        for (int v : gen.corpus.docs[d].tokens) share(v / 3) += 1.0;
        share /= gen.corpus.docs[d].length();
        // degenerate topic rows make the assignment deterministic
        CHECK((inf.zbar.row(d).transpose() - share).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(inf.theta.row(d).sum() == doctest::Approx(1.0));
    }
}

TEST_CASE("fold-in gives empty documents uniform proportions") {
    Corpus c;
    for (int v = 0; v < 9; ++v) c.vocab.add("w" + std::to_string(v));
    c.docs = {Document{"empty", {}, {}}};
    c.x.resize(1, 0);
    c.y.resize(1);
    c.y << 0.0;
    InferredTopics inf = infer_topics(block_topics(3, 3), TopicHyper{3, 1.0, 1.0}, c, 10, 2, 28);
    CHECK(inf.zbar(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(inf.theta(0, 2) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("lda training returns normalized summaries of the right shape") {
    GeneratedData gen = gen_synthetic(60, 20, 1.0, 29);
    LdaModel lda = train_lda(gen.corpus, TopicHyper{3, 1.0, 1.0}, 40, 10, 5, 30);
    REQUIRE(lda.beta_hat.rows() == 3);
    REQUIRE(lda.theta_hat.rows() == 60);
    for (int k = 0; k < 3; ++k) CHECK(lda.beta_hat.row(k).sum() == doctest::Approx(1.0));
    for (int d = 0; d < 60; ++d) {
        CHECK(lda.theta_hat.row(d).sum() == doctest::Approx(1.0));
        CHECK(lda.zbar.row(d).sum() == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(train_lda(gen.corpus, TopicHyper{3, 1.0, 1.0}, 10, 10, 5, 30),
                    DataError);
}

TEST_CASE("model files round-trip through json and disk") {
    GeneratedData gen = gen_synthetic(80, 15, 1.0, 31);
    Prepared p = prepare(gen.corpus, 32);
    BtrModel model = train_btr(p.estep_n, p.mstep_n, small_config(33), p.norm);

    BtrModel back = BtrModel::from_json(model.to_json());
    CHECK(back.beta_hat.isApprox(model.beta_hat));
    CHECK(back.params.omega.isApprox(model.params.omega));
    CHECK(back.posterior.S_n.isApprox(model.posterior.S_n));
    CHECK(back.norm.y_mean == doctest::Approx(model.norm.y_mean));
    CHECK(back.vocab.terms() == model.vocab.terms());
    CHECK(back.num_features == model.num_features);

    const std::string path = "/tmp/btr_test_model.json";
    model.save(path);
    BtrModel loaded = BtrModel::load(path);
    const Eigen::VectorXd a = predict_heldout(model, p.splits.test, 10, 2, 5);
    const Eigen::VectorXd b = predict_heldout(loaded, p.splits.test, 10, 2, 5);
    CHECK(a.isApprox(b));
    std::remove(path.c_str());
}

TEST_CASE("posterior draws are seed-deterministic and centered near the mean") {
    GeneratedData gen = gen_synthetic(150, 20, 1.0, 34);
    Prepared p = prepare(gen.corpus, 35);
    BtrModel model = train_btr(p.estep_n, p.mstep_n, small_config(36), p.norm);
    const Eigen::MatrixXd d1 = omega_draws(model, 4000, 37);
    const Eigen::MatrixXd d2 = omega_draws(model, 4000, 37);
    CHECK(d1.isApprox(d2));
    const Eigen::VectorXd mean = d1.colwise().mean();
    CHECK((mean - model.posterior.m_n).cwiseAbs().maxCoeff() < 0.2);
}

TEST_CASE("original-unit transform undoes the feature normalization") {
    GeneratedData gen = gen_synthetic(100, 20, 1.0, 38);
    Prepared p = prepare(gen.corpus, 39);
    const int K = 3;

    Eigen::MatrixXd draws(2, K + 1);
    draws << 0.5, -0.25, 1.0, 2.0, -1.0, 0.0, 0.5, 0.25;
    const Eigen::MatrixXd orig = to_original_units(draws, p.norm, K);

    // identical predictions from both coordinate systems, for every document
    for (int r = 0; r < 2; ++r) {
        for (int d = 0; d < 10; ++d) {
            Eigen::VectorXd zbar(K);
            zbar << 0.2, 0.3, 0.5;
            const double pred_norm =
                zbar.dot(draws.row(r).head(K)) +
                p.estep_n.x(d, 0) * draws(r, K) + p.norm.y_mean;
            const double pred_orig = zbar.dot(orig.row(r).head(K)) +
                                     p.splits.estep.x(d, 0) * orig(r, K);
            CHECK(pred_norm == doctest::Approx(pred_orig).epsilon(1e-10));
        }
    }
}

TEST_CASE("two-stage pipelines fit and predict on held-out data") {
    GeneratedData gen = gen_synthetic(150, 20, 1.0, 40);
    Prepared p = prepare(gen.corpus, 41);
    TrainConfig cfg = small_config(42);

    for (auto order : {StageOrder::LrFirst, StageOrder::TopicFirst}) {
        TwoStageModel two =
            train_two_stage(order, TopicKind::Slda, p.splits.estep, p.splits.mstep, cfg);
        CHECK(two.lr_coefs.size() == 2);  // intercept + x
        const Eigen::VectorXd yhat = predict_two_stage(two, p.splits.test, cfg);
        CHECK(yhat.size() == p.splits.test.num_docs());
        CHECK(yhat.allFinite());
        CHECK(std::isfinite(two.treatment_coef(0)));
    }

    TwoStageModel lda_lr = train_two_stage(StageOrder::TopicFirst, TopicKind::Lda,
                                           p.splits.estep, p.splits.mstep, cfg);
    CHECK(lda_lr.lr_coefs.size() == 1 + 3 + 1);  // intercept, topics, x
    CHECK_THROWS_AS(train_two_stage(StageOrder::LrFirst, TopicKind::Lda, p.splits.estep,
                                    p.splits.mstep, cfg),
                    DataError);
}

TEST_CASE("zero-text corpora reduce the lda composition to plain least squares") {
    // documents with no tokens: the topic stage carries no information
    const int D = 60;
    Corpus c;
    c.vocab.add("unused");
    Rng rng = make_rng(43, "zero-text");
    std::normal_distribution<double> normal(0.0, 1.0);
    c.x.resize(D, 1);
    c.y.resize(D);
    for (int d = 0; d < D; ++d) {
        c.docs.push_back(Document{"d" + std::to_string(d), {}, {}});
        c.x(d, 0) = normal(rng);
        c.y(d) = 1.0 + 2.0 * c.x(d, 0) + 0.01 * normal(rng);
    }
    c.feature_names = {"x"};
    SplitResult s = split(c, 1.0, 0.0, 0.5, 44);

    TrainConfig cfg = small_config(45);
    TwoStageModel two =
        train_two_stage(StageOrder::TopicFirst, TopicKind::Lda, s.estep, s.mstep, cfg);
    // intercept absorbs the constant zbar columns; x slope is the ols slope
    CHECK(two.treatment_coef(0) == doctest::Approx(2.0).epsilon(0.02));

    Eigen::MatrixXd A(D, 2);
    A.col(0).setOnes();
    A.col(1) = c.x.col(0);
    const Eigen::VectorXd ols = ols_fit(A, c.y).coefficients;
    CHECK(two.treatment_coef(0) == doctest::Approx(ols(1)).epsilon(1e-6));
}

TEST_CASE("stage-coefficient refits are deterministic for bootstrap use") {
    GeneratedData gen = gen_synthetic(100, 15, 1.0, 46);
    TrainConfig cfg = small_config(47);
    const Eigen::VectorXd a =
        two_stage_stage_coefs(StageOrder::LrFirst, TopicKind::Slda, gen.corpus, cfg, 48);
    const Eigen::VectorXd b =
        two_stage_stage_coefs(StageOrder::LrFirst, TopicKind::Slda, gen.corpus, cfg, 48);
    CHECK(a.isApprox(b));
    CHECK(a.size() == 2);
}

TEST_CASE("held-out prediction rejects feature-count mismatches") {
    GeneratedData gen = gen_synthetic(60, 10, 1.0, 49);
    Prepared p = prepare(gen.corpus, 50);
    BtrModel model = train_btr(p.estep_n, p.mstep_n, small_config(51), p.norm);
    Corpus wrong = p.splits.test;
    wrong.x = Eigen::MatrixXd::Zero(wrong.num_docs(), 2);
    wrong.feature_names = {"a", "b"};
    CHECK_THROWS_AS(predict_heldout(model, wrong), DataError);
}
