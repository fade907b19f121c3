#include <doctest.h>

#include <random>
#include <sstream>

#include "btr/eval.hpp"
#include "btr/experiments.hpp"
#include "btr/synthgen.hpp"

using namespace btr;

TEST_CASE("predictive R2 is 1 for perfect and 0 for mean prediction") {
    Eigen::VectorXd y(5);
    y << 1.0, 2.0, 3.0, 4.0, 10.0;
    CHECK(pr2(y, y) == doctest::Approx(1.0));
    CHECK(pr2(y, Eigen::VectorXd::Constant(5, y.mean())) == doctest::Approx(0.0));
    Eigen::VectorXd off = y.array() + 1.0;
    CHECK(pr2(y, off) < 1.0);
    CHECK_THROWS_AS(pr2(y, Eigen::VectorXd::Zero(3)), DataError);
    CHECK_THROWS_AS(pr2(Eigen::VectorXd::Constant(4, 2.0), Eigen::VectorXd::Zero(4)),
                    DataError);  // zero-variance response
}

TEST_CASE("mean squared error is the average squared gap") {
    Eigen::VectorXd y(2), yhat(2);
    y << 0.0, 2.0;
    yhat << 1.0, 0.0;
    CHECK(mean_squared_error(y, yhat) == doctest::Approx(2.5));
}

TEST_CASE("uniform single-topic model has perplexity V") {
    GeneratedData gen = gen_synthetic(10, 20, 0.1, 7);
    const int V = gen.corpus.vocab.size();
    Eigen::MatrixXd theta = Eigen::MatrixXd::Ones(10, 1);
    Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(1, V, 1.0 / V);
    CHECK(perplexity(gen.corpus, theta, beta) == doctest::Approx(double(V)).epsilon(1e-12));
}

TEST_CASE("perplexity rejects zero-probability tokens and dimension mismatch") {
    GeneratedData gen = gen_synthetic(4, 6, 0.1, 8);
    const int V = gen.corpus.vocab.size();
    Eigen::MatrixXd theta = Eigen::MatrixXd::Ones(4, 1);
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(1, V);
    beta(0, 0) = 1.0;
    CHECK_THROWS_AS(perplexity(gen.corpus, theta, beta), DataError);
    CHECK_THROWS_AS(perplexity(gen.corpus, Eigen::MatrixXd::Ones(3, 1),
                               Eigen::MatrixXd::Constant(1, V, 1.0 / V)),
                    DataError);
}

TEST_CASE("a sharper model scores lower perplexity than the uniform one") {
    GeneratedData gen = gen_synthetic(30, 25, 0.1, 9);
    const int V = gen.corpus.vocab.size();
    // document-frequency unigram model: still K=1 but adapted to the corpus
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(V);
    double total = 0.0;
    for (const auto& doc : gen.corpus.docs) {
        for (int v : doc.tokens) { freq(v) += 1.0; total += 1.0; }
    }
    Eigen::MatrixXd beta_fit = (freq / total).transpose();
    Eigen::MatrixXd theta = Eigen::MatrixXd::Ones(30, 1);
    Eigen::MatrixXd beta_uniform = Eigen::MatrixXd::Constant(1, V, 1.0 / V);
    CHECK(perplexity(gen.corpus, theta, beta_fit) <
          perplexity(gen.corpus, theta, beta_uniform));
}

TEST_CASE("residualized partial regressions reproduce joint coefficients") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = 120;
    Eigen::MatrixXd X2(n, 2), X1(n, 2);
    for (int i = 0; i < n; ++i) {
        X2(i, 0) = normal(rng);
        X2(i, 1) = normal(rng);
        X1(i, 0) = 0.8 * X2(i, 0) + 0.3 * normal(rng);
        X1(i, 1) = -0.5 * X2(i, 1) + 0.3 * normal(rng);
    }
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        y(i) = 1.5 * X1(i, 0) - X1(i, 1) + 0.5 * X2(i, 0) + normal(rng);
    }
    FwlResult res = fwl_check(y, X1, X2, 1e-8);
    CHECK(res.pass);
    CHECK(res.max_deviation < 1e-8);
    CHECK(res.naive_deviation > 1e-3);  // correlated design: naive split is biased
}

TEST_CASE("percentile intervals interpolate the sorted draws") {
    Eigen::MatrixXd draws(5, 1);
    draws << 1.0, 2.0, 3.0, 4.0, 5.0;
    auto iv = percentile_intervals(draws, 0.25, 0.75);
    CHECK(iv[0].lo == doctest::Approx(2.0));
    CHECK(iv[0].hi == doctest::Approx(4.0));
    CHECK(iv[0].covers(3.0));
    CHECK(!iv[0].covers(4.5));
    CHECK_THROWS_AS(percentile_intervals(Eigen::MatrixXd::Zero(1, 1)), DataError);
}

TEST_CASE("bootstrap of a constant statistic collapses to a point") {
    GeneratedData gen = gen_synthetic(25, 8, 0.1, 10);
    auto fit = [](const Corpus&, std::uint64_t) {
        return Eigen::VectorXd::Constant(1, 3.25);
    };
    auto iv = bootstrap_interval(fit, gen.corpus, 10, 77);
    CHECK(iv[0].lo == doctest::Approx(3.25));
    CHECK(iv[0].hi == doctest::Approx(3.25));
    CHECK_THROWS_AS(bootstrap_interval(fit, gen.corpus, 1, 77), DataError);
}

TEST_CASE("bootstrap brackets the sample mean of a simple statistic") {
    GeneratedData gen = gen_synthetic(200, 10, 0.1, 11);
    auto fit = [](const Corpus& c, std::uint64_t) {
        return Eigen::VectorXd::Constant(1, c.y.mean());
    };
    auto iv = bootstrap_interval(fit, gen.corpus, 50, 13);
    CHECK(iv[0].lo < gen.corpus.y.mean());
    CHECK(iv[0].hi > gen.corpus.y.mean());
    CHECK(iv[0].hi - iv[0].lo < 0.5);  // not degenerate, not absurd

    // deterministic in the seed
    auto iv2 = bootstrap_interval(fit, gen.corpus, 50, 13);
    CHECK(iv[0].lo == doctest::Approx(iv2[0].lo));
    CHECK(iv[0].hi == doctest::Approx(iv2[0].hi));
}

TEST_CASE("topic matching undoes a row permutation") {
    Eigen::MatrixXd truth = block_topics(3, 3);
    Eigen::MatrixXd shuffled(3, 9);
    shuffled.row(0) = truth.row(2);
    shuffled.row(1) = truth.row(0);
    shuffled.row(2) = truth.row(1);
    auto perm = match_topics(shuffled, truth);
    CHECK(perm == std::vector<int>{1, 2, 0});
    for (int t = 0; t < 3; ++t) {
        CHECK(shuffled.row(perm[t]).isApprox(truth.row(t)));
    }
}

TEST_CASE("bias rows record estimate, interval, and coverage") {
    TeBiasRow row = te_bias_row("btr", -0.9, Interval{-1.2, -0.6}, -1.0);
    CHECK(row.bias == doctest::Approx(0.1));
    CHECK(row.covered);
    TeBiasRow miss = te_bias_row("two-stage", -0.2, Interval{-0.4, 0.0}, -1.0);
    CHECK(!miss.covered);
}

TEST_CASE("metric csv rows align with the header") {
    const auto count_cols = [](const std::string& line) {
        return std::count(line.begin(), line.end(), ',');
    };
    MetricReport r;
    r.model = "btr";
    CHECK(count_cols(r.csv_row()) == count_cols(MetricReport::csv_header()));
    r.te_truth = -1.0;
    CHECK(count_cols(r.csv_row()) == count_cols(MetricReport::csv_header()));
}

TEST_CASE("bias sweep coverage: per-seed vs seed-averaged intervals") {
    BiasReport rep;
    rep.dataset = "booking";
    BiasPoint good;
    good.truth = -1.0;
    good.btr_estimate = -1.05;
    good.btr_interval = {-1.2, -0.9};
    good.lr_first_estimate = -0.95;
    good.lr_first_interval = {-1.1, -0.8};
    good.topic_first_estimate = -1.0;
    good.topic_first_interval = {-1.15, -0.85};
    BiasPoint miss = good;  // one seed's joint interval narrowly misses
    miss.btr_interval = {-0.98, -0.8};
    rep.points = {good, miss, good};
    CHECK(!rep.all_covered());
    // averaged joint interval [-1.127, -0.867] still covers -1
    CHECK(rep.mean_intervals_cover());
    miss.btr_interval = {-0.5, -0.1};
    miss.lr_first_interval = {-0.5, -0.1};
    miss.topic_first_interval = {-0.5, -0.1};
    rep.points = {miss, miss, miss};
    CHECK(!rep.all_covered());
    CHECK(!rep.mean_intervals_cover());
    rep.points.clear();
    CHECK(!rep.mean_intervals_cover());
}
