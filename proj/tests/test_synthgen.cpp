#include <doctest.h>

#include <cmath>

#include "btr/regression.hpp"
#include "btr/synthgen.hpp"

using namespace btr;

namespace {

// With degenerate block topics every term identifies its topic, so realized
// topic proportions are exactly the per-block term shares.
Eigen::MatrixXd realized_zbar(const Corpus& c, int K, int terms_per_topic) {
    Eigen::MatrixXd zb = Eigen::MatrixXd::Zero(c.num_docs(), K);
    for (int d = 0; d < c.num_docs(); ++d) {
        for (int v : c.docs[d].tokens) zb(d, v / terms_per_topic) += 1.0;
        zb.row(d) /= c.docs[d].length();
    }
    return zb;
}

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd da = a.array() - a.mean();
    const Eigen::ArrayXd db = b.array() - b.mean();
    return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

}  // namespace

TEST_CASE("block topics are disjoint uniform rows") {
    Eigen::MatrixXd beta = block_topics(3, 3);
    REQUIRE(beta.rows() == 3);
    REQUIRE(beta.cols() == 9);
    for (int k = 0; k < 3; ++k) {
        CHECK(beta.row(k).sum() == doctest::Approx(1.0));
        for (int v = 0; v < 9; ++v) {
            CHECK(beta(k, v) == doctest::Approx(v / 3 == k ? 1.0 / 3.0 : 0.0));
        }
    }
}

TEST_CASE("generators are deterministic in the seed") {
    GeneratedData a = gen_synthetic(30, 10, 1.0, 99);
    GeneratedData b = gen_synthetic(30, 10, 1.0, 99);
    GeneratedData c = gen_synthetic(30, 10, 1.0, 100);
    for (int d = 0; d < 30; ++d) {
        CHECK(a.corpus.docs[d].tokens == b.corpus.docs[d].tokens);
    }
    CHECK(a.corpus.y.isApprox(b.corpus.y));
    bool differs = false;
    for (int d = 0; d < 30 && !differs; ++d) {
        differs = a.corpus.docs[d].tokens != c.corpus.docs[d].tokens;
    }
    CHECK(differs);
}

TEST_CASE("generators reject degenerate sizes") {
    CHECK_THROWS_AS(gen_synthetic(0, 10, 1.0, 1), DataError);
    CHECK_THROWS_AS(gen_synthetic(10, 0, 1.0, 1), DataError);
    CHECK_THROWS_AS(gen_booking_semisynth(1, 10, 0.5, 1.0, 1), DataError);
    CHECK_THROWS_AS(gen_booking_semisynth(10, 10, 1.0, 1.0, 1), DataError);  // rho < 1
    CHECK_THROWS_AS(gen_yelp_semisynth(1, 10, 4.0, 1.0, 1), DataError);
}

TEST_CASE("synthetic recipe satisfies its own regression equation") {
    GeneratedData gen = gen_synthetic(3000, 50, 1.0, 5);
    CHECK(gen.truth.omega_true.isApprox(Eigen::Vector4d(-1, 0, 0, 1)));
    CHECK(gen.corpus.vocab.size() == 9);

    // x is the document frequency of the first vocabulary term
    for (int d = 0; d < 20; ++d) {
        int count = 0;
        for (int v : gen.corpus.docs[d].tokens) count += v == 0 ? 1 : 0;
        CHECK(gen.corpus.x(d, 0) == doctest::Approx(count / 50.0));
    }

    // least squares on the true design recovers the generating weights:
    // an oracle entirely independent of the sampler machinery
    Eigen::MatrixXd zb = realized_zbar(gen.corpus, 3, 3);
    CHECK(zb.col(0).isApprox(gen.truth.text_score));
    Eigen::MatrixXd A(3000, 4);
    A << zb, gen.corpus.x;
    const Eigen::VectorXd coef = ols_fit(A, gen.corpus.y).coefficients;
    // noise sd 1 over 3000 docs: coefficient noise is well under 0.5
    CHECK((coef - gen.truth.omega_true).cwiseAbs().maxCoeff() < 0.5);

    // noiseless variant is exact
    GeneratedData clean = gen_synthetic(200, 40, 0.0, 6);
    Eigen::MatrixXd zc = realized_zbar(clean.corpus, 3, 3);
    for (int d = 0; d < 200; ++d) {
        CHECK(clean.corpus.y(d) ==
              doctest::Approx(-zc(d, 0) + clean.corpus.x(d, 0)).epsilon(1e-12));
    }
}

TEST_CASE("booking recipe confounds treatment with the text score") {
    const double rho = 0.7;
    GeneratedData gen = gen_booking_semisynth(4000, 30, rho, 1.0, 7);
    CHECK(gen.truth.treatment_coef == doctest::Approx(-1.0));
    CHECK(gen.truth.treatment_col == 0);

    Eigen::MatrixXd zb = realized_zbar(gen.corpus, 3, 3);
    CHECK(zb.col(0).isApprox(gen.truth.text_score));
    CHECK(corr(gen.corpus.x.col(0), gen.truth.text_score) ==
          doctest::Approx(rho).epsilon(0.05));

    // y - (5 prop_pos - treatment) is the noise draw
    const Eigen::VectorXd eps =
        gen.corpus.y - 5.0 * gen.truth.text_score + gen.corpus.x.col(0);
    CHECK(std::abs(eps.mean()) < 0.1);
    CHECK(std::sqrt(eps.squaredNorm() / 4000.0) == doctest::Approx(1.0).epsilon(0.1));

    GeneratedData clean = gen_booking_semisynth(4000, 30, 0.0, 1.0, 8);
    CHECK(std::abs(corr(clean.corpus.x.col(0), clean.truth.text_score)) < 0.05);
}

TEST_CASE("yelp recipe assigns treatment by sentiment and keeps its equation") {
    GeneratedData gen = gen_yelp_semisynth(4000, 30, 4.0, 1.0, 9);
    CHECK(gen.corpus.num_features() == 2);
    CHECK(gen.truth.treatment_coef == doctest::Approx(-1.0));

    Eigen::MatrixXd zb = realized_zbar(gen.corpus, 3, 3);
    const Eigen::VectorXd sent = zb.col(0) - zb.col(2);
    CHECK(sent.isApprox(gen.truth.text_score));

    // positive-sentiment documents are treated more often
    double pos_rate = 0.0, neg_rate = 0.0;
    int pos_n = 0, neg_n = 0;
    for (int d = 0; d < 4000; ++d) {
        if (sent(d) > 0.1) { pos_rate += gen.corpus.x(d, 0); ++pos_n; }
        if (sent(d) < -0.1) { neg_rate += gen.corpus.x(d, 0); ++neg_n; }
        const double want = -gen.corpus.x(d, 0) + gen.corpus.x(d, 1) + sent(d);
        CHECK(std::abs(gen.corpus.y(d) - want) < 6.0);  // within noise range
    }
    CHECK(pos_rate / pos_n > neg_rate / neg_n + 0.2);

    // treatment is binary
    for (int d = 0; d < 100; ++d) {
        CHECK((gen.corpus.x(d, 0) == 0.0 || gen.corpus.x(d, 0) == 1.0));
    }

    // zero slope removes the confounding entirely
    GeneratedData clean = gen_yelp_semisynth(4000, 30, 0.0, 1.0, 10);
    const Eigen::MatrixXd zc = realized_zbar(clean.corpus, 3, 3);
    CHECK(std::abs(corr(clean.corpus.x.col(0), zc.col(0) - zc.col(2))) < 0.05);
}

TEST_CASE("ground truth survives a json round trip") {
    GeneratedData gen = gen_booking_semisynth(20, 10, 0.4, 1.0, 11);
    GroundTruth back = GroundTruth::from_json(gen.truth.to_json());
    CHECK(back.recipe == Recipe::BookingGT);
    CHECK(back.beta_true.isApprox(gen.truth.beta_true));
    CHECK(back.omega_true.isApprox(gen.truth.omega_true));
    CHECK(back.sigma_eps == doctest::Approx(1.0));
    CHECK(back.rho == doctest::Approx(0.4));
    CHECK(back.treatment_col == 0);
    CHECK(back.text_score.isApprox(gen.truth.text_score));
}

TEST_CASE("recipe names round-trip and reject unknowns") {
    CHECK(parse_recipe("synthetic") == Recipe::Synthetic);
    CHECK(recipe_name(Recipe::YelpGT) == "yelp");
    CHECK_THROWS_AS(parse_recipe("bogus"), DataError);
}
