#include "btr/synthgen.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace btr {

std::string recipe_name(Recipe r) {
    switch (r) {
        case Recipe::Synthetic: return "synthetic";
        case Recipe::BookingGT: return "booking";
        case Recipe::YelpGT: return "yelp";
    }
    return "unknown";
}

Recipe parse_recipe(const std::string& name) {
    if (name == "synthetic") return Recipe::Synthetic;
    if (name == "booking") return Recipe::BookingGT;
    if (name == "yelp") return Recipe::YelpGT;
    throw DataError("unknown recipe: " + name);
}

Eigen::MatrixXd block_topics(int K, int terms_per_topic) {
    const int V = K * terms_per_topic;
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(K, V);
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j < terms_per_topic; ++j) {
            beta(k, k * terms_per_topic + j) = 1.0 / terms_per_topic;
        }
    }
    return beta;
}

namespace {

Eigen::VectorXd dirichlet(double alpha, int K, Rng& rng) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    Eigen::VectorXd theta(K);
    for (int k = 0; k < K; ++k) theta(k) = gamma(rng);
    return theta / theta.sum();
}

int categorical(const Eigen::VectorXd& probs, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    for (int k = 0; k < probs.size() - 1; ++k) {
        u -= probs(k);
        if (u < 0.0) return k;
    }
    return static_cast<int>(probs.size()) - 1;
}

struct LdaText {
    std::vector<Document> docs;
    Eigen::MatrixXd zbar_true;  // D x K realized assignment proportions
};

// LDA sampling over fixed topics; zbar records realized token-level topics.
LdaText sample_lda_text(int D, int N, const Eigen::MatrixXd& beta, double alpha, Rng& rng) {
    const int K = static_cast<int>(beta.rows());
    LdaText out;
    out.docs.resize(static_cast<size_t>(D));
    out.zbar_true = Eigen::MatrixXd::Zero(D, K);
    for (int d = 0; d < D; ++d) {
        Document& doc = out.docs[static_cast<size_t>(d)];
        doc.id = "doc" + std::to_string(d);
        doc.tokens.reserve(static_cast<size_t>(N));
        const Eigen::VectorXd theta = dirichlet(alpha, K, rng);
        for (int n = 0; n < N; ++n) {
            const int k = categorical(theta, rng);
            doc.tokens.push_back(categorical(beta.row(k), rng));
            out.zbar_true(d, k) += 1.0;
        }
        out.zbar_true.row(d) /= static_cast<double>(N);
    }
    return out;
}

Vocabulary block_vocab(int V) {
    Vocabulary vocab;
    for (int v = 0; v < V; ++v) vocab.add("w" + std::to_string(v));
    return vocab;
}

// Fraction of tokens falling in the term block [first, last).
Eigen::VectorXd block_share(const std::vector<Document>& docs, int first, int last) {
    Eigen::VectorXd share(static_cast<Eigen::Index>(docs.size()));
    for (size_t d = 0; d < docs.size(); ++d) {
        int count = 0;
        for (int v : docs[d].tokens) {
            if (v >= first && v < last) ++count;
        }
        share(static_cast<Eigen::Index>(d)) =
            docs[d].empty() ? 0.0 : static_cast<double>(count) / docs[d].length();
    }
    return share;
}

}  // namespace

GeneratedData gen_synthetic(int D, int words_per_doc, double sigma_eps,
                            std::uint64_t seed) {
    if (D < 1 || words_per_doc < 1) throw DataError("gen_synthetic: D and N must be >= 1");
    const int K = 3, terms_per_topic = 3;
    Rng rng = make_rng(seed, "gen-synthetic");

    GeneratedData out;
    out.truth.recipe = Recipe::Synthetic;
    out.truth.beta_true = block_topics(K, terms_per_topic);
    out.truth.sigma_eps = sigma_eps;

    LdaText text = sample_lda_text(D, words_per_doc, out.truth.beta_true, 1.0, rng);
    out.corpus.vocab = block_vocab(K * terms_per_topic);
    out.corpus.docs = std::move(text.docs);

    // x = document-level frequency of the first vocabulary term
    Eigen::VectorXd x = block_share(out.corpus.docs, 0, 1);
    Eigen::VectorXd z1bar = text.zbar_true.col(0);
    std::normal_distribution<double> noise(0.0, sigma_eps);
    Eigen::VectorXd y(D);
    for (int d = 0; d < D; ++d) {
        y(d) = -z1bar(d) + x(d) + (sigma_eps > 0.0 ? noise(rng) : 0.0);
    }

    out.corpus.x = x;
    out.corpus.y = y;
    out.corpus.feature_names = {"x"};

    out.truth.omega_true = Eigen::VectorXd(4);
    out.truth.omega_true << -1.0, 0.0, 0.0, 1.0;  // over [z1bar, z2bar, z3bar, x]
    out.truth.treatment_coef = 1.0;
    out.truth.treatment_col = 0;
    out.truth.text_score = z1bar;
    out.corpus.validate();
    return out;
}

GeneratedData gen_booking_semisynth(int D, int words_per_doc, double rho,
                                    double sigma_eps, std::uint64_t seed) {
    if (D < 2 || words_per_doc < 1) throw DataError("gen_booking_semisynth: need D >= 2");
    if (rho < 0.0 || rho >= 1.0) throw DataError("gen_booking_semisynth: rho in [0,1)");
    const int K = 3, terms_per_topic = 3;
    Rng rng = make_rng(seed, "gen-booking");

    GeneratedData out;
    out.truth.recipe = Recipe::BookingGT;
    out.truth.beta_true = block_topics(K, terms_per_topic);
    out.truth.sigma_eps = sigma_eps;
    out.truth.rho = rho;

    LdaText text = sample_lda_text(D, words_per_doc, out.truth.beta_true, 1.0, rng);
    out.corpus.vocab = block_vocab(K * terms_per_topic);
    out.corpus.docs = std::move(text.docs);

    // positive words = the first topic's term block
    Eigen::VectorXd prop_pos = block_share(out.corpus.docs, 0, terms_per_topic);
    const double pos_mean = prop_pos.mean();
    const double pos_sd = std::sqrt((prop_pos.array() - pos_mean).square().mean());

    std::normal_distribution<double> standard(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, sigma_eps);
    Eigen::VectorXd treatment(D), y(D);
    for (int d = 0; d < D; ++d) {
        const double confounder = pos_sd > 0.0 ? (prop_pos(d) - pos_mean) / pos_sd : 0.0;
        treatment(d) = rho * confounder + std::sqrt(1.0 - rho * rho) * standard(rng);
        y(d) = -treatment(d) + 5.0 * prop_pos(d) + (sigma_eps > 0.0 ? noise(rng) : 0.0);
    }

    out.corpus.x = treatment;
    out.corpus.y = y;
    out.corpus.feature_names = {"hotel_av"};

    out.truth.omega_true = Eigen::VectorXd(2);
    out.truth.omega_true << 5.0, -1.0;  // over [prop_pos, treatment]
    out.truth.treatment_coef = -1.0;
    out.truth.treatment_col = 0;
    out.truth.text_score = prop_pos;
    out.corpus.validate();
    return out;
}

GeneratedData gen_yelp_semisynth(int D, int words_per_doc, double gamma1,
                                 double sigma_eps, std::uint64_t seed) {
    if (D < 2 || words_per_doc < 1) throw DataError("gen_yelp_semisynth: need D >= 2");
    const int K = 3, terms_per_topic = 3;
    Rng rng = make_rng(seed, "gen-yelp");

    GeneratedData out;
    out.truth.recipe = Recipe::YelpGT;
    out.truth.beta_true = block_topics(K, terms_per_topic);
    out.truth.sigma_eps = sigma_eps;
    out.truth.gamma1 = gamma1;

    LdaText text = sample_lda_text(D, words_per_doc, out.truth.beta_true, 1.0, rng);
    out.corpus.vocab = block_vocab(K * terms_per_topic);
    out.corpus.docs = std::move(text.docs);

    // sentiment = positive block share minus negative (last) block share
    Eigen::VectorXd sent = block_share(out.corpus.docs, 0, terms_per_topic) -
                           block_share(out.corpus.docs, (K - 1) * terms_per_topic,
                                       K * terms_per_topic);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> standard(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, sigma_eps);
    Eigen::VectorXd us(D), stars(D), y(D);
    for (int d = 0; d < D; ++d) {
        const double p = 1.0 / (1.0 + std::exp(-gamma1 * sent(d)));
        us(d) = unif(rng) < p ? 1.0 : 0.0;
        stars(d) = standard(rng);
        y(d) = -us(d) + stars(d) + sent(d) + (sigma_eps > 0.0 ? noise(rng) : 0.0);
    }

    out.corpus.x.resize(D, 2);
    out.corpus.x.col(0) = us;
    out.corpus.x.col(1) = stars;
    out.corpus.y = y;
    out.corpus.feature_names = {"us", "stars_av_b"};

    out.truth.omega_true = Eigen::VectorXd(3);
    out.truth.omega_true << 1.0, -1.0, 1.0;  // over [sent, us, stars]
    out.truth.treatment_coef = -1.0;
    out.truth.treatment_col = 0;
    out.truth.text_score = sent;
    out.corpus.validate();
    return out;
}

std::string GroundTruth::to_json() const {
    json obj;
    obj["recipe"] = recipe_name(recipe);
    json beta = json::array();
    for (Eigen::Index k = 0; k < beta_true.rows(); ++k) {
        beta.push_back(std::vector<double>(beta_true.row(k).begin(), beta_true.row(k).end()));
    }
    obj["beta_true"] = beta;
    obj["omega_true"] = std::vector<double>(omega_true.begin(), omega_true.end());
    obj["sigma_eps"] = sigma_eps;
    obj["treatment_coef"] = treatment_coef;
    obj["treatment_col"] = treatment_col;
    obj["gamma1"] = gamma1;
    obj["rho"] = rho;
    obj["text_score"] = std::vector<double>(text_score.begin(), text_score.end());
    return obj.dump();
}

GroundTruth GroundTruth::from_json(const std::string& text) {
    json obj = json::parse(text);
    GroundTruth truth;
    truth.recipe = parse_recipe(obj.at("recipe").get<std::string>());
    const auto& beta = obj.at("beta_true");
    const auto K = static_cast<Eigen::Index>(beta.size());
    if (K > 0) {
        const auto V = static_cast<Eigen::Index>(beta[0].size());
        truth.beta_true.resize(K, V);
        for (Eigen::Index k = 0; k < K; ++k) {
            auto row = beta[static_cast<size_t>(k)].get<std::vector<double>>();
            truth.beta_true.row(k) = Eigen::Map<Eigen::VectorXd>(row.data(), V);
        }
    }
    auto omega = obj.at("omega_true").get<std::vector<double>>();
    truth.omega_true =
        Eigen::Map<Eigen::VectorXd>(omega.data(), static_cast<Eigen::Index>(omega.size()));
    truth.sigma_eps = obj.at("sigma_eps").get<double>();
    truth.treatment_coef = obj.at("treatment_coef").get<double>();
    truth.treatment_col = obj.at("treatment_col").get<int>();
    truth.gamma1 = obj.at("gamma1").get<double>();
    truth.rho = obj.at("rho").get<double>();
    auto score = obj.at("text_score").get<std::vector<double>>();
    truth.text_score =
        Eigen::Map<Eigen::VectorXd>(score.data(), static_cast<Eigen::Index>(score.size()));
    return truth;
}

}  // namespace btr
