#pragma once

#include <Eigen/Dense>
#include <string>

#include "btr/corpus.hpp"
#include "btr/rng.hpp"

namespace btr {

enum class Recipe { Synthetic, BookingGT, YelpGT };

std::string recipe_name(Recipe r);
Recipe parse_recipe(const std::string& name);

// Generator-side record of the truth; consumed only by evaluation.
struct GroundTruth {
    Recipe recipe = Recipe::Synthetic;
    Eigen::MatrixXd beta_true;    // K x V simplex rows
    Eigen::VectorXd omega_true;   // over [zbar..., x...] for Synthetic, else
                                  // the structural coefficients
    double sigma_eps = 0.0;
    double treatment_coef = 0.0;  // coefficient on the treatment column
    int treatment_col = 0;        // column of Corpus.x holding the treatment
    double gamma1 = 0.0;          // Yelp text-treatment coupling
    double rho = 0.0;             // Booking treatment-confounder correlation
    // Realized per-document confounder score (z1bar / prop_pos / sent).
    Eigen::VectorXd text_score;

    std::string to_json() const;
    static GroundTruth from_json(const std::string& text);
};

struct GeneratedData {
    Corpus corpus;
    GroundTruth truth;
};

// Block-structured topics over a small vocabulary: topic k uniform over its
// own block of terms_per_topic consecutive terms, zero elsewhere.
Eigen::MatrixXd block_topics(int K, int terms_per_topic);

// LDA corpus over block topics with one numerical covariate, the frequency of
// the first vocabulary term, and response y = -z1bar + x + eps. True weights
// over [z1bar, z2bar, z3bar, x] are [-1, 0, 0, 1].
GeneratedData gen_synthetic(int D, int words_per_doc, double sigma_eps,
                            std::uint64_t seed);

// Continuous treatment drawn with correlation rho to the proportion of
// positive terms; y = -treatment + 5 * prop_pos + eps.
GeneratedData gen_booking_semisynth(int D, int words_per_doc, double rho,
                                    double sigma_eps, std::uint64_t seed);

// Binary treatment assigned by Pr(t=1) = logistic(gamma1 * sent); an
// independent covariate stars; y = -t + stars + sent + eps.
GeneratedData gen_yelp_semisynth(int D, int words_per_doc, double gamma1,
                                 double sigma_eps, std::uint64_t seed);

}  // namespace btr
