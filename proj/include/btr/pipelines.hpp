#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "btr/corpus.hpp"
#include "btr/eval.hpp"
#include "btr/regression.hpp"
#include "btr/sampler.hpp"

namespace btr {

struct TrainConfig {
    TopicHyper hyper{3, 1.0, 1.0};
    NigPrior prior;             // sized lazily to the design width when empty
    int estep_iters = 100;
    int mstep_draws = 2500;     // posterior draws kept for credible intervals
    int max_em_iters = 50;
    int burn_in = 20;           // within each E-step
    int thinning = 5;           // LDA-only Gibbs control
    std::uint64_t seed = 1;
    double convergence_tol = 1e-4;
    int infer_iters = 50;       // held-out fold-in
    int infer_burn_in = 10;

    void validate() const;      // throws DataError on inconsistent settings
};

struct BtrModel {
    Eigen::MatrixXd beta_hat;   // K x V simplex rows
    NigPosterior posterior;
    RegressionParams params;    // omega = m_n, sigma2 = posterior mean
    TopicHyper hyper;
    NigPrior prior;
    NormStats norm;
    Vocabulary vocab;
    std::vector<int> interacted_cols;
    int num_features = 0;
    std::vector<double> trace;  // validation MSE per EM iteration

    std::string to_json() const;
    static BtrModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static BtrModel load(const std::string& path);
};

// Gibbs-EM with a cross-validation split: topic assignments are sampled on
// the E-step corpus, regression parameters updated on fold-in design rows of
// the M-step corpus. Inputs must already be normalized with `norm`; the model
// keeps the statistics for held-out prediction. Returns the parameters of the
// best-validation-MSE iteration. An optional CSV log records one line per EM
// iteration.
BtrModel train_btr(const Corpus& estep, const Corpus& mstep, const TrainConfig& cfg,
                   const NormStats& norm, const std::string& log_path = "");

// sLDA is the identical loop with zero covariate columns.

struct LdaModel {
    Eigen::MatrixXd beta_hat;   // K x V
    Eigen::MatrixXd theta_hat;  // D x K
    Eigen::MatrixXd zbar;       // D x K, averaged post-burn-in proportions
};

// Unsupervised collapsed Gibbs, averaging post-burn-in thinned samples.
LdaModel train_lda(const Corpus& corpus, const TopicHyper& hyper, int iters,
                   int burn_in, int thinning, std::uint64_t seed);

struct InferredTopics {
    Eigen::MatrixXd theta;  // D x K
    Eigen::MatrixXd zbar;   // D x K
};

// Fold-in Gibbs at fixed topic-term rows; no response term. Empty documents
// get prior proportions.
InferredTopics infer_topics(const Eigen::MatrixXd& beta_hat, const TopicHyper& hyper,
                            const Corpus& docs, int iters, int burn_in,
                            std::uint64_t seed);

// Prediction on raw (un-normalized) held-out data: x transformed with the
// model's train statistics, the train y mean added back.
Eigen::VectorXd predict_heldout(const BtrModel& model, const Corpus& docs,
                                int infer_iters = 50, int infer_burn_in = 10,
                                std::uint64_t seed = 1);

enum class StageOrder { LrFirst, TopicFirst };
enum class TopicKind { Slda, Lda };

struct TwoStageModel {
    StageOrder order;
    TopicKind kind;
    // Stage regression on [1, x] in original units (intercept first). For the
    // TopicFirst/Lda combination this is the joint fit on [1, zbar, x].
    Eigen::VectorXd lr_coefs;
    BtrModel topic_model;      // sLDA (zero covariates) or LDA wrapped as one

    double treatment_coef(int treatment_col) const;
};

// Two-stage compositions. LrFirst: OLS y on x, topic stage on the residual.
// TopicFirst/Slda: sLDA on y from text alone, then OLS of its residual on x.
// TopicFirst/Lda: unsupervised LDA, then one OLS of y on [1, zbar, x].
TwoStageModel train_two_stage(StageOrder order, TopicKind kind, const Corpus& estep,
                              const Corpus& mstep, const TrainConfig& cfg);

Eigen::VectorXd predict_two_stage(const TwoStageModel& model, const Corpus& docs,
                                  const TrainConfig& cfg);

// Refit coefficient vector for bootstrap: [intercept, x coefs] of the stage
// regression, in original units.
Eigen::VectorXd two_stage_stage_coefs(StageOrder order, TopicKind kind,
                                      const Corpus& train, const TrainConfig& cfg,
                                      std::uint64_t seed);

// Posterior draws of omega, rows = draws.
Eigen::MatrixXd omega_draws(const BtrModel& model, int n, std::uint64_t seed);

// Maps normalized-space coefficient draws back to original units. Valid only
// without topic-covariate interactions: the topic proportions sum to one, so
// the de-meaning constant folds into the topic weights,
//   omega_x_orig_j = omega_x_j / std_j
//   omega_z_orig_k = omega_z_k + y_mean - sum_j omega_x_j mean_j / std_j.
Eigen::MatrixXd to_original_units(const Eigen::MatrixXd& draws, const NormStats& norm,
                                  int K);

}  // namespace btr
