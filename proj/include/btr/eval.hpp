#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "btr/corpus.hpp"
#include "btr/regression.hpp"
#include "btr/rng.hpp"

namespace btr {

enum class IntervalKind { Posterior, Bootstrap };

struct MetricReport {
    std::string model;
    double pr2 = 0.0;
    double mse = 0.0;
    double perplexity = 0.0;
    double te_estimate = 0.0;
    double te_lo = 0.0;
    double te_hi = 0.0;
    std::optional<double> te_truth;
    IntervalKind interval_kind = IntervalKind::Posterior;

    std::string csv_row() const;
    static std::string csv_header();
};

// pR^2 = 1 - MSE / var(y), population variance.
double pr2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

// exp{ -sum_d log p(w_d | theta_d, beta) / sum_d N_d } with
// p(w_d) = prod_n sum_k theta_dk beta_k,w. Empty documents contribute nothing.
double perplexity(const Corpus& docs, const Eigen::MatrixXd& theta,
                  const Eigen::MatrixXd& beta);

struct FwlResult {
    bool pass = false;
    double max_deviation = 0.0;    // joint vs residualized partial fits
    double naive_deviation = 0.0;  // joint vs un-residualized partial fits
};

// Checks that regressing M2*y on M2*X1 (and M1*y on M1*X2) reproduces the
// joint OLS coefficients within tol, and records how far the naive separate
// regressions deviate.
FwlResult fwl_check(const Eigen::VectorXd& y, const Eigen::MatrixXd& X1,
                    const Eigen::MatrixXd& X2, double tol);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool covers(double v) const { return lo <= v && v <= hi; }
};

// Percentile 2.5/97.5 intervals over refits on corpora resampled with
// replacement. `fit` returns one coefficient vector per resample.
std::vector<Interval> bootstrap_interval(
    const std::function<Eigen::VectorXd(const Corpus&, std::uint64_t seed)>& fit,
    const Corpus& corpus, int replicates, std::uint64_t seed);

std::vector<Interval> percentile_intervals(const Eigen::MatrixXd& draws,
                                           double lo_q = 0.025, double hi_q = 0.975);

struct TeBiasRow {
    std::string model;
    double estimate = 0.0;
    Interval interval;
    double truth = 0.0;
    double bias = 0.0;
    bool covered = false;
};

TeBiasRow te_bias_row(const std::string& model, double estimate, Interval interval,
                      double truth);

// Greedy row assignment between estimated and true topic-term rows; returns
// perm with beta_hat.row(perm[k]) matched to beta_true.row(k).
std::vector<int> match_topics(const Eigen::MatrixXd& beta_hat,
                              const Eigen::MatrixXd& beta_true);

}  // namespace btr
