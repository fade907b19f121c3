#include "btr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace btr {

double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    if (y.size() != yhat.size() || y.size() == 0) {
        throw DataError("mean_squared_error: length mismatch");
    }
    return (y - yhat).squaredNorm() / static_cast<double>(y.size());
}

double pr2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    if (y.size() != yhat.size() || y.size() < 2) {
        throw DataError("pr2 requires two equal-length vectors");
    }
    const double var = (y.array() - y.mean()).square().mean();
    if (var <= 0.0) throw DataError("pr2: response has zero variance");
    return 1.0 - mean_squared_error(y, yhat) / var;
}

double perplexity(const Corpus& docs, const Eigen::MatrixXd& theta,
                  const Eigen::MatrixXd& beta) {
    if (theta.rows() != docs.num_docs() || theta.cols() != beta.rows() ||
        beta.cols() != docs.vocab.size()) {
        throw DataError("perplexity: dimension mismatch");
    }
    double log_lik = 0.0;
    long total_tokens = 0;
    for (int d = 0; d < docs.num_docs(); ++d) {
        const Document& doc = docs.docs[static_cast<size_t>(d)];
        for (int v : doc.tokens) {
            const double p = theta.row(d).dot(beta.col(v));
            if (p <= 0.0) {
                throw DataError("perplexity: token '" + docs.vocab.term(v) +
                                "' has zero probability under every topic");
            }
            log_lik += std::log(p);
        }
        total_tokens += doc.length();
    }
    if (total_tokens == 0) throw DataError("perplexity: corpus has no tokens");
    return std::exp(-log_lik / static_cast<double>(total_tokens));
}

FwlResult fwl_check(const Eigen::VectorXd& y, const Eigen::MatrixXd& X1,
                    const Eigen::MatrixXd& X2, double tol) {
    Eigen::MatrixXd X(X1.rows(), X1.cols() + X2.cols());
    X << X1, X2;
    const OlsFit joint = ols_fit(X, y);
    const Eigen::VectorXd joint_b1 = joint.coefficients.head(X1.cols());
    const Eigen::VectorXd joint_b2 = joint.coefficients.tail(X2.cols());

    const ResidualMaker M2(X2);
    const ResidualMaker M1(X1);
    const Eigen::VectorXd partial_b1 = ols_fit(M2.apply(X1), M2.apply(y)).coefficients;
    const Eigen::VectorXd partial_b2 = ols_fit(M1.apply(X2), M1.apply(y)).coefficients;

    const Eigen::VectorXd naive_b1 = ols_fit(X1, y).coefficients;
    const Eigen::VectorXd naive_b2 = ols_fit(X2, y).coefficients;

    FwlResult result;
    result.max_deviation = std::max((joint_b1 - partial_b1).cwiseAbs().maxCoeff(),
                                    (joint_b2 - partial_b2).cwiseAbs().maxCoeff());
    result.naive_deviation = std::max((joint_b1 - naive_b1).cwiseAbs().maxCoeff(),
                                      (joint_b2 - naive_b2).cwiseAbs().maxCoeff());
    result.pass = result.max_deviation < tol;
    return result;
}

std::vector<Interval> percentile_intervals(const Eigen::MatrixXd& draws, double lo_q,
                                           double hi_q) {
    if (draws.rows() < 2) throw DataError("percentile interval needs at least two draws");
    std::vector<Interval> out(static_cast<size_t>(draws.cols()));
    const int n = static_cast<int>(draws.rows());
    for (Eigen::Index j = 0; j < draws.cols(); ++j) {
        std::vector<double> col(draws.col(j).begin(), draws.col(j).end());
        std::sort(col.begin(), col.end());
        auto pick = [&](double q) {
            const double pos = q * (n - 1);
            const int lo = static_cast<int>(std::floor(pos));
            const int hi = std::min(lo + 1, n - 1);
            const double frac = pos - lo;
            return col[static_cast<size_t>(lo)] * (1.0 - frac) +
                   col[static_cast<size_t>(hi)] * frac;
        };
        out[static_cast<size_t>(j)] = {pick(lo_q), pick(hi_q)};
    }
    return out;
}

std::vector<Interval> bootstrap_interval(
    const std::function<Eigen::VectorXd(const Corpus&, std::uint64_t seed)>& fit,
    const Corpus& corpus, int replicates, std::uint64_t seed) {
    if (replicates < 2) throw DataError("bootstrap needs at least two replicates");
    const int D = corpus.num_docs();
    Eigen::MatrixXd estimates;
    for (int r = 0; r < replicates; ++r) {
        Rng rng = make_rng(seed, "bootstrap-resample", static_cast<std::uint64_t>(r));
        std::uniform_int_distribution<int> pick(0, D - 1);
        std::vector<int> idx(static_cast<size_t>(D));
        for (auto& i : idx) i = pick(rng);
        const Eigen::VectorXd est =
            fit(subset(corpus, idx), derive_seed(seed, "bootstrap-fit", static_cast<std::uint64_t>(r)));
        if (estimates.size() == 0) estimates.resize(replicates, est.size());
        estimates.row(r) = est;
    }
    return percentile_intervals(estimates);
}

TeBiasRow te_bias_row(const std::string& model, double estimate, Interval interval,
                      double truth) {
    TeBiasRow row;
    row.model = model;
    row.estimate = estimate;
    row.interval = interval;
    row.truth = truth;
    row.bias = estimate - truth;
    row.covered = interval.covers(truth);
    return row;
}

std::vector<int> match_topics(const Eigen::MatrixXd& beta_hat,
                              const Eigen::MatrixXd& beta_true) {
    const int K = static_cast<int>(beta_true.rows());
    if (beta_hat.rows() != K || beta_hat.cols() != beta_true.cols()) {
        throw DataError("match_topics: shape mismatch");
    }
    std::vector<int> perm(static_cast<size_t>(K), -1);
    std::vector<bool> used(static_cast<size_t>(K), false);
    // greedy: repeatedly take the globally closest (estimated, true) pair
    for (int step = 0; step < K; ++step) {
        double best = std::numeric_limits<double>::infinity();
        int best_hat = -1, best_true = -1;
        for (int i = 0; i < K; ++i) {
            if (used[static_cast<size_t>(i)]) continue;
            for (int t = 0; t < K; ++t) {
                if (perm[static_cast<size_t>(t)] >= 0) continue;
                const double dist = (beta_hat.row(i) - beta_true.row(t)).cwiseAbs().sum();
                if (dist < best) {
                    best = dist;
                    best_hat = i;
                    best_true = t;
                }
            }
        }
        perm[static_cast<size_t>(best_true)] = best_hat;
        used[static_cast<size_t>(best_hat)] = true;
    }
    return perm;
}

std::string MetricReport::csv_header() {
    return "model,pr2,mse,perplexity,te_estimate,te_lo,te_hi,te_truth,bias,interval_kind";
}

std::string MetricReport::csv_row() const {
    std::ostringstream out;
    out.precision(12);
    out << model << ',' << pr2 << ',' << mse << ',' << perplexity << ',' << te_estimate
        << ',' << te_lo << ',' << te_hi << ',';
    if (te_truth) out << *te_truth;
    out << ',';
    if (te_truth) out << (te_estimate - *te_truth);
    out << ',' << (interval_kind == IntervalKind::Posterior ? "posterior" : "bootstrap");
    return out.str();
}

}  // namespace btr
