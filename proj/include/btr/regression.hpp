#pragma once

#include <Eigen/Dense>
#include <string>

#include "btr/errors.hpp"
#include "btr/rng.hpp"

namespace btr {

// Normal-Inverse-Gamma prior for (omega, sigma^2). S0 is a prior PRECISION
// matrix; the scalar constructor expands s to s*I.
struct NigPrior {
    Eigen::VectorXd m0;
    Eigen::MatrixXd S0;
    double a0 = 0.0;
    double b0 = 0.0;

    NigPrior() = default;
    NigPrior(Eigen::VectorXd m0_, Eigen::MatrixXd S0_, double a0_, double b0_);
    // Symmetric shorthand: m0 = mean*1, S0 = precision*I.
    static NigPrior symmetric(int dim, double mean, double precision, double a0, double b0);

    std::string to_json() const;
    static NigPrior from_json(const std::string& text);
};

struct NigPosterior {
    Eigen::VectorXd m_n;
    Eigen::MatrixXd S_n;   // posterior precision, symmetric PD
    double a_n = 0.0;
    double b_n = 0.0;

    std::string to_json() const;
    static NigPosterior from_json(const std::string& text);
};

struct RegressionParams {
    Eigen::VectorXd omega;
    double sigma2 = 1.0;

    std::string to_json() const;
    static RegressionParams from_json(const std::string& text);
};

// Conjugate update:
//   S_n = A'A + S0
//   m_n = S_n^{-1} (S0 m0 + A'y)
//   a_n = a0 + N/2
//   b_n = b0 + (y'y + m0'S0 m0 - m_n'S_n m_n) / 2
// Solved by symmetric factorization, no explicit inverse.
NigPosterior nig_update(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                        const NigPrior& prior);

// Joint draw: sigma^2 ~ IG(a_n, b_n), omega | sigma^2 ~ N(m_n, sigma^2 S_n^{-1}).
RegressionParams nig_sample(const NigPosterior& post, Rng& rng);

Eigen::VectorXd predict(const Eigen::MatrixXd& A, const RegressionParams& params);

struct OlsFit {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd residuals;
};

// Least squares via column-pivoted QR. Throws NumericalError on rank deficiency.
OlsFit ols_fit(const Eigen::MatrixXd& A, const Eigen::VectorXd& y);

// M = I - X (X'X)^{-1} X', applied through a thin QR of X rather than formed.
class ResidualMaker {
public:
    explicit ResidualMaker(const Eigen::MatrixXd& X);
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    Eigen::MatrixXd apply(const Eigen::MatrixXd& V) const;

private:
    Eigen::MatrixXd q_;  // orthonormal basis of col(X)
};

}  // namespace btr
