#include "btr/regression.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace btr {

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.begin(), v.end()));
}

Eigen::VectorXd vec_from_json(const json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

Eigen::MatrixXd mat_from_json(const json& j) {
    const auto n_rows = static_cast<Eigen::Index>(j.size());
    if (n_rows == 0) return {};
    const auto n_cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(n_rows, n_cols);
    for (Eigen::Index i = 0; i < n_rows; ++i) {
        auto row = j[static_cast<size_t>(i)].get<std::vector<double>>();
        m.row(i) = Eigen::Map<Eigen::VectorXd>(row.data(), n_cols);
    }
    return m;
}

}  // namespace

NigPrior::NigPrior(Eigen::VectorXd m0_, Eigen::MatrixXd S0_, double a0_, double b0_)
    : m0(std::move(m0_)), S0(std::move(S0_)), a0(a0_), b0(b0_) {
    if (S0.rows() != S0.cols() || S0.rows() != m0.size()) {
        throw DataError("prior dimensions disagree");
    }
    if (!S0.isApprox(S0.transpose(), 1e-10)) {
        throw DataError("prior precision must be symmetric");
    }
}

NigPrior NigPrior::symmetric(int dim, double mean, double precision, double a0, double b0) {
    return NigPrior(Eigen::VectorXd::Constant(dim, mean),
                    precision * Eigen::MatrixXd::Identity(dim, dim), a0, b0);
}

NigPosterior nig_update(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                        const NigPrior& prior) {
    const Eigen::Index N = A.rows();
    const Eigen::Index L = A.cols();
    if (y.size() != N || prior.m0.size() != L) {
        throw DataError("nig_update dimension mismatch");
    }

    NigPosterior post;
    post.S_n = A.transpose() * A + prior.S0;
    post.S_n = 0.5 * (post.S_n + post.S_n.transpose());  // keep exact symmetry

    Eigen::LDLT<Eigen::MatrixXd> ldlt(post.S_n);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericalError(
            "posterior precision A'A + S0 is singular; use a stronger prior");
    }
    post.m_n = ldlt.solve(prior.S0 * prior.m0 + A.transpose() * y);
    post.a_n = prior.a0 + static_cast<double>(N) / 2.0;
    post.b_n = prior.b0 +
               (y.dot(y) + prior.m0.dot(prior.S0 * prior.m0) -
                post.m_n.dot(post.S_n * post.m_n)) / 2.0;
    return post;
}

RegressionParams nig_sample(const NigPosterior& post, Rng& rng) {
    // sigma^2 = 1 / Gamma(a_n, scale=1/b_n)
    std::gamma_distribution<double> gamma(post.a_n, 1.0 / post.b_n);
    RegressionParams params;
    params.sigma2 = 1.0 / gamma(rng);

    Eigen::LLT<Eigen::MatrixXd> llt(post.S_n);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("posterior precision is not positive definite");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(post.m_n.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    // cov = sigma^2 S_n^{-1} = sigma^2 (L L')^{-1}, so omega = m_n + sigma L'^{-1} z
    params.omega = post.m_n +
                   std::sqrt(params.sigma2) *
                       llt.matrixU().solve(z);
    return params;
}

Eigen::VectorXd predict(const Eigen::MatrixXd& A, const RegressionParams& params) {
    if (A.cols() != params.omega.size()) {
        throw DataError("predict: design has " + std::to_string(A.cols()) +
                        " columns but omega has " + std::to_string(params.omega.size()));
    }
    return A * params.omega;
}

OlsFit ols_fit(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
    if (A.rows() != y.size()) throw DataError("ols_fit dimension mismatch");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < A.cols()) {
        throw NumericalError("design matrix is rank deficient (" +
                             std::to_string(qr.rank()) + " < " +
                             std::to_string(A.cols()) + ")");
    }
    OlsFit fit;
    fit.coefficients = qr.solve(y);
    fit.residuals = y - A * fit.coefficients;
    return fit;
}

ResidualMaker::ResidualMaker(const Eigen::MatrixXd& X) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(X);
    if (rank_check.rank() < X.cols()) {
        throw NumericalError("residual maker: X is rank deficient");
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    q_ = qr.householderQ() * Eigen::MatrixXd::Identity(X.rows(), X.cols());
}

Eigen::VectorXd ResidualMaker::apply(const Eigen::VectorXd& v) const {
    return v - q_ * (q_.transpose() * v);
}

Eigen::MatrixXd ResidualMaker::apply(const Eigen::MatrixXd& V) const {
    return V - q_ * (q_.transpose() * V);
}

std::string NigPrior::to_json() const {
    json obj;
    obj["m0"] = vec_to_json(m0);
    obj["S0"] = mat_to_json(S0);
    obj["a0"] = a0;
    obj["b0"] = b0;
    return obj.dump();
}

NigPrior NigPrior::from_json(const std::string& text) {
    json obj = json::parse(text);
    return NigPrior(vec_from_json(obj.at("m0")), mat_from_json(obj.at("S0")),
                    obj.at("a0").get<double>(), obj.at("b0").get<double>());
}

std::string NigPosterior::to_json() const {
    json obj;
    obj["m_n"] = vec_to_json(m_n);
    obj["S_n"] = mat_to_json(S_n);
    obj["a_n"] = a_n;
    obj["b_n"] = b_n;
    return obj.dump();
}

NigPosterior NigPosterior::from_json(const std::string& text) {
    json obj = json::parse(text);
    NigPosterior post;
    post.m_n = vec_from_json(obj.at("m_n"));
    post.S_n = mat_from_json(obj.at("S_n"));
    post.a_n = obj.at("a_n").get<double>();
    post.b_n = obj.at("b_n").get<double>();
    return post;
}

std::string RegressionParams::to_json() const {
    json obj;
    obj["omega"] = vec_to_json(omega);
    obj["sigma2"] = sigma2;
    return obj.dump();
}

RegressionParams RegressionParams::from_json(const std::string& text) {
    json obj = json::parse(text);
    RegressionParams params;
    params.omega = vec_from_json(obj.at("omega"));
    params.sigma2 = obj.at("sigma2").get<double>();
    return params;
}

}  // namespace btr
