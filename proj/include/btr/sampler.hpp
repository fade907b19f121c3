#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "btr/corpus.hpp"
#include "btr/regression.hpp"
#include "btr/rng.hpp"

namespace btr {

struct TopicHyper {
    int K = 1;
    double alpha = 1.0;  // symmetric Dirichlet on theta
    double eta = 1.0;    // symmetric Dirichlet on beta
};

// Partition of the regression weight vector against the design layout
// [zbar, x1 (x) zbar, x2].
struct OmegaView {
    Eigen::VectorXd omega_z;   // K
    Eigen::MatrixXd omega_zx;  // K x |x1|, column j = weights interacting covariate j
    Eigen::VectorXd omega_x;   // |x2|
};

OmegaView partition_omega(const Eigen::VectorXd& omega, int K, int n1, int n2);
int design_width(int K, int n1, int n2);

// Document-specific effective topic weights:
//   omega_tilde_k = omega_z_k + omega_zx[:,k]' x1_d
Eigen::VectorXd omega_tilde(const OmegaView& view, const Eigen::VectorXd& x1_d);

// Per-token topic assignments with cached counts. s counts topics within each
// document (and within each paragraph when bounds are present); m counts term
// assignments across the corpus.
struct TopicState {
    std::vector<std::vector<int>> z;  // aligned with document tokens
    Eigen::MatrixXi s;                // D x K
    Eigen::MatrixXi m;                // K x V
    Eigen::VectorXi m_col;            // row sums of m
    // Paragraph-local topic counts, s_par[d] is P_d x K; empty when the
    // corpus has no paragraph structure.
    std::vector<Eigen::MatrixXi> s_par;

    int num_topics() const { return static_cast<int>(s.cols()); }

    // Exact integer audit of every count invariant; throws DataError.
    void check(const Corpus& corpus) const;

    std::string to_json(const Rng& rng) const;             // resumable snapshot
    static TopicState from_json(const std::string& text, const Corpus& corpus,
                                int K, Rng* rng_out);
};

TopicState init_state(const Corpus& corpus, const TopicHyper& hyper, Rng& rng);

// Unnormalized weights become a probability vector over K topics for token
// (d, n), with the token's current assignment excluded from all counts. The
// response exponents are max-shifted before exponentiation; the shift cancels
// in the normalization. A zero-length omega_z gives the plain LDA conditional.
Eigen::VectorXd token_conditional(int d, int n, const TopicState& state,
                                  const Corpus& corpus, const TopicHyper& hyper,
                                  const OmegaView& view, double sigma2);

void sample_token(int d, int n, TopicState& state, const Corpus& corpus,
                  const TopicHyper& hyper, const OmegaView& view, double sigma2,
                  Rng& rng);

// Paragraph variant: the document-topic term uses paragraph-local counts, the
// response term the document-wide ones.
Eigen::VectorXd token_conditional_paragraph(int d, int p, int n, const TopicState& state,
                                            const Corpus& corpus, const TopicHyper& hyper,
                                            const OmegaView& view, double sigma2);

void sample_token_paragraph(int d, int p, int n, TopicState& state, const Corpus& corpus,
                            const TopicHyper& hyper, const OmegaView& view, double sigma2,
                            Rng& rng);

// One full pass, doc-major then token-minor. Documents without tokens are
// skipped. Uses the paragraph conditional where bounds are present.
void estep_sweep(TopicState& state, const Corpus& corpus, const TopicHyper& hyper,
                 const OmegaView& view, double sigma2, Rng& rng);

// theta_hat[d][k] = (s_dk + alpha) / sum_k (s_dk + alpha)
Eigen::MatrixXd recover_theta(const TopicState& state, const TopicHyper& hyper);

// beta_hat[k][v] = (m_kv + eta) / sum_v (m_kv + eta)
Eigen::MatrixXd recover_beta(const TopicState& state, const TopicHyper& hyper);

// zbar = s_d / N_d; for a document with no tokens the prior proportions
// alpha_k / sum(alpha) are used instead.
Eigen::VectorXd zbar_row(int d, const TopicState& state, const Corpus& corpus,
                         const TopicHyper& hyper);

// Assembled regression row [zbar, x1 (x) zbar, x2] for document d.
Eigen::VectorXd design_row(int d, const TopicState& state, const Corpus& corpus,
                           const TopicHyper& hyper);

// Row assembly from an externally supplied zbar (e.g. averaged or folded-in).
Eigen::VectorXd assemble_row(const Eigen::VectorXd& zbar, const Eigen::VectorXd& x_row,
                             const std::vector<int>& interacted_cols);

}  // namespace btr
