#include "btr/sampler.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace btr {

int design_width(int K, int n1, int n2) { return K + n1 * K + n2; }

OmegaView partition_omega(const Eigen::VectorXd& omega, int K, int n1, int n2) {
    if (omega.size() != design_width(K, n1, n2)) {
        throw DataError("omega length " + std::to_string(omega.size()) +
                        " does not match design width " +
                        std::to_string(design_width(K, n1, n2)));
    }
    OmegaView view;
    view.omega_z = omega.head(K);
    view.omega_zx.resize(K, n1);
    for (int j = 0; j < n1; ++j) {
        view.omega_zx.col(j) = omega.segment(K + j * K, K);
    }
    view.omega_x = omega.tail(n2);
    return view;
}

Eigen::VectorXd omega_tilde(const OmegaView& view, const Eigen::VectorXd& x1_d) {
    if (x1_d.size() != view.omega_zx.cols()) {
        throw DataError("omega_tilde: interacted covariate count mismatch");
    }
    if (x1_d.size() == 0) return view.omega_z;
    return view.omega_z + view.omega_zx * x1_d;
}

namespace {

Eigen::VectorXd gather(const Eigen::VectorXd& row, const std::vector<int>& cols) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(cols.size()));
    for (size_t i = 0; i < cols.size(); ++i) out(static_cast<Eigen::Index>(i)) = row(cols[i]);
    return out;
}

// Per-document quantities that are constant across one document's tokens.
struct DocContext {
    Eigen::VectorXd wt;  // effective topic weights, empty when no response term
    double y_net = 0.0;  // y_d - omega_x' x2_d
};

DocContext make_context(int d, const Corpus& corpus, const OmegaView& view) {
    DocContext ctx;
    if (view.omega_z.size() == 0) return ctx;  // pure LDA
    Eigen::VectorXd x_row = corpus.x.row(d);
    ctx.wt = omega_tilde(view, gather(x_row, corpus.interacted_cols));
    ctx.y_net = corpus.y(d) - view.omega_x.dot(gather(x_row, corpus.noninteracted_cols()));
    return ctx;
}

// Probability vector for token (d,n), virtually excluding its current
// assignment from all counts. `p` selects the paragraph-local document-topic
// counts; p < 0 uses document-level counts.
Eigen::VectorXd conditional_impl(int d, int p, int n, const TopicState& state,
                                 const Corpus& corpus, const TopicHyper& hyper,
                                 const DocContext& ctx, double sigma2) {
    const Document& doc = corpus.docs[static_cast<size_t>(d)];
    const int K = hyper.K;
    const int V = corpus.vocab.size();
    const int v = doc.tokens[static_cast<size_t>(n)];
    const int old_k = state.z[static_cast<size_t>(d)][static_cast<size_t>(n)];

    Eigen::VectorXd weights(K);
    for (int k = 0; k < K; ++k) {
        const double excl = (k == old_k) ? 1.0 : 0.0;
        const double s_count = p < 0 ? state.s(d, k)
                                     : state.s_par[static_cast<size_t>(d)](p, k);
        weights(k) = (s_count - excl + hyper.alpha) *
                     (state.m(k, v) - excl + hyper.eta) /
                     (state.m_col(k) - excl + V * hyper.eta);
    }

    if (ctx.wt.size() > 0) {
        const double inv_n = 1.0 / static_cast<double>(doc.length());
        // omega_tilde' s_{d,-n} / N_d over the whole document
        double sdot = 0.0;
        for (int k = 0; k < K; ++k) {
            sdot += ctx.wt(k) * (state.s(d, k) - (k == old_k ? 1.0 : 0.0));
        }
        sdot *= inv_n;
        const double resid = ctx.y_net - sdot;
        Eigen::VectorXd expo(K);
        for (int k = 0; k < K; ++k) {
            const double w_k = ctx.wt(k) * inv_n;
            expo(k) = (2.0 * w_k * resid - w_k * w_k) / (2.0 * sigma2);
        }
        const double shift = expo.maxCoeff();
        weights.array() *= (expo.array() - shift).exp();
    }

    const double total = weights.sum();
    if (!std::isfinite(total) || total <= 0.0) {
        throw NumericalError("non-finite token sampling weight (sigma2 underflow or "
                             "corrupted counts)");
    }
    return weights / total;
}

int draw_categorical(const Eigen::VectorXd& probs, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double cum = 0.0;
    const int K = static_cast<int>(probs.size());
    for (int k = 0; k < K - 1; ++k) {
        cum += probs(k);
        if (u < cum) return k;
    }
    return K - 1;  // final bucket absorbs residual mass
}

void reassign(int d, int p, int n, int new_k, TopicState& state, const Corpus& corpus) {
    auto& z = state.z[static_cast<size_t>(d)][static_cast<size_t>(n)];
    const int old_k = z;
    if (old_k == new_k) return;
    const int v = corpus.docs[static_cast<size_t>(d)].tokens[static_cast<size_t>(n)];
    state.s(d, old_k) -= 1;
    state.s(d, new_k) += 1;
    if (!state.s_par.empty()) {
        state.s_par[static_cast<size_t>(d)](p, old_k) -= 1;
        state.s_par[static_cast<size_t>(d)](p, new_k) += 1;
    }
    state.m(old_k, v) -= 1;
    state.m(new_k, v) += 1;
    state.m_col(old_k) -= 1;
    state.m_col(new_k) += 1;
    z = new_k;
}

int paragraph_of(const Document& doc, int n) {
    for (int p = 0; p < doc.num_paragraphs(); ++p) {
        auto [first, last] = doc.paragraph(p);
        if (n >= first && n < last) return p;
    }
    throw DataError("token index outside every paragraph");
}

}  // namespace

TopicState init_state(const Corpus& corpus, const TopicHyper& hyper, Rng& rng) {
    const int D = corpus.num_docs();
    const int K = hyper.K;
    TopicState state;
    state.s = Eigen::MatrixXi::Zero(D, K);
    state.m = Eigen::MatrixXi::Zero(K, corpus.vocab.size());
    state.m_col = Eigen::VectorXi::Zero(K);
    state.z.resize(static_cast<size_t>(D));

    bool has_paragraphs = false;
    for (const auto& doc : corpus.docs) {
        if (!doc.paragraph_bounds.empty()) { has_paragraphs = true; break; }
    }
    if (has_paragraphs) state.s_par.resize(static_cast<size_t>(D));

    std::uniform_int_distribution<int> topic(0, K - 1);
    for (int d = 0; d < D; ++d) {
        const Document& doc = corpus.docs[static_cast<size_t>(d)];
        auto& zd = state.z[static_cast<size_t>(d)];
        zd.resize(doc.tokens.size());
        if (has_paragraphs) {
            state.s_par[static_cast<size_t>(d)] =
                Eigen::MatrixXi::Zero(std::max(doc.num_paragraphs(), 1), K);
        }
        for (int n = 0; n < doc.length(); ++n) {
            const int k = topic(rng);
            zd[static_cast<size_t>(n)] = k;
            state.s(d, k) += 1;
            if (has_paragraphs) {
                state.s_par[static_cast<size_t>(d)](paragraph_of(doc, n), k) += 1;
            }
            state.m(k, doc.tokens[static_cast<size_t>(n)]) += 1;
            state.m_col(k) += 1;
        }
    }
    return state;
}

void TopicState::check(const Corpus& corpus) const {
    const int D = corpus.num_docs();
    const int K = num_topics();
    Eigen::MatrixXi s_ref = Eigen::MatrixXi::Zero(D, K);
    Eigen::MatrixXi m_ref = Eigen::MatrixXi::Zero(K, corpus.vocab.size());
    for (int d = 0; d < D; ++d) {
        const Document& doc = corpus.docs[static_cast<size_t>(d)];
        if (z[static_cast<size_t>(d)].size() != doc.tokens.size()) {
            throw DataError("topic state: z length mismatch in document " + doc.id);
        }
        for (int n = 0; n < doc.length(); ++n) {
            const int k = z[static_cast<size_t>(d)][static_cast<size_t>(n)];
            s_ref(d, k) += 1;
            m_ref(k, doc.tokens[static_cast<size_t>(n)]) += 1;
        }
    }
    if (s_ref != s) throw DataError("topic state: s cache inconsistent with z");
    if (m_ref != m) throw DataError("topic state: m cache inconsistent with z");
    if (m.rowwise().sum() != m_col) throw DataError("topic state: m_col inconsistent");
    if (!s_par.empty()) {
        for (int d = 0; d < D; ++d) {
            const Document& doc = corpus.docs[static_cast<size_t>(d)];
            Eigen::MatrixXi ref =
                Eigen::MatrixXi::Zero(std::max(doc.num_paragraphs(), 1), K);
            for (int n = 0; n < doc.length(); ++n) {
                ref(paragraph_of(doc, n),
                    z[static_cast<size_t>(d)][static_cast<size_t>(n)]) += 1;
            }
            if (ref != s_par[static_cast<size_t>(d)]) {
                throw DataError("topic state: paragraph counts inconsistent in document " +
                                doc.id);
            }
        }
    }
}

Eigen::VectorXd token_conditional(int d, int n, const TopicState& state,
                                  const Corpus& corpus, const TopicHyper& hyper,
                                  const OmegaView& view, double sigma2) {
    return conditional_impl(d, -1, n, state, corpus, hyper,
                            make_context(d, corpus, view), sigma2);
}

Eigen::VectorXd token_conditional_paragraph(int d, int p, int n, const TopicState& state,
                                            const Corpus& corpus, const TopicHyper& hyper,
                                            const OmegaView& view, double sigma2) {
    if (state.s_par.empty()) throw DataError("state has no paragraph counts");
    return conditional_impl(d, p, n, state, corpus, hyper,
                            make_context(d, corpus, view), sigma2);
}

void sample_token(int d, int n, TopicState& state, const Corpus& corpus,
                  const TopicHyper& hyper, const OmegaView& view, double sigma2,
                  Rng& rng) {
    const Eigen::VectorXd probs = token_conditional(d, n, state, corpus, hyper, view, sigma2);
    const int p = state.s_par.empty()
                      ? 0
                      : paragraph_of(corpus.docs[static_cast<size_t>(d)], n);
    reassign(d, p, n, draw_categorical(probs, rng), state, corpus);
}

void sample_token_paragraph(int d, int p, int n, TopicState& state, const Corpus& corpus,
                            const TopicHyper& hyper, const OmegaView& view, double sigma2,
                            Rng& rng) {
    const Eigen::VectorXd probs =
        token_conditional_paragraph(d, p, n, state, corpus, hyper, view, sigma2);
    reassign(d, p, n, draw_categorical(probs, rng), state, corpus);
}

void estep_sweep(TopicState& state, const Corpus& corpus, const TopicHyper& hyper,
                 const OmegaView& view, double sigma2, Rng& rng) {
    for (int d = 0; d < corpus.num_docs(); ++d) {
        const Document& doc = corpus.docs[static_cast<size_t>(d)];
        if (doc.empty()) continue;
        const DocContext ctx = make_context(d, corpus, view);
        if (state.s_par.empty()) {
            for (int n = 0; n < doc.length(); ++n) {
                const Eigen::VectorXd probs =
                    conditional_impl(d, -1, n, state, corpus, hyper, ctx, sigma2);
                reassign(d, 0, n, draw_categorical(probs, rng), state, corpus);
            }
        } else {
            for (int p = 0; p < doc.num_paragraphs(); ++p) {
                auto [first, last] = doc.paragraph(p);
                for (int n = first; n < last; ++n) {
                    const Eigen::VectorXd probs =
                        conditional_impl(d, p, n, state, corpus, hyper, ctx, sigma2);
                    reassign(d, p, n, draw_categorical(probs, rng), state, corpus);
                }
            }
        }
    }
}

Eigen::MatrixXd recover_theta(const TopicState& state, const TopicHyper& hyper) {
    Eigen::MatrixXd theta = state.s.cast<double>();
    theta.array() += hyper.alpha;
    theta.array().colwise() /= theta.rowwise().sum().array();
    return theta;
}

Eigen::MatrixXd recover_beta(const TopicState& state, const TopicHyper& hyper) {
    Eigen::MatrixXd beta = state.m.cast<double>();
    beta.array() += hyper.eta;
    beta.array().colwise() /= beta.rowwise().sum().array();
    return beta;
}

Eigen::VectorXd zbar_row(int d, const TopicState& state, const Corpus& corpus,
                         const TopicHyper& hyper) {
    const int K = state.num_topics();
    const Document& doc = corpus.docs[static_cast<size_t>(d)];
    if (doc.empty()) {
        // prior proportions; uniform under a symmetric alpha
        return Eigen::VectorXd::Constant(K, 1.0 / K);
    }
    return state.s.row(d).cast<double>() / static_cast<double>(doc.length());
}

Eigen::VectorXd assemble_row(const Eigen::VectorXd& zbar, const Eigen::VectorXd& x_row,
                             const std::vector<int>& interacted_cols) {
    const int K = static_cast<int>(zbar.size());
    const int n1 = static_cast<int>(interacted_cols.size());
    const int P = static_cast<int>(x_row.size());
    Eigen::VectorXd row(design_width(K, n1, P - n1));
    row.head(K) = zbar;
    for (int j = 0; j < n1; ++j) {
        row.segment(K + j * K, K) = x_row(interacted_cols[static_cast<size_t>(j)]) * zbar;
    }
    int pos = K + n1 * K;
    for (int j = 0; j < P; ++j) {
        if (std::find(interacted_cols.begin(), interacted_cols.end(), j) ==
            interacted_cols.end()) {
            row(pos++) = x_row(j);
        }
    }
    return row;
}

Eigen::VectorXd design_row(int d, const TopicState& state, const Corpus& corpus,
                           const TopicHyper& hyper) {
    return assemble_row(zbar_row(d, state, corpus, hyper), corpus.x.row(d),
                        corpus.interacted_cols);
}

std::string TopicState::to_json(const Rng& rng) const {
    json obj;
    obj["z"] = z;
    std::ostringstream rng_state;
    rng_state << rng;
    obj["rng"] = rng_state.str();
    return obj.dump();
}

TopicState TopicState::from_json(const std::string& text, const Corpus& corpus, int K,
                                 Rng* rng_out) {
    json obj = json::parse(text);
    auto z = obj.at("z").get<std::vector<std::vector<int>>>();
    if (static_cast<int>(z.size()) != corpus.num_docs()) {
        throw DataError("topic state snapshot does not match corpus size");
    }
    TopicHyper hyper{K, 1.0, 1.0};
    Rng dummy(0);
    TopicState state = init_state(corpus, hyper, dummy);
    // rebuild caches from the stored assignments
    state.s.setZero();
    state.m.setZero();
    state.m_col.setZero();
    for (auto& sp : state.s_par) sp.setZero();
    for (int d = 0; d < corpus.num_docs(); ++d) {
        const Document& doc = corpus.docs[static_cast<size_t>(d)];
        if (z[static_cast<size_t>(d)].size() != doc.tokens.size()) {
            throw DataError("topic state snapshot: document length mismatch");
        }
        for (int n = 0; n < doc.length(); ++n) {
            const int k = z[static_cast<size_t>(d)][static_cast<size_t>(n)];
            if (k < 0 || k >= K) throw DataError("topic state snapshot: topic out of range");
            state.s(d, k) += 1;
            if (!state.s_par.empty()) {
                state.s_par[static_cast<size_t>(d)](paragraph_of(doc, n), k) += 1;
            }
            state.m(k, doc.tokens[static_cast<size_t>(n)]) += 1;
            state.m_col(k) += 1;
        }
    }
    state.z = std::move(z);
    if (rng_out) {
        std::istringstream rng_state(obj.at("rng").get<std::string>());
        rng_state >> *rng_out;
    }
    return state;
}

}  // namespace btr
