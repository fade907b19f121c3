#include "btr/pipelines.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace btr {

void TrainConfig::validate() const {
    if (hyper.K < 1 || hyper.alpha <= 0.0 || hyper.eta <= 0.0) {
        throw DataError("invalid topic hyperparameters");
    }
    if (estep_iters < 1 || max_em_iters < 1) {
        throw DataError("estep_iters and max_em_iters must be >= 1");
    }
    if (burn_in < 0 || burn_in >= estep_iters) {
        throw DataError("burn_in must lie in [0, estep_iters)");
    }
    if (infer_burn_in < 0 || infer_burn_in >= infer_iters) {
        throw DataError("infer_burn_in must lie in [0, infer_iters)");
    }
    if (mstep_draws < 2) throw DataError("mstep_draws must be >= 2");
}

namespace {

NigPrior resolve_prior(const NigPrior& prior, int width) {
    if (prior.m0.size() == 0) {
        // symmetric default, weakly informative
        return NigPrior::symmetric(width, 0.0, 2.0, 0.2, 4.0);
    }
    if (prior.m0.size() != width) {
        throw DataError("prior dimension " + std::to_string(prior.m0.size()) +
                        " does not match design width " + std::to_string(width));
    }
    return prior;
}

Eigen::MatrixXd assemble_design(const Eigen::MatrixXd& zbar, const Corpus& corpus) {
    const int D = corpus.num_docs();
    const int K = static_cast<int>(zbar.cols());
    const int n1 = static_cast<int>(corpus.interacted_cols.size());
    Eigen::MatrixXd A(D, design_width(K, n1, corpus.num_features() - n1));
    for (int d = 0; d < D; ++d) {
        A.row(d) = assemble_row(zbar.row(d), corpus.x.row(d), corpus.interacted_cols);
    }
    return A;
}

Corpus strip_features(const Corpus& corpus) {
    Corpus out = corpus;
    out.x.resize(corpus.num_docs(), 0);
    out.interacted_cols.clear();
    out.feature_names.clear();
    return out;
}

Corpus concat(const Corpus& a, const Corpus& b) {
    Corpus out = a;
    out.docs.insert(out.docs.end(), b.docs.begin(), b.docs.end());
    out.x.conservativeResize(a.num_docs() + b.num_docs(), Eigen::NoChange);
    out.x.bottomRows(b.num_docs()) = b.x;
    out.y.conservativeResize(a.num_docs() + b.num_docs());
    out.y.tail(b.num_docs()) = b.y;
    return out;
}

}  // namespace

BtrModel train_btr(const Corpus& estep, const Corpus& mstep, const TrainConfig& cfg,
                   const NormStats& norm, const std::string& log_path) {
    cfg.validate();
    estep.validate();
    mstep.validate();
    const int K = cfg.hyper.K;
    const int n1 = static_cast<int>(estep.interacted_cols.size());
    const int n2 = estep.num_features() - n1;
    const int width = design_width(K, n1, n2);
    const NigPrior prior = resolve_prior(cfg.prior, width);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw DataError("cannot open training log: " + log_path);
        log << "em_iter,estep_seconds,val_mse,sigma2,omega_norm\n";
    }

    Rng rng = make_rng(cfg.seed, "btr-estep");
    TopicState state = init_state(estep, cfg.hyper, rng);

    RegressionParams params;
    params.omega = Eigen::VectorXd::Zero(width);
    params.sigma2 = 1.0;

    BtrModel model;
    model.hyper = cfg.hyper;
    model.prior = prior;
    model.norm = norm;
    model.vocab = estep.vocab;
    model.interacted_cols = estep.interacted_cols;
    model.num_features = estep.num_features();

    double best_mse = std::numeric_limits<double>::infinity();
    double prev_mse = std::numeric_limits<double>::infinity();

    for (int em = 0; em < cfg.max_em_iters; ++em) {
        const OmegaView view = partition_omega(params.omega, K, n1, n2);

        const auto t0 = std::chrono::steady_clock::now();
        Eigen::MatrixXd beta_accum =
            Eigen::MatrixXd::Zero(K, estep.vocab.size());
        int kept = 0;
        for (int it = 0; it < cfg.estep_iters; ++it) {
            estep_sweep(state, estep, cfg.hyper, view, params.sigma2, rng);
            if (it >= cfg.burn_in) {
                beta_accum += recover_beta(state, cfg.hyper);
                ++kept;
            }
        }
        const Eigen::MatrixXd beta_hat = beta_accum / kept;
        const double estep_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        // M-step on the held-aside subsample: fold in topics at fixed beta_hat,
        // then the conjugate regression update.
        const InferredTopics folded =
            infer_topics(beta_hat, cfg.hyper, mstep, cfg.infer_iters, cfg.infer_burn_in,
                         derive_seed(cfg.seed, "btr-mstep", static_cast<std::uint64_t>(em)));
        const Eigen::MatrixXd A = assemble_design(folded.zbar, mstep);
        const NigPosterior post = nig_update(A, mstep.y, prior);
        if (post.a_n <= 1.0) {
            throw NumericalError("posterior mean of sigma^2 undefined (a_n <= 1); "
                                 "increase a0 or supply more data");
        }
        params.omega = post.m_n;
        params.sigma2 = post.b_n / (post.a_n - 1.0);

        const double val_mse = mean_squared_error(mstep.y, A * params.omega);
        model.trace.push_back(val_mse);
        if (log.is_open()) {
            log << em << ',' << estep_seconds << ',' << val_mse << ',' << params.sigma2
                << ',' << params.omega.norm() << '\n';
        }

        if (val_mse < best_mse) {
            best_mse = val_mse;
            model.beta_hat = beta_hat;
            model.posterior = post;
            model.params = params;
        }

        if (em > 0) {
            const double improvement = (prev_mse - val_mse) / std::max(prev_mse, 1e-12);
            if (improvement < cfg.convergence_tol) break;
        }
        prev_mse = val_mse;
    }
    return model;
}

LdaModel train_lda(const Corpus& corpus, const TopicHyper& hyper, int iters, int burn_in,
                   int thinning, std::uint64_t seed) {
    if (iters < 1 || burn_in < 0 || burn_in >= iters || thinning < 1) {
        throw DataError("invalid LDA iteration control");
    }
    Rng rng = make_rng(seed, "lda-gibbs");
    TopicState state = init_state(corpus, hyper, rng);
    const OmegaView no_response{};  // empty omega drops the supervision term

    const int D = corpus.num_docs();
    LdaModel model;
    model.beta_hat = Eigen::MatrixXd::Zero(hyper.K, corpus.vocab.size());
    model.theta_hat = Eigen::MatrixXd::Zero(D, hyper.K);
    model.zbar = Eigen::MatrixXd::Zero(D, hyper.K);
    int kept = 0;
    for (int it = 0; it < iters; ++it) {
        estep_sweep(state, corpus, hyper, no_response, 1.0, rng);
        if (it >= burn_in && (it - burn_in) % thinning == 0) {
            model.beta_hat += recover_beta(state, hyper);
            model.theta_hat += recover_theta(state, hyper);
            for (int d = 0; d < D; ++d) {
                model.zbar.row(d) += zbar_row(d, state, corpus, hyper);
            }
            ++kept;
        }
    }
    if (kept == 0) throw DataError("LDA iteration control kept no samples");
    model.beta_hat /= kept;
    model.theta_hat /= kept;
    model.zbar /= kept;
    return model;
}

InferredTopics infer_topics(const Eigen::MatrixXd& beta_hat, const TopicHyper& hyper,
                            const Corpus& docs, int iters, int burn_in,
                            std::uint64_t seed) {
    if (burn_in < 0 || burn_in >= iters) throw DataError("invalid fold-in iteration control");
    const int K = hyper.K;
    const int D = docs.num_docs();
    InferredTopics out;
    out.theta = Eigen::MatrixXd::Zero(D, K);
    out.zbar = Eigen::MatrixXd::Zero(D, K);
    const int kept = iters - burn_in;

    Rng rng = make_rng(seed, "fold-in");
    std::uniform_int_distribution<int> uniform_topic(0, K - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int d = 0; d < D; ++d) {
        const Document& doc = docs.docs[static_cast<size_t>(d)];
        if (doc.empty()) {
            out.theta.row(d).setConstant(1.0 / K);
            out.zbar.row(d).setConstant(1.0 / K);
            continue;
        }
        const int N = doc.length();
        std::vector<int> z(static_cast<size_t>(N));
        Eigen::VectorXd s = Eigen::VectorXd::Zero(K);
        for (int n = 0; n < N; ++n) {
            z[static_cast<size_t>(n)] = uniform_topic(rng);
            s(z[static_cast<size_t>(n)]) += 1.0;
        }
        Eigen::VectorXd weights(K);
        for (int it = 0; it < iters; ++it) {
            for (int n = 0; n < N; ++n) {
                const int old_k = z[static_cast<size_t>(n)];
                const int v = doc.tokens[static_cast<size_t>(n)];
                s(old_k) -= 1.0;
                for (int k = 0; k < K; ++k) {
                    weights(k) = (s(k) + hyper.alpha) * beta_hat(k, v);
                }
                const double total = weights.sum();
                if (!(total > 0.0) || !std::isfinite(total)) {
                    throw NumericalError("fold-in: token has zero probability under "
                                         "every topic");
                }
                double u = unif(rng) * total;
                int new_k = K - 1;
                for (int k = 0; k < K - 1; ++k) {
                    u -= weights(k);
                    if (u < 0.0) { new_k = k; break; }
                }
                z[static_cast<size_t>(n)] = new_k;
                s(new_k) += 1.0;
            }
            if (it >= burn_in) {
                out.zbar.row(d) += s.transpose() / N;
                out.theta.row(d) += ((s.array() + hyper.alpha) /
                                     (N + K * hyper.alpha)).matrix().transpose();
            }
        }
        out.zbar.row(d) /= kept;
        out.theta.row(d) /= kept;
    }
    return out;
}

Eigen::VectorXd predict_heldout(const BtrModel& model, const Corpus& docs,
                                int infer_iters, int infer_burn_in, std::uint64_t seed) {
    if (docs.num_features() != model.num_features) {
        throw DataError("predict_heldout: feature count mismatch");
    }
    Corpus normalized = apply_norm(docs, model.norm);
    const InferredTopics folded =
        infer_topics(model.beta_hat, model.hyper, normalized, infer_iters, infer_burn_in,
                     derive_seed(seed, "predict-foldin"));
    const Eigen::MatrixXd A = assemble_design(folded.zbar, normalized);
    return (A * model.params.omega).array() + model.norm.y_mean;
}

double TwoStageModel::treatment_coef(int treatment_col) const {
    const int offset = (order == StageOrder::TopicFirst && kind == TopicKind::Lda)
                           ? 1 + static_cast<int>(topic_model.beta_hat.rows())
                           : 1;
    return lr_coefs(offset + treatment_col);
}

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd out(X.rows(), X.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(X.cols()) = X;
    return out;
}

// sLDA = the BTR loop over text-only corpora.
BtrModel fit_slda(const Corpus& estep_text, const Corpus& mstep_text,
                  const TrainConfig& cfg) {
    Corpus both = concat(estep_text, mstep_text);
    NormStats norm;
    norm.means.resize(0);
    norm.stds.resize(0);
    norm.y_mean = both.y.mean();
    return train_btr(apply_norm(estep_text, norm), apply_norm(mstep_text, norm), cfg, norm);
}

}  // namespace

TwoStageModel train_two_stage(StageOrder order, TopicKind kind, const Corpus& estep,
                              const Corpus& mstep, const TrainConfig& cfg) {
    cfg.validate();
    TwoStageModel model;
    model.order = order;
    model.kind = kind;
    const Corpus train = concat(estep, mstep);

    if (order == StageOrder::LrFirst) {
        if (kind != TopicKind::Slda) {
            throw DataError("LR-first composition requires the sLDA topic stage");
        }
        const OlsFit stage1 = ols_fit(with_intercept(train.x), train.y);
        model.lr_coefs = stage1.coefficients;

        auto residualize = [&](const Corpus& part) {
            Corpus out = strip_features(part);
            const Eigen::VectorXd pred = with_intercept(part.x) * model.lr_coefs;
            out.y = part.y - pred;
            return out;
        };
        model.topic_model = fit_slda(residualize(estep), residualize(mstep), cfg);
        return model;
    }

    if (kind == TopicKind::Slda) {
        model.topic_model = fit_slda(strip_features(estep), strip_features(mstep), cfg);
        const Eigen::VectorXd topic_pred =
            predict_heldout(model.topic_model, strip_features(train));
        const OlsFit stage2 = ols_fit(with_intercept(train.x), train.y - topic_pred);
        model.lr_coefs = stage2.coefficients;
    } else {
        const LdaModel lda = train_lda(train, cfg.hyper, cfg.estep_iters * cfg.max_em_iters,
                                       cfg.burn_in, cfg.thinning, cfg.seed);
        model.topic_model.beta_hat = lda.beta_hat;
        model.topic_model.hyper = cfg.hyper;
        model.topic_model.vocab = train.vocab;
        model.topic_model.num_features = train.num_features();
        const InferredTopics folded = infer_topics(
            lda.beta_hat, cfg.hyper, train, cfg.infer_iters, cfg.infer_burn_in,
            derive_seed(cfg.seed, "lda-lr-foldin"));
        Eigen::MatrixXd design(train.num_docs(), 1 + cfg.hyper.K + train.num_features());
        design.col(0).setOnes();
        design.middleCols(1, cfg.hyper.K) = folded.zbar;
        design.rightCols(train.num_features()) = train.x;
        // drop the last topic column (proportions sum to one against the
        // intercept); minimum-norm solve tolerates the degenerate all-empty
        // text case where the remaining topic columns are still constant
        Eigen::MatrixXd reduced(design.rows(), design.cols() - 1);
        reduced << design.leftCols(cfg.hyper.K), design.rightCols(train.num_features());
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(reduced);
        const Eigen::VectorXd coefs = cod.solve(train.y);
        model.lr_coefs = Eigen::VectorXd::Zero(design.cols());
        model.lr_coefs.head(cfg.hyper.K) = coefs.head(cfg.hyper.K);
        model.lr_coefs.tail(train.num_features()) = coefs.tail(train.num_features());
    }
    return model;
}

Eigen::VectorXd predict_two_stage(const TwoStageModel& model, const Corpus& docs,
                                  const TrainConfig& cfg) {
    if (model.order == StageOrder::LrFirst) {
        return with_intercept(docs.x) * model.lr_coefs +
               predict_heldout(model.topic_model, strip_features(docs));
    }
    if (model.kind == TopicKind::Slda) {
        return predict_heldout(model.topic_model, strip_features(docs)) +
               with_intercept(docs.x) * model.lr_coefs;
    }
    const int K = static_cast<int>(model.topic_model.beta_hat.rows());
    const InferredTopics folded =
        infer_topics(model.topic_model.beta_hat, model.topic_model.hyper, docs,
                     cfg.infer_iters, cfg.infer_burn_in,
                     derive_seed(cfg.seed, "lda-lr-predict"));
    Eigen::MatrixXd design(docs.num_docs(), 1 + K + docs.num_features());
    design.col(0).setOnes();
    design.middleCols(1, K) = folded.zbar;
    design.rightCols(docs.num_features()) = docs.x;
    return design * model.lr_coefs;
}

Eigen::VectorXd two_stage_stage_coefs(StageOrder order, TopicKind kind,
                                      const Corpus& train, const TrainConfig& cfg,
                                      std::uint64_t seed) {
    // halve the (already shuffled or resampled) corpus into E/M subsamples
    const int D = train.num_docs();
    std::vector<int> first, second;
    for (int d = 0; d < D; ++d) (d < D / 2 ? first : second).push_back(d);
    TrainConfig local = cfg;
    local.seed = seed;
    const TwoStageModel model =
        train_two_stage(order, kind, subset(train, first), subset(train, second), local);
    return model.lr_coefs;
}

Eigen::MatrixXd omega_draws(const BtrModel& model, int n, std::uint64_t seed) {
    Rng rng = make_rng(seed, "omega-draws");
    Eigen::MatrixXd draws(n, model.posterior.m_n.size());
    for (int i = 0; i < n; ++i) {
        draws.row(i) = nig_sample(model.posterior, rng).omega;
    }
    return draws;
}

Eigen::MatrixXd to_original_units(const Eigen::MatrixXd& draws, const NormStats& norm,
                                  int K) {
    const int P = static_cast<int>(norm.means.size());
    if (draws.cols() != K + P) {
        throw DataError("to_original_units expects a [zbar, x] design without interactions");
    }
    Eigen::MatrixXd out = draws;
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        double shift = norm.y_mean;
        for (int j = 0; j < P; ++j) {
            const double coef = draws(i, K + j) / norm.stds(j);
            out(i, K + j) = coef;
            shift -= coef * norm.means(j);
        }
        out.row(i).head(K).array() += shift;
    }
    return out;
}

std::string BtrModel::to_json() const {
    json obj;
    json beta = json::array();
    for (Eigen::Index k = 0; k < beta_hat.rows(); ++k) {
        beta.push_back(std::vector<double>(beta_hat.row(k).begin(), beta_hat.row(k).end()));
    }
    obj["beta_hat"] = beta;
    obj["posterior"] = json::parse(posterior.to_json());
    obj["params"] = json::parse(params.to_json());
    obj["hyper"] = {{"K", hyper.K}, {"alpha", hyper.alpha}, {"eta", hyper.eta}};
    obj["prior"] = json::parse(prior.to_json());
    obj["norm"] = json::parse(norm.to_json());
    obj["vocab"] = vocab.terms();
    obj["interacted_cols"] = interacted_cols;
    obj["num_features"] = num_features;
    obj["trace"] = trace;
    return obj.dump(2);
}

BtrModel BtrModel::from_json(const std::string& text) {
    json obj = json::parse(text);
    BtrModel model;
    const auto& beta = obj.at("beta_hat");
    const auto K = static_cast<Eigen::Index>(beta.size());
    if (K > 0) {
        const auto V = static_cast<Eigen::Index>(beta[0].size());
        model.beta_hat.resize(K, V);
        for (Eigen::Index k = 0; k < K; ++k) {
            auto row = beta[static_cast<size_t>(k)].get<std::vector<double>>();
            model.beta_hat.row(k) = Eigen::Map<Eigen::VectorXd>(row.data(), V);
        }
    }
    model.posterior = NigPosterior::from_json(obj.at("posterior").dump());
    model.params = RegressionParams::from_json(obj.at("params").dump());
    model.hyper.K = obj.at("hyper").at("K").get<int>();
    model.hyper.alpha = obj.at("hyper").at("alpha").get<double>();
    model.hyper.eta = obj.at("hyper").at("eta").get<double>();
    model.prior = NigPrior::from_json(obj.at("prior").dump());
    model.norm = NormStats::from_json(obj.at("norm").dump());
    for (const auto& term : obj.at("vocab")) model.vocab.add(term.get<std::string>());
    model.interacted_cols = obj.at("interacted_cols").get<std::vector<int>>();
    model.num_features = obj.at("num_features").get<int>();
    model.trace = obj.at("trace").get<std::vector<double>>();
    return model;
}

void BtrModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open model file for writing: " + path);
    out << to_json();
}

BtrModel BtrModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

}  // namespace btr
