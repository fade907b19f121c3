// Command-line frontend: synth, train, eval, infer, repro.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "btr/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw btr::DataError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw btr::DataError("cannot write " + path);
    out << text;
}

json vec_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.begin(), v.end());
}

json mat_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

Eigen::VectorXd vec_from(const json& arr) {
    auto v = arr.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Expands `--config file.json` into extra long options. Flags given on the
// command line win: config keys already present in argv are skipped.
std::vector<std::string> apply_config(std::vector<std::string> args) {
    std::string config_path;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    json cfg = json::parse(read_file(config_path));
    if (!cfg.is_object()) throw btr::DataError("config must be a JSON object: " + config_path);
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        bool present = false;
        for (const auto& a : args) {
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        }
        if (present) continue;
        std::string text = value.is_string() ? value.get<std::string>() : value.dump();
        args.push_back(flag + "=" + text);
    }
    return args;
}

struct SchemaFlags {
    btr::JsonlSchema schema;
    void attach(CLI::App* cmd) {
        cmd->add_option("--id-field", schema.id_field, "JSONL field holding the document id");
        cmd->add_option("--text-field", schema.text_field,
                        "JSONL field holding the text (string or paragraph array)");
        cmd->add_option("--features-field", schema.features_field,
                        "JSONL field holding the numeric feature array");
        cmd->add_option("--feature-fields", schema.feature_fields,
                        "scalar JSONL fields used as features instead of the array field");
        cmd->add_option("--response-field", schema.response_field,
                        "JSONL field holding the response");
        cmd->add_option("--interact", schema.interacted_cols,
                        "feature columns interacted with topic proportions");
    }
};

btr::Corpus concat(const btr::Corpus& a, const btr::Corpus& b) {
    btr::Corpus out = a;
    out.docs.insert(out.docs.end(), b.docs.begin(), b.docs.end());
    out.x.conservativeResize(a.num_docs() + b.num_docs(), Eigen::NoChange);
    out.x.bottomRows(b.num_docs()) = b.x;
    out.y.conservativeResize(a.num_docs() + b.num_docs());
    out.y.tail(b.num_docs()) = b.y;
    return out;
}

btr::Corpus strip_features(btr::Corpus c) {
    c.x = Eigen::MatrixXd(c.num_docs(), 0);
    c.feature_names.clear();
    c.interacted_cols.clear();
    return c;
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
    std::string recipe = "synthetic";
    int docs = 10000;
    int words = 50;
    double sigma_eps = 1.0;
    double rho = 0.7;
    double gamma1 = 4.0;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
};

int cmd_synth(const SynthArgs& a) {
    btr::GeneratedData gen;
    const btr::Recipe recipe = btr::parse_recipe(a.recipe);
    switch (recipe) {
        case btr::Recipe::Synthetic:
            gen = btr::gen_synthetic(a.docs, a.words, a.sigma_eps, a.seed);
            break;
        case btr::Recipe::BookingGT:
            gen = btr::gen_booking_semisynth(a.docs, a.words, a.rho, a.sigma_eps, a.seed);
            break;
        case btr::Recipe::YelpGT:
            gen = btr::gen_yelp_semisynth(a.docs, a.words, a.gamma1, a.sigma_eps, a.seed);
            break;
    }
    fs::create_directories(a.out_dir);
    const std::string corpus_path = (fs::path(a.out_dir) / "corpus.jsonl").string();
    const std::string truth_path = (fs::path(a.out_dir) / "truth.json").string();
    btr::JsonlSchema schema;
    schema.feature_fields = gen.corpus.feature_names;
    btr::write_jsonl(gen.corpus, corpus_path, schema);
    write_file(truth_path, gen.truth.to_json());
    std::cout << "seed=" << a.seed << "\ncorpus=" << corpus_path
              << "\ntruth=" << truth_path << "\n";
    return 0;
}

// ---------------------------------------------------------------- train ----

struct TrainArgs {
    std::string data;
    std::string model = "btr";
    std::string out = "model.json";
    std::string log;
    double test_frac = 0.0;
    double estep_frac = 0.5;
    int lda_iters = 1000;
    btr::TrainConfig cfg;
    double m0 = 0.0, s0 = 2.0, a0 = 0.2, b0 = 4.0;
    SchemaFlags schema;
};

json wrap_btr(const std::string& kind, const btr::BtrModel& model) {
    return json{{"kind", kind}, {"model", json::parse(model.to_json())}};
}

int cmd_train(TrainArgs& a) {
    btr::Corpus corpus = btr::ingest_jsonl(a.data, a.schema.schema);
    const auto splits = btr::split(corpus, 1.0 - a.test_frac, a.test_frac, a.estep_frac,
                                   btr::derive_seed(a.cfg.seed, "split"));
    json out;

    auto fit_joint = [&](const btr::Corpus& estep, const btr::Corpus& mstep) {
        const btr::Corpus train = concat(estep, mstep);
        const btr::NormStats norm = btr::compute_norm_stats(train);
        const int width = btr::design_width(
            a.cfg.hyper.K, static_cast<int>(estep.interacted_cols.size()),
            estep.num_features() - static_cast<int>(estep.interacted_cols.size()));
        a.cfg.prior = btr::NigPrior::symmetric(width, a.m0, a.s0, a.a0, a.b0);
        return btr::train_btr(btr::apply_norm(estep, norm), btr::apply_norm(mstep, norm),
                              a.cfg, norm, a.log);
    };

    if (a.model == "btr") {
        out = wrap_btr("btr", fit_joint(splits.estep, splits.mstep));
    } else if (a.model == "slda") {
        out = wrap_btr("slda",
                       fit_joint(strip_features(splits.estep), strip_features(splits.mstep)));
    } else if (a.model == "lda") {
        const btr::Corpus train = concat(splits.estep, splits.mstep);
        const btr::LdaModel lda = btr::train_lda(train, a.cfg.hyper, a.lda_iters,
                                                 a.cfg.burn_in, a.cfg.thinning, a.cfg.seed);
        out = json{{"kind", "lda"},
                   {"beta_hat", mat_json(lda.beta_hat)},
                   {"alpha", a.cfg.hyper.alpha},
                   {"vocab", train.vocab.terms()}};
    } else if (a.model == "ols") {
        const btr::Corpus train = concat(splits.estep, splits.mstep);
        Eigen::MatrixXd A(train.num_docs(), 1 + train.num_features());
        A.col(0).setOnes();
        A.rightCols(train.num_features()) = train.x;
        const btr::OlsFit fit = btr::ols_fit(A, train.y);
        out = json{{"kind", "ols"},
                   {"coefficients", vec_json(fit.coefficients)},
                   {"feature_names", train.feature_names}};
    } else {
        const bool lr_first = a.model == "lr_slda";
        const btr::StageOrder order =
            lr_first ? btr::StageOrder::LrFirst : btr::StageOrder::TopicFirst;
        const btr::TopicKind kind =
            a.model == "lda_lr" ? btr::TopicKind::Lda : btr::TopicKind::Slda;
        const btr::TwoStageModel two = btr::train_two_stage(order, kind, splits.estep,
                                                            splits.mstep, a.cfg);
        out = json{{"kind", a.model},
                   {"lr_coefs", vec_json(two.lr_coefs)},
                   {"topic_model", json::parse(two.topic_model.to_json())}};
    }
    write_file(a.out, out.dump(2));
    std::cout << "model=" << a.out << "\n";
    return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalArgs {
    std::string model;
    std::string data;
    std::string out = "metrics.csv";
    std::string truth;
    std::uint64_t seed = 1;
    int draws = 2000;
    SchemaFlags schema;
};

btr::TwoStageModel two_stage_from_json(const json& obj) {
    btr::TwoStageModel two;
    const std::string kind = obj.at("kind").get<std::string>();
    two.order = kind == "lr_slda" ? btr::StageOrder::LrFirst : btr::StageOrder::TopicFirst;
    two.kind = kind == "lda_lr" ? btr::TopicKind::Lda : btr::TopicKind::Slda;
    two.lr_coefs = vec_from(obj.at("lr_coefs"));
    two.topic_model = btr::BtrModel::from_json(obj.at("topic_model").dump());
    return two;
}

int cmd_eval(const EvalArgs& a) {
    const json obj = json::parse(read_file(a.model));
    const std::string kind = obj.at("kind").get<std::string>();

    std::optional<btr::GroundTruth> truth;
    if (!a.truth.empty()) truth = btr::GroundTruth::from_json(read_file(a.truth));
    const int tcol = truth ? truth->treatment_col : 0;

    btr::MetricReport report;
    report.model = kind;
    if (truth) report.te_truth = truth->treatment_coef;

    if (kind == "btr" || kind == "slda") {
        const btr::BtrModel model = btr::BtrModel::from_json(obj.at("model").dump());
        btr::JsonlSchema schema = a.schema.schema;
        const btr::Corpus test = btr::ingest_jsonl(a.data, schema, {}, &model.vocab);
        if (test.num_features() != model.num_features) {
            throw btr::DataError("eval: test data has " + std::to_string(test.num_features()) +
                                 " features, model expects " + std::to_string(model.num_features));
        }
        const Eigen::VectorXd yhat = btr::predict_heldout(model, test, 50, 10, a.seed);
        report.mse = btr::mean_squared_error(test.y, yhat);
        report.pr2 = btr::pr2(test.y, yhat);
        const auto inferred = btr::infer_topics(model.beta_hat, model.hyper, test, 50, 10,
                                                btr::derive_seed(a.seed, "eval-perplexity"));
        report.perplexity = btr::perplexity(test, inferred.theta, model.beta_hat);
        if (model.num_features > 0 && model.interacted_cols.empty()) {
            const Eigen::MatrixXd draws = btr::to_original_units(
                btr::omega_draws(model, a.draws, btr::derive_seed(a.seed, "eval-draws")),
                model.norm, model.hyper.K);
            const int col = model.hyper.K + tcol;
            const btr::Interval iv = btr::percentile_intervals(draws.col(col)).at(0);
            report.te_estimate = draws.col(col).mean();
            report.te_lo = iv.lo;
            report.te_hi = iv.hi;
        }
        report.interval_kind = btr::IntervalKind::Posterior;
    } else if (kind == "ols") {
        const btr::Corpus test = btr::ingest_jsonl(a.data, a.schema.schema);
        const Eigen::VectorXd coefs = vec_from(obj.at("coefficients"));
        Eigen::MatrixXd A(test.num_docs(), 1 + test.num_features());
        A.col(0).setOnes();
        A.rightCols(test.num_features()) = test.x;
        if (A.cols() != coefs.size()) throw btr::DataError("eval: feature-count mismatch");
        const Eigen::VectorXd yhat = A * coefs;
        report.mse = btr::mean_squared_error(test.y, yhat);
        report.pr2 = btr::pr2(test.y, yhat);
        report.perplexity = std::numeric_limits<double>::quiet_NaN();
        report.te_estimate = report.te_lo = report.te_hi = coefs(1 + tcol);
        report.interval_kind = btr::IntervalKind::Bootstrap;
    } else if (kind == "lr_slda" || kind == "slda_lr" || kind == "lda_lr") {
        const btr::TwoStageModel two = two_stage_from_json(obj);
        const btr::Corpus test =
            btr::ingest_jsonl(a.data, a.schema.schema, {}, &two.topic_model.vocab);
        btr::TrainConfig cfg;
        cfg.hyper = two.topic_model.hyper;
        cfg.seed = a.seed;
        const Eigen::VectorXd yhat = btr::predict_two_stage(two, test, cfg);
        report.mse = btr::mean_squared_error(test.y, yhat);
        report.pr2 = btr::pr2(test.y, yhat);
        const auto inferred =
            btr::infer_topics(two.topic_model.beta_hat, two.topic_model.hyper, test, 50, 10,
                              btr::derive_seed(a.seed, "eval-perplexity"));
        report.perplexity = btr::perplexity(test, inferred.theta, two.topic_model.beta_hat);
        report.te_estimate = report.te_lo = report.te_hi = two.treatment_coef(tcol);
        report.interval_kind = btr::IntervalKind::Bootstrap;
    } else {
        throw btr::DataError("eval does not support model kind '" + kind + "'");
    }

    const bool fresh = !fs::exists(a.out) || fs::file_size(a.out) == 0;
    std::ofstream out(a.out, std::ios::app);
    if (!out) throw btr::DataError("cannot write " + a.out);
    if (fresh) out << btr::MetricReport::csv_header() << "\n";
    out << report.csv_row() << "\n";
    std::cout << btr::MetricReport::csv_header() << "\n" << report.csv_row() << "\n";
    return 0;
}

// ---------------------------------------------------------------- infer ----

struct InferArgs {
    std::string model;
    std::string data;
    std::string out = "predictions.csv";
    std::uint64_t seed = 1;
    SchemaFlags schema;
};

int cmd_infer(const InferArgs& a) {
    const json obj = json::parse(read_file(a.model));
    const std::string kind = obj.at("kind").get<std::string>();
    if (kind != "btr" && kind != "slda") {
        throw btr::DataError("infer supports btr and slda model files, got '" + kind + "'");
    }
    const btr::BtrModel model = btr::BtrModel::from_json(obj.at("model").dump());
    const btr::Corpus docs = btr::ingest_jsonl(a.data, a.schema.schema, {}, &model.vocab);
    const auto inferred = btr::infer_topics(model.beta_hat, model.hyper, docs, 50, 10,
                                            btr::derive_seed(a.seed, "infer"));
    const Eigen::VectorXd yhat = btr::predict_heldout(model, docs, 50, 10, a.seed);

    std::ofstream out(a.out);
    if (!out) throw btr::DataError("cannot write " + a.out);
    out.precision(12);
    out << "id,yhat";
    for (int k = 0; k < model.hyper.K; ++k) out << ",theta" << k;
    out << "\n";
    for (int d = 0; d < docs.num_docs(); ++d) {
        out << docs.docs[static_cast<size_t>(d)].id << ',' << yhat(d);
        for (int k = 0; k < model.hyper.K; ++k) out << ',' << inferred.theta(d, k);
        out << "\n";
    }
    std::cout << "predictions=" << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- repro ----

struct ReproArgs {
    std::string experiment;
    std::string out_dir;
    std::uint64_t seed = 1;
    int docs = 0;  // 0 = per-experiment default
    int words = 50;
    int replicates = 20;
    int num_seeds = 5;
    int jobs = 1;
};

int cmd_repro(const ReproArgs& a) {
    const std::string out_dir =
        a.out_dir.empty() ? ("repro-" + a.experiment) : a.out_dir;
    fs::create_directories(out_dir);
    std::ostringstream md;
    bool pass = true;

    if (a.experiment == "synthetic") {
        btr::ExperimentOptions opt;
        opt.docs = a.docs > 0 ? a.docs : 2000;
        opt.words_per_doc = a.words;
        opt.bootstrap_replicates = a.replicates;
        const btr::RecoveryReport report = btr::run_synthetic_recovery(opt, a.seed);
        md << report.to_markdown();
        pass = report.btr_all_covered && report.lr_first_excludes &&
               report.topic_first_excludes;
    } else if (a.experiment == "fwl") {
        const btr::FwlReport report = btr::run_fwl(100, 1e-8, a.seed);
        md << report.to_markdown();
        pass = report.all_pass && report.min_naive_deviation > 1e-3;
    } else if (a.experiment == "semisynth-booking" || a.experiment == "semisynth-yelp") {
        const bool booking = a.experiment == "semisynth-booking";
        btr::ExperimentOptions opt;
        opt.docs = a.docs > 0 ? a.docs : 1000;
        opt.words_per_doc = a.words;
        opt.bootstrap_replicates = a.replicates;
        const std::string dataset = booking ? "booking" : "yelp";
        const double high = booking ? 0.7 : 4.0;
        auto sweep = [&](double knob) {
            return btr::run_bias_sweep(dataset, opt, knob, a.num_seeds,
                                       btr::derive_seed(a.seed, dataset, knob == 0.0));
        };
        btr::BiasReport confounded, clean;
        if (a.jobs > 1) {
            auto fut = std::async(std::launch::async, sweep, high);
            clean = sweep(0.0);
            confounded = fut.get();
        } else {
            confounded = sweep(high);
            clean = sweep(0.0);
        }
        md << confounded.to_markdown() << "\n" << clean.to_markdown();
        const double btr_bias = confounded.mean_abs_bias_btr();
        pass = btr_bias < confounded.mean_abs_bias_lr_first() &&
               btr_bias < confounded.mean_abs_bias_topic_first() &&
               clean.mean_intervals_cover();
    } else {
        std::cerr << "unknown experiment '" << a.experiment
                  << "' (expected synthetic, semisynth-booking, semisynth-yelp, fwl)\n";
        return 1;
    }

    md << "\n**" << (pass ? "PASS" : "FAIL") << "** (seed " << a.seed << ")\n";
    const std::string report_path = (fs::path(out_dir) / "report.md").string();
    write_file(report_path, md.str());
    std::cout << md.str() << "\nreport=" << report_path << "\n";
    return pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian topic regression toolkit"};
    app.require_subcommand(1);
    std::string config_note;  // accepted on every subcommand, handled in apply_config

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate a ground-truth corpus");
    synth->add_option("--config", config_note, "JSON config file; explicit flags win");
    synth->add_option("--recipe", synth_args.recipe, "synthetic | booking | yelp");
    synth->add_option("--docs", synth_args.docs, "number of documents")
        ->check(CLI::PositiveNumber);
    synth->add_option("--words", synth_args.words, "tokens per document")
        ->check(CLI::PositiveNumber);
    synth->add_option("--sigma-eps", synth_args.sigma_eps, "response noise sd");
    synth->add_option("--rho", synth_args.rho, "booking text-treatment correlation");
    synth->add_option("--gamma1", synth_args.gamma1, "yelp treatment-assignment slope");
    synth->add_option("--seed", synth_args.seed, "master seed");
    synth->add_option("--out", synth_args.out_dir, "output directory");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "fit a model");
    train->add_option("--config", config_note, "JSON config file; explicit flags win");
    train->add_option("--data", train_args.data, "training JSONL")
        ->required()->check(CLI::ExistingFile);
    train->add_option("--model", train_args.model, "btr | slda | lda | lr_slda | slda_lr | lda_lr | ols")
        ->check(CLI::IsMember({"btr", "slda", "lda", "lr_slda", "slda_lr", "lda_lr", "ols"}));
    train->add_option("--out", train_args.out, "model JSON path");
    train->add_option("--log", train_args.log, "training CSV log path");
    train->add_option("--topics", train_args.cfg.hyper.K, "number of topics K")
        ->check(CLI::PositiveNumber);
    train->add_option("--alpha", train_args.cfg.hyper.alpha, "Dirichlet document prior");
    train->add_option("--eta", train_args.cfg.hyper.eta, "Dirichlet topic prior");
    train->add_option("--a0", train_args.a0, "inverse-gamma shape");
    train->add_option("--b0", train_args.b0, "inverse-gamma scale");
    train->add_option("--m0", train_args.m0, "prior coefficient mean");
    train->add_option("--s0", train_args.s0, "prior precision (scalar, times identity)");
    train->add_option("--estep-iters", train_args.cfg.estep_iters, "Gibbs sweeps per E-step");
    train->add_option("--mstep-draws", train_args.cfg.mstep_draws, "posterior draws kept");
    train->add_option("--max-em", train_args.cfg.max_em_iters, "maximum EM iterations");
    train->add_option("--burn-in", train_args.cfg.burn_in, "burn-in sweeps");
    train->add_option("--thinning", train_args.cfg.thinning, "LDA thinning interval");
    train->add_option("--tol", train_args.cfg.convergence_tol, "relative validation-MSE tolerance");
    train->add_option("--lda-iters", train_args.lda_iters, "Gibbs sweeps for plain LDA");
    train->add_option("--seed", train_args.cfg.seed, "master seed");
    train->add_option("--test-frac", train_args.test_frac, "held-out fraction")
        ->check(CLI::Range(0.0, 0.9));
    train->add_option("--estep-frac", train_args.estep_frac, "E-step share of the training split")
        ->check(CLI::Range(0.1, 1.0));
    train_args.schema.attach(train);

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "score a model on held-out data");
    eval->add_option("--config", config_note, "JSON config file; explicit flags win");
    eval->add_option("--model", eval_args.model, "model JSON")
        ->required()->check(CLI::ExistingFile);
    eval->add_option("--data", eval_args.data, "test JSONL")
        ->required()->check(CLI::ExistingFile);
    eval->add_option("--out", eval_args.out, "metrics CSV (appended)");
    eval->add_option("--truth", eval_args.truth, "ground-truth sidecar JSON")
        ->check(CLI::ExistingFile);
    eval->add_option("--draws", eval_args.draws, "posterior draws for the interval");
    eval->add_option("--seed", eval_args.seed, "master seed");
    eval_args.schema.attach(eval);

    InferArgs infer_args;
    CLI::App* infer = app.add_subcommand("infer", "fold in documents, write predictions");
    infer->add_option("--config", config_note, "JSON config file; explicit flags win");
    infer->add_option("--model", infer_args.model, "model JSON")
        ->required()->check(CLI::ExistingFile);
    infer->add_option("--data", infer_args.data, "JSONL documents")
        ->required()->check(CLI::ExistingFile);
    infer->add_option("--out", infer_args.out, "predictions CSV");
    infer->add_option("--seed", infer_args.seed, "master seed");
    infer_args.schema.attach(infer);

    ReproArgs repro_args;
    CLI::App* repro = app.add_subcommand("repro", "run a pinned-seed experiment");
    repro->add_option("--config", config_note, "JSON config file; explicit flags win");
    repro->add_option("experiment", repro_args.experiment,
                      "synthetic | semisynth-booking | semisynth-yelp | fwl")->required();
    repro->add_option("--out", repro_args.out_dir, "report directory");
    repro->add_option("--seed", repro_args.seed, "master seed");
    repro->add_option("--docs", repro_args.docs, "documents (0 = experiment default)");
    repro->add_option("--words", repro_args.words, "tokens per document");
    repro->add_option("--replicates", repro_args.replicates, "bootstrap replicates");
    repro->add_option("--seeds", repro_args.num_seeds, "seeds per bias sweep");
    repro->add_option("--jobs", repro_args.jobs, "parallel worker slots")
        ->check(CLI::PositiveNumber);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = apply_config(std::move(args));
        // CLI11 consumes reversed argument vectors
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const btr::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_args);
        if (train->parsed()) return cmd_train(train_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (infer->parsed()) return cmd_infer(infer_args);
        if (repro->parsed()) return cmd_repro(repro_args);
    } catch (const btr::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const btr::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
