#include "btr/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace btr {

int Vocabulary::add(const std::string& term) {
    auto it = index_.find(term);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(terms_.size());
    terms_.push_back(term);
    index_.emplace(term, id);
    return id;
}

int Vocabulary::lookup(const std::string& term) const {
    auto it = index_.find(term);
    return it == index_.end() ? -1 : it->second;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open vocabulary file for writing: " + path);
    for (const auto& t : terms_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocabulary file: " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) v.add(line);
    }
    return v;
}

std::vector<int> Corpus::noninteracted_cols() const {
    std::vector<int> out;
    for (int j = 0; j < num_features(); ++j) {
        if (std::find(interacted_cols.begin(), interacted_cols.end(), j) ==
            interacted_cols.end()) {
            out.push_back(j);
        }
    }
    return out;
}

void Corpus::validate() const {
    const int D = num_docs();
    if (x.rows() != D || y.size() != D) {
        throw DataError("corpus misaligned: " + std::to_string(D) + " docs, " +
                        std::to_string(x.rows()) + " feature rows, " +
                        std::to_string(y.size()) + " responses");
    }
    if (!feature_names.empty() &&
        static_cast<int>(feature_names.size()) != num_features()) {
        throw DataError("feature_names length does not match feature columns");
    }
    for (int j : interacted_cols) {
        if (j < 0 || j >= num_features()) {
            throw DataError("interacted column out of range: " + std::to_string(j));
        }
    }
    const int V = vocab.size();
    for (const auto& doc : docs) {
        for (int t : doc.tokens) {
            if (t < 0 || t >= V) {
                throw DataError("document " + doc.id + " has token id " +
                                std::to_string(t) + " outside vocabulary of size " +
                                std::to_string(V));
            }
        }
        if (!doc.paragraph_bounds.empty()) {
            int cursor = 0;
            for (const auto& [first, last] : doc.paragraph_bounds) {
                if (first != cursor || last < first) {
                    throw DataError("document " + doc.id +
                                    " has paragraph bounds that do not partition tokens");
                }
                cursor = last;
            }
            if (cursor != doc.length()) {
                throw DataError("document " + doc.id + " paragraph bounds do not cover tokens");
            }
        }
    }
}

std::vector<std::string> tokenize(const std::string& text, const TokenizerConfig& cfg) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (current.empty()) return;
        if (cfg.stopwords.count(current) == 0) {
            out.push_back(cfg.stemmer ? cfg.stemmer(current) : current);
        }
        current.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

namespace {

void encode_text(const std::vector<std::string>& words, Vocabulary& vocab,
                 const Vocabulary* frozen, std::vector<int>& tokens) {
    for (const auto& w : words) {
        int id = frozen ? frozen->lookup(w) : vocab.add(w);
        if (id >= 0) tokens.push_back(id);
        // unseen terms under a frozen vocabulary are dropped
    }
}

double require_number(const json& obj, const std::string& field, size_t line_no) {
    if (!obj.contains(field)) {
        throw DataError("line " + std::to_string(line_no) + ": missing field '" + field + "'");
    }
    if (!obj[field].is_number()) {
        throw DataError("line " + std::to_string(line_no) + ": field '" + field +
                        "' is not numeric");
    }
    return obj[field].get<double>();
}

}  // namespace

Corpus ingest_jsonl(const std::string& path, const JsonlSchema& schema,
                    const TokenizerConfig& tok, const Vocabulary* frozen_vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);

    Corpus corpus;
    if (frozen_vocab) corpus.vocab = *frozen_vocab;
    std::vector<Eigen::VectorXd> x_rows;
    std::vector<double> y_vals;
    std::string line;
    size_t line_no = 0;
    int num_features = -1;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON (" +
                            e.what() + ")");
        }
        if (!obj.is_object()) {
            throw DataError("line " + std::to_string(line_no) + ": not a JSON object");
        }

        Document doc;
        doc.id = obj.contains(schema.id_field) && obj[schema.id_field].is_string()
                     ? obj[schema.id_field].get<std::string>()
                     : std::to_string(line_no);

        if (!obj.contains(schema.text_field)) {
            throw DataError("line " + std::to_string(line_no) + ": missing field '" +
                            schema.text_field + "'");
        }
        const json& text = obj[schema.text_field];
        if (text.is_string()) {
            encode_text(tokenize(text.get<std::string>(), tok), corpus.vocab,
                        frozen_vocab, doc.tokens);
        } else if (text.is_array()) {
            // array of strings = explicit paragraphs
            for (const auto& para : text) {
                if (!para.is_string()) {
                    throw DataError("line " + std::to_string(line_no) +
                                    ": paragraph entries must be strings");
                }
                int first = doc.length();
                encode_text(tokenize(para.get<std::string>(), tok), corpus.vocab,
                            frozen_vocab, doc.tokens);
                doc.paragraph_bounds.emplace_back(first, doc.length());
            }
        } else {
            throw DataError("line " + std::to_string(line_no) + ": field '" +
                            schema.text_field + "' must be a string or string array");
        }

        Eigen::VectorXd row;
        if (!schema.feature_fields.empty()) {
            row.resize(static_cast<Eigen::Index>(schema.feature_fields.size()));
            for (size_t j = 0; j < schema.feature_fields.size(); ++j) {
                row(static_cast<Eigen::Index>(j)) =
                    require_number(obj, schema.feature_fields[j], line_no);
            }
        } else if (obj.contains(schema.features_field)) {
            const json& xs = obj[schema.features_field];
            if (!xs.is_array()) {
                throw DataError("line " + std::to_string(line_no) + ": field '" +
                                schema.features_field + "' must be an array");
            }
            row.resize(static_cast<Eigen::Index>(xs.size()));
            for (size_t j = 0; j < xs.size(); ++j) {
                if (!xs[j].is_number()) {
                    throw DataError("line " + std::to_string(line_no) +
                                    ": non-numeric feature value");
                }
                row(static_cast<Eigen::Index>(j)) = xs[j].get<double>();
            }
        } else {
            row.resize(0);  // text-only corpus
        }
        if (num_features < 0) {
            num_features = static_cast<int>(row.size());
        } else if (static_cast<int>(row.size()) != num_features) {
            throw DataError("line " + std::to_string(line_no) +
                            ": inconsistent feature count");
        }

        y_vals.push_back(require_number(obj, schema.response_field, line_no));
        corpus.docs.push_back(std::move(doc));
        x_rows.push_back(std::move(row));
    }

    const int D = static_cast<int>(corpus.docs.size());
    corpus.x.resize(D, std::max(num_features, 0));
    for (int d = 0; d < D; ++d) corpus.x.row(d) = x_rows[static_cast<size_t>(d)];
    corpus.y = Eigen::Map<Eigen::VectorXd>(y_vals.data(), D);
    corpus.interacted_cols = schema.interacted_cols;
    if (!schema.feature_fields.empty()) corpus.feature_names = schema.feature_fields;
    corpus.validate();
    return corpus;
}

void write_jsonl(const Corpus& corpus, const std::string& path, const JsonlSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open output file: " + path);
    for (int d = 0; d < corpus.num_docs(); ++d) {
        const Document& doc = corpus.docs[static_cast<size_t>(d)];
        json obj;
        obj[schema.id_field] = doc.id;
        std::string text;
        for (size_t i = 0; i < doc.tokens.size(); ++i) {
            if (i) text += ' ';
            text += corpus.vocab.term(doc.tokens[i]);
        }
        obj[schema.text_field] = text;
        if (!schema.feature_fields.empty()) {
            if (static_cast<int>(schema.feature_fields.size()) != corpus.num_features()) {
                throw DataError("write_jsonl: feature_fields/column count mismatch");
            }
            for (int j = 0; j < corpus.num_features(); ++j) {
                obj[schema.feature_fields[static_cast<size_t>(j)]] = corpus.x(d, j);
            }
        } else {
            std::vector<double> row(corpus.x.row(d).begin(), corpus.x.row(d).end());
            obj[schema.features_field] = row;
        }
        obj[schema.response_field] = corpus.y(d);
        out << obj.dump() << '\n';
    }
}

Corpus subset(const Corpus& corpus, const std::vector<int>& indices) {
    Corpus out;
    out.vocab = corpus.vocab;
    out.interacted_cols = corpus.interacted_cols;
    out.feature_names = corpus.feature_names;
    const int n = static_cast<int>(indices.size());
    out.x.resize(n, corpus.x.cols());
    out.y.resize(n);
    out.docs.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int d = indices[static_cast<size_t>(i)];
        out.docs.push_back(corpus.docs.at(static_cast<size_t>(d)));
        out.x.row(i) = corpus.x.row(d);
        out.y(i) = corpus.y(d);
    }
    return out;
}

SplitResult split(const Corpus& corpus, double train_frac, double test_frac,
                  double estep_fraction, std::uint64_t seed) {
    if (train_frac <= 0.0 || train_frac > 1.0 || test_frac < 0.0 || test_frac >= 1.0 ||
        train_frac + test_frac > 1.0 + 1e-12) {
        throw DataError("split fractions must satisfy 0 < train <= 1, 0 <= test < 1, "
                        "train + test <= 1");
    }
    if (estep_fraction <= 0.0 || estep_fraction > 1.0) {
        throw DataError("estep_fraction must lie in (0,1]");
    }
    const int D = corpus.num_docs();
    std::vector<int> idx(static_cast<size_t>(D));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(seed, "corpus-split");
    std::shuffle(idx.begin(), idx.end(), rng);

    const int n_train = static_cast<int>(train_frac * D);
    const int n_test = static_cast<int>(test_frac * D);
    const int n_estep = estep_fraction >= 1.0
                            ? n_train
                            : static_cast<int>(estep_fraction * n_train);
    const int n_mstep = estep_fraction >= 1.0 ? n_train : n_train - n_estep;
    if (n_estep < 1 || n_mstep < 1 || (test_frac > 0.0 && n_test < 1)) {
        throw DataError("corpus too small to populate all splits");
    }

    SplitResult result;
    result.degenerate_estep = estep_fraction >= 1.0;
    std::vector<int> estep_idx(idx.begin(), idx.begin() + n_estep);
    std::vector<int> mstep_idx;
    if (result.degenerate_estep) {
        mstep_idx = estep_idx;
    } else {
        mstep_idx.assign(idx.begin() + n_estep, idx.begin() + n_train);
    }
    std::vector<int> test_idx(idx.begin() + n_train, idx.begin() + n_train + n_test);
    std::sort(estep_idx.begin(), estep_idx.end());
    std::sort(mstep_idx.begin(), mstep_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    result.estep = subset(corpus, estep_idx);
    result.mstep = subset(corpus, mstep_idx);
    result.test = subset(corpus, test_idx);
    return result;
}

NormStats compute_norm_stats(const Corpus& train) {
    const int P = train.num_features();
    const int D = train.num_docs();
    if (D < 1) throw DataError("cannot compute normalization statistics on empty corpus");
    NormStats stats;
    stats.means.resize(P);
    stats.stds.resize(P);
    for (int j = 0; j < P; ++j) {
        const double mean = train.x.col(j).mean();
        const double var = (train.x.col(j).array() - mean).square().mean();
        if (var <= 0.0) {
            std::string name = !train.feature_names.empty()
                                   ? train.feature_names[static_cast<size_t>(j)]
                                   : "column " + std::to_string(j);
            throw DataError("zero-variance feature: " + name);
        }
        stats.means(j) = mean;
        stats.stds(j) = std::sqrt(var);
    }
    stats.y_mean = train.y.mean();
    return stats;
}

Corpus apply_norm(const Corpus& corpus, const NormStats& stats) {
    if (corpus.num_features() != stats.means.size()) {
        throw DataError("normalization statistics do not match feature count");
    }
    Corpus out = corpus;
    for (int j = 0; j < out.num_features(); ++j) {
        out.x.col(j) = (out.x.col(j).array() - stats.means(j)) / stats.stds(j);
    }
    out.y.array() -= stats.y_mean;
    return out;
}

std::string NormStats::to_json() const {
    json obj;
    obj["means"] = std::vector<double>(means.begin(), means.end());
    obj["stds"] = std::vector<double>(stds.begin(), stds.end());
    obj["y_mean"] = y_mean;
    obj["std_kind"] = "population";
    return obj.dump(2);
}

NormStats NormStats::from_json(const std::string& text) {
    json obj = json::parse(text);
    NormStats stats;
    auto means = obj.at("means").get<std::vector<double>>();
    auto stds = obj.at("stds").get<std::vector<double>>();
    stats.means = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    stats.stds = Eigen::Map<Eigen::VectorXd>(stds.data(), static_cast<Eigen::Index>(stds.size()));
    stats.y_mean = obj.at("y_mean").get<double>();
    return stats;
}

}  // namespace btr
