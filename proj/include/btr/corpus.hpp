#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "btr/errors.hpp"
#include "btr/rng.hpp"

namespace btr {

// Dense, stable term <-> id mapping. Ids are assigned in first-seen order.
class Vocabulary {
public:
    int add(const std::string& term);               // inserts if absent
    int lookup(const std::string& term) const;      // -1 if absent
    int size() const { return static_cast<int>(terms_.size()); }
    const std::vector<std::string>& terms() const { return terms_; }
    const std::string& term(int id) const { return terms_.at(static_cast<size_t>(id)); }

    void save(const std::string& path) const;       // one term per line, line = id
    static Vocabulary load(const std::string& path);

private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, int> index_;
};

struct Document {
    std::string id;
    std::vector<int> tokens;
    // Half-open [first, last) token ranges; empty means one implicit paragraph.
    std::vector<std::pair<int, int>> paragraph_bounds;

    int length() const { return static_cast<int>(tokens.size()); }
    bool empty() const { return tokens.empty(); }
    int num_paragraphs() const {
        return paragraph_bounds.empty() ? (tokens.empty() ? 0 : 1)
                                        : static_cast<int>(paragraph_bounds.size());
    }
    std::pair<int, int> paragraph(int p) const {
        if (paragraph_bounds.empty()) return {0, length()};
        return paragraph_bounds.at(static_cast<size_t>(p));
    }
};

// Documents with index-aligned numerical features and responses.
struct Corpus {
    Vocabulary vocab;
    std::vector<Document> docs;
    Eigen::MatrixXd x;                  // D x P
    Eigen::VectorXd y;                  // D
    std::vector<int> interacted_cols;   // columns of x interacted with topics
    std::vector<std::string> feature_names;

    int num_docs() const { return static_cast<int>(docs.size()); }
    int num_features() const { return static_cast<int>(x.cols()); }
    std::vector<int> noninteracted_cols() const;

    // Throws DataError on any violated alignment/bounds invariant.
    void validate() const;
};

struct NormStats {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;   // population std, strictly positive
    double y_mean = 0.0;

    std::string to_json() const;
    static NormStats from_json(const std::string& text);
};

struct TokenizerConfig {
    std::unordered_set<std::string> stopwords;
    // Optional stemming hook; disabled (identity) by default.
    std::function<std::string(const std::string&)> stemmer;
};

// Lowercase, split on non-alphanumerics, drop stopwords, then stem.
std::vector<std::string> tokenize(const std::string& text, const TokenizerConfig& cfg);

struct JsonlSchema {
    std::string id_field = "id";
    std::string text_field = "text";     // string, or array of strings (paragraphs)
    std::string features_field = "x";    // array of numbers; ignored if feature_fields set
    std::vector<std::string> feature_fields;  // scalar fields, used instead of features_field
    std::string response_field = "y";
    std::vector<int> interacted_cols;
};

// Reads one observation per line. When `frozen_vocab` is given the vocabulary
// is not extended and unknown terms are dropped; otherwise the vocabulary is
// built from the file.
Corpus ingest_jsonl(const std::string& path, const JsonlSchema& schema,
                    const TokenizerConfig& tok = {},
                    const Vocabulary* frozen_vocab = nullptr);

void write_jsonl(const Corpus& corpus, const std::string& path,
                 const JsonlSchema& schema = {});

struct SplitResult {
    Corpus estep;
    Corpus mstep;
    Corpus test;
    bool degenerate_estep = false;  // estep_fraction == 1: mstep aliases estep
};

// Disjoint random train/test split, with the training part further divided
// into E-step and M-step subsamples. Reproducible from the seed.
SplitResult split(const Corpus& corpus, double train_frac, double test_frac,
                  double estep_fraction, std::uint64_t seed);

Corpus subset(const Corpus& corpus, const std::vector<int>& indices);

// Column-wise mean/std of x plus the mean of y, computed on the training
// corpus. Throws DataError naming any zero-variance column.
NormStats compute_norm_stats(const Corpus& train);

// Applies train statistics: x standardized, y de-meaned.
Corpus apply_norm(const Corpus& corpus, const NormStats& stats);

}  // namespace btr
