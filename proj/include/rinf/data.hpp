#ifndef RINF_DATA_HPP
#define RINF_DATA_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace rinf::data {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Tabular binary-classification dataset. y=0 is the unfavorable outcome,
// y=1 the favorable one. Samples are identified by stable ids that survive
// shuffling, fold splitting and removal.
struct Dataset {
    Matrix features;                                  // N x d
    std::vector<int> labels;                          // in {0,1}
    std::optional<std::vector<int>> protected_attr;   // in {0,1} when present
    std::vector<std::uint64_t> sample_ids;
    std::vector<std::string> feature_names;

    int size() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
    Vector row(int i) const { return features.row(i).transpose(); }

    // Checks the structural invariants; throws on violation.
    void validate() const;
};

struct FoldSplit {
    Dataset train;
    Dataset test;
    int fold_index = 0;
};

struct Standardization {
    Vector mean;
    Vector stddev;  // constant columns carry a unit divisor
};

// Reads a UTF-8 comma-separated file with a header row. All used columns
// must be numeric; the label column must be binary.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::optional<std::string>& protected_column = std::nullopt);

// Diabetes benchmark: whitespace/tab-separated file with header
// AGE SEX BMI BP S1 S2 S3 S4 S5 S6 Y (442 rows). SEX (1/2) becomes the
// binary protected attribute and is excluded from the model features;
// the quantitative target Y is binarized at its median.
Dataset load_diabetes(const std::string& path);

// German Credit benchmark: UCI german.data layout (1000 rows, 20 space-
// separated attributes plus the target). Only the seven numerical
// attributes are used as features; sex is derived from the personal-status
// code (A92/A95 -> 1) and kept as the protected attribute. Target 1 (good)
// maps to the favorable outcome y=1.
Dataset load_credit(const std::string& path);

struct StandardizeResult {
    Dataset train;
    std::vector<Dataset> others;
    Standardization stats;
};

Standardization standardize_fit(const Dataset& train);
Dataset standardize_apply(const Dataset& ds, const Standardization& stats);

// Fits on train, transforms train and all others with the train statistics.
StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others = {});

// Deterministic shuffled k-fold partition; fold test sizes differ by at most 1.
std::vector<FoldSplit> kfold(const Dataset& dataset, int k, std::uint64_t seed);

// Returns the dataset without the given sample ids, preserving the order
// and ids of the remaining samples.
Dataset remove_samples(const Dataset& dataset, const std::unordered_set<std::uint64_t>& ids);

} // namespace rinf::data

#endif // RINF_DATA_HPP
