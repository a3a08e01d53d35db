#ifndef RINF_VALUATION_HPP
#define RINF_VALUATION_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rinf/data.hpp"
#include "rinf/neuralnet.hpp"

namespace rinf::valuation {

enum class ValueKind { PredictivePerformance, AvgRecourseCostProxy, GroupGapProxy, Custom };

std::string value_kind_name(ValueKind kind);

// Scalar quantity of interest computed from a (possibly partially trained)
// model and an evaluation set. eval returns nullopt when the quantity is
// undefined for the current model (empty negative cohort / empty group);
// the scoring loop records a zero increment for such steps.
struct ValueFunction {
    ValueKind kind = ValueKind::Custom;
    std::function<std::optional<double>(const nn::MlpClassifier&, const data::Dataset&)> eval;
};

ValueFunction predictive_performance_vf();
ValueFunction avg_cost_proxy_vf();
ValueFunction group_gap_proxy_vf();
ValueFunction value_function(ValueKind kind);

struct InfluenceScores {
    std::map<std::uint64_t, double> phi;
    std::map<std::uint64_t, int> visits;
    int n_repetitions = 0;
    int k_epochs = 0;
    std::uint64_t seed = 0;
    ValueKind value_kind = ValueKind::Custom;

    // history[j][id]: mean increment of sample id within repetition j,
    // used for convergence diagnostics.
    std::vector<std::map<std::uint64_t, double>> history;

    int empty_cohort_steps = 0;       // steps where the value was undefined
    double max_telescoping_error = 0; // worst per-epoch |sum(increments) - (V_end - V_start)|
};

// Exact Shapley values by full subset enumeration (|ids| <= 12).
std::map<std::uint64_t, double> shapley_exact(
    const std::vector<std::uint64_t>& ids,
    const std::function<double(const std::vector<std::uint64_t>&)>& value_of_subset);

// Gradient-interleaved Monte-Carlo influence scoring: N repetitions of
// re-initialize, K epochs of shuffled per-sample SGD, with the value
// function re-evaluated after every single step; phi_i is the mean of the
// recorded value increments attributed to sample i.
InfluenceScores influence_scores(const data::Dataset& train, const data::Dataset& test,
                                 const nn::TrainConfig& cfg, const ValueFunction& vf, int n_reps);

// Data-SHAP baseline: the same scoring loop with the predictive-performance
// value function.
InfluenceScores data_shap_mc(const data::Dataset& train, const data::Dataset& test,
                             const nn::TrainConfig& cfg, int n_reps,
                             const ValueFunction& vf = predictive_performance_vf());

enum class SelectMode { AbsoluteTop, PositiveTop };

// Ranked influential sample ids. AbsoluteTop sorts by |phi| descending;
// PositiveTop sorts by phi descending and keeps phi > 0 only. Ties go to
// the smaller sample id. Exactly one of k / threshold must be given.
std::vector<std::uint64_t> select_influential(const InfluenceScores& scores,
                                              std::optional<int> k,
                                              std::optional<double> threshold,
                                              SelectMode mode);

struct ConvergenceReport {
    double stability_ratio = 0.0;  // worst half-vs-full running-mean deviation
    double threshold = 0.1;
    bool converged = false;
};

ConvergenceReport convergence_diagnostics(const InfluenceScores& scores, double threshold = 0.1);

nlohmann::json to_json(const InfluenceScores& scores);
InfluenceScores scores_from_json(const nlohmann::json& j);

} // namespace rinf::valuation

#endif // RINF_VALUATION_HPP
