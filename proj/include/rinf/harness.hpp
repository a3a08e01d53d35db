#ifndef RINF_HARNESS_HPP
#define RINF_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rinf/data.hpp"
#include "rinf/neuralnet.hpp"
#include "rinf/recourse.hpp"
#include "rinf/valuation.hpp"

namespace rinf::harness {

enum class DatasetKind { Diabetes, Credit, Csv };
enum class CaseStudy { AvgCost, GroupGap };
enum class Strategy { Ours, DataShap, Random };
enum class Format { Json, Csv };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct ExperimentConfig {
    DatasetKind dataset = DatasetKind::Csv;
    std::string data_path;                 // benchmark raw file or CSV path
    std::string label_column = "y";        // CSV only
    std::string protected_column;          // CSV only; empty = none

    CaseStudy case_study = CaseStudy::AvgCost;
    std::vector<recourse::Method> cf_methods{recourse::Method::Wachter};
    std::vector<Strategy> strategies{Strategy::Ours};
    std::vector<double> removal_fractions;  // ascending, each in (0, 0.3]

    int n_retrain = 5;
    int folds = 5;
    std::uint64_t seed = 0;

    nn::TrainConfig train;      // full-training config (epochs = training length)
    int score_reps = 50;        // N repetitions of the scoring loop
    int score_epochs = 5;       // K epochs inside the scoring loop
    recourse::RecourseConfig rc;
    bool datashap_absolute = false;  // DataShap removal by |phi| instead of positive-top

    void validate() const;
};

ExperimentConfig default_config();

struct ReportRow {
    int fold = 0;
    std::string strategy;
    std::string method;
    double fraction = 0.0;
    double quantity_mean = 0.0;
    double quantity_var = 0.0;
    double f1_mean = 0.0;
    double f1_var = 0.0;
    double non_convergence_rate = 0.0;
};

// Baseline group-gap statistics across folds (case study II).
struct BaselineGapStat {
    std::string method;
    double max = 0.0;
    double mean = 0.0;
    double var = 0.0;
    int worst_fold = 0;
    std::vector<double> per_fold;
};

struct ExperimentReport {
    std::string case_study;
    std::uint64_t seed = 0;
    std::string version;
    std::vector<ReportRow> rows;
    std::vector<BaselineGapStat> baseline_gap_stats;  // case study II only
    std::vector<std::string> warnings;
};

data::Dataset load_dataset(const ExperimentConfig& cfg);

ExperimentReport run_case_study_1(const ExperimentConfig& cfg);
ExperimentReport run_case_study_2(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const ExperimentReport& report, const ExperimentConfig& cfg,
                              bool with_timestamp = true);
void emit_report(const ExperimentReport& report, const ExperimentConfig& cfg,
                 const std::string& path, Format format);

// Plot-ready series: per (strategy, method), fraction -> quantity / F1 with
// variances, baseline (fraction 0) included. Fails when a baseline row is
// missing.
void emit_curve_data(const ExperimentReport& report, const std::string& path);

std::string version_string();

} // namespace rinf::harness

#endif // RINF_HARNESS_HPP
