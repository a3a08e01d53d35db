#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rinf/data.hpp"
#include "rinf/errors.hpp"
#include "rinf/harness.hpp"
#include "rinf/valuation.hpp"

namespace {

using namespace rinf;

struct DatasetArgs {
    std::string spec = "csv:data.csv";
    std::string label_column = "y";
    std::string protected_column;
    std::string data_path;  // optional override for benchmark file locations

    void apply(harness::ExperimentConfig& cfg) const {
        if (spec == "diabetes") {
            cfg.dataset = harness::DatasetKind::Diabetes;
            cfg.data_path = "data/diabetes.tab";
        } else if (spec == "credit") {
            cfg.dataset = harness::DatasetKind::Credit;
            cfg.data_path = "data/german.data";
        } else if (spec.rfind("csv:", 0) == 0) {
            cfg.dataset = harness::DatasetKind::Csv;
            cfg.data_path = spec.substr(4);
            if (cfg.data_path.empty()) throw ConfigError("--dataset csv: requires a path");
        } else {
            throw ConfigError("--dataset must be diabetes, credit, or csv:PATH");
        }
        if (!data_path.empty()) cfg.data_path = data_path;
        cfg.label_column = label_column;
        cfg.protected_column = protected_column;
    }
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
    cmd->add_option("--dataset", args.spec, "diabetes | credit | csv:PATH")->required();
    cmd->add_option("--label-column", args.label_column, "label column for csv datasets");
    cmd->add_option("--protected-column", args.protected_column,
                    "protected-attribute column for csv datasets");
    cmd->add_option("--data-path", args.data_path, "override the default benchmark file location");
}

std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double lo = 0, hi = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(text);
        if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
            throw ConfigError("--fractions range must be LO:HI:STEP");
        const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
        for (int i = 0; i <= n; ++i) out.push_back(lo + i * step);
    } else {
        std::istringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            out.push_back(std::stod(tok));
        }
    }
    if (out.empty()) throw ConfigError("--fractions produced an empty schedule");
    return out;
}

std::vector<recourse::Method> parse_methods(const std::string& text) {
    std::vector<recourse::Method> out;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(recourse::method_from_name(tok));
    return out;
}

std::vector<harness::Strategy> parse_strategies(const std::string& text) {
    std::vector<harness::Strategy> out;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(harness::strategy_from_name(tok));
    return out;
}

int cmd_run(const DatasetArgs& data_args, const std::string& case_study,
            const std::string& methods, const std::string& strategies,
            const std::string& fractions, int retrain, int folds, std::uint64_t seed,
            int train_epochs, int score_reps, int score_epochs, bool datashap_absolute,
            const std::string& out_dir, const std::string& format) {
    harness::ExperimentConfig cfg = harness::default_config();
    data_args.apply(cfg);

    if (case_study == "avg-cost")
        cfg.case_study = harness::CaseStudy::AvgCost;
    else if (case_study == "group-gap")
        cfg.case_study = harness::CaseStudy::GroupGap;
    else
        throw ConfigError("--case-study must be avg-cost or group-gap");

    cfg.cf_methods = parse_methods(methods);
    cfg.strategies = parse_strategies(strategies);
    cfg.removal_fractions = parse_fractions(fractions);
    cfg.n_retrain = retrain;
    cfg.folds = folds;
    cfg.seed = seed;
    cfg.train.epochs = train_epochs;
    cfg.score_reps = score_reps;
    cfg.score_epochs = score_epochs;
    cfg.datashap_absolute = datashap_absolute;
    cfg.validate();

    harness::Format fmt;
    if (format == "json")
        fmt = harness::Format::Json;
    else if (format == "csv")
        fmt = harness::Format::Csv;
    else
        throw ConfigError("--format must be json or csv");

    std::filesystem::create_directories(out_dir);
    const auto report = cfg.case_study == harness::CaseStudy::AvgCost
                            ? harness::run_case_study_1(cfg)
                            : harness::run_case_study_2(cfg);

    const std::string report_path =
        (std::filesystem::path(out_dir) / (format == "json" ? "report.json" : "report.csv"))
            .string();
    harness::emit_report(report, cfg, report_path, fmt);
    if (!report.rows.empty())
        harness::emit_curve_data(report, (std::filesystem::path(out_dir) / "curves.csv").string());

    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "report written to " << report_path << " (" << report.rows.size() << " rows)\n";
    return 0;
}

int cmd_score(const DatasetArgs& data_args, const std::string& vf_name, int reps, int epochs,
              int folds, int fold, std::uint64_t seed, const std::string& out_path) {
    harness::ExperimentConfig cfg;
    data_args.apply(cfg);
    const auto dataset = harness::load_dataset(cfg);

    valuation::ValueKind kind;
    if (vf_name == "performance")
        kind = valuation::ValueKind::PredictivePerformance;
    else if (vf_name == "avg-cost")
        kind = valuation::ValueKind::AvgRecourseCostProxy;
    else if (vf_name == "group-gap")
        kind = valuation::ValueKind::GroupGapProxy;
    else
        throw ConfigError("--value-function must be performance, avg-cost, or group-gap");

    if (fold < 0 || fold >= folds) throw ConfigError("--fold out of range");
    const auto splits = data::kfold(dataset, folds, seed);
    const auto std_res = data::standardize(splits[fold].train, {splits[fold].test});

    nn::TrainConfig tc;
    tc.epochs = epochs;
    tc.seed = seed;
    const auto scores = valuation::influence_scores(std_res.train, std_res.others[0], tc,
                                                    valuation::value_function(kind), reps);

    const auto diag = valuation::convergence_diagnostics(scores);
    auto j = valuation::to_json(scores);
    j["fold"] = fold;
    j["converged"] = diag.converged;
    j["stability_ratio"] = diag.stability_ratio;

    if (out_path.empty() || out_path == "-") {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot write scores to " + out_path);
        out << j.dump(2) << "\n";
        std::cout << "scores written to " << out_path << "\n";
    }
    return 0;
}

int cmd_validate(const DatasetArgs& data_args) {
    harness::ExperimentConfig cfg;
    data_args.apply(cfg);
    const auto dataset = harness::load_dataset(cfg);
    dataset.validate();

    int positives = 0;
    for (int y : dataset.labels) positives += y;
    std::cout << "samples: " << dataset.size() << "\n"
              << "features: " << dataset.dim() << "\n"
              << "favorable (y=1): " << positives << "\n"
              << "unfavorable (y=0): " << dataset.size() - positives << "\n"
              << "protected attribute: " << (dataset.protected_attr ? "yes" : "no") << "\n";
    if (dataset.protected_attr) {
        int q1 = 0;
        for (int q : *dataset.protected_attr) q1 += q;
        std::cout << "group q=1: " << q1 << ", group q=0: " << dataset.size() - q1 << "\n";
    }
    std::cout << "ok\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"influence scoring and removal experiments for recourse quantities"};
    app.require_subcommand(1);

    DatasetArgs run_data, score_data, validate_data;

    auto* run = app.add_subcommand("run", "run a removal-and-retrain case study");
    std::string case_study = "avg-cost";
    std::string methods = "nun,proto,wachter";
    std::string strategies = "ours,datashap,random";
    std::string fractions = "0.01:0.30:0.01";
    int retrain = 5, folds = 5, train_epochs = 50, score_reps = 50, score_epochs = 5;
    std::uint64_t seed = 0;
    bool datashap_absolute = false;
    std::string out_dir = "out", format = "json";
    add_dataset_options(run, run_data);
    run->add_option("--case-study", case_study, "avg-cost | group-gap");
    run->add_option("--methods", methods, "comma list of nun, proto, wachter");
    run->add_option("--strategies", strategies, "comma list of ours, datashap, random");
    run->add_option("--fractions", fractions, "LO:HI:STEP or comma list");
    run->add_option("--retrain", retrain, "retrains per removal configuration");
    run->add_option("--folds", folds, "cross-validation folds");
    run->add_option("--seed", seed, "root seed");
    run->add_option("--train-epochs", train_epochs, "epochs for full training");
    run->add_option("--score-reps", score_reps, "scoring repetitions N");
    run->add_option("--score-epochs", score_epochs, "scoring epochs K");
    run->add_flag("--datashap-absolute", datashap_absolute,
                  "rank the datashap baseline by |phi| instead of positive scores");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--format", format, "json | csv");

    auto* score = app.add_subcommand("score", "emit raw influence scores as json");
    std::string vf_name = "avg-cost";
    int s_reps = 50, s_epochs = 5, s_folds = 5, s_fold = 0;
    std::uint64_t s_seed = 0;
    std::string score_out;
    add_dataset_options(score, score_data);
    score->add_option("--value-function", vf_name, "performance | avg-cost | group-gap");
    score->add_option("--reps", s_reps, "scoring repetitions N");
    score->add_option("--epochs", s_epochs, "scoring epochs K");
    score->add_option("--folds", s_folds, "cross-validation folds");
    score->add_option("--fold", s_fold, "fold index to score");
    score->add_option("--seed", s_seed, "root seed");
    score->add_option("--out", score_out, "output file, - for stdout");

    auto* validate = app.add_subcommand("validate", "run dataset integrity checks");
    add_dataset_options(validate, validate_data);

    try {
        app.parse(argc, argv);
        if (run->parsed())
            return cmd_run(run_data, case_study, methods, strategies, fractions, retrain, folds,
                           seed, train_epochs, score_reps, score_epochs, datashap_absolute,
                           out_dir, format);
        if (score->parsed())
            return cmd_score(score_data, vf_name, s_reps, s_epochs, s_folds, s_fold, s_seed,
                             score_out);
        if (validate->parsed()) return cmd_validate(validate_data);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
