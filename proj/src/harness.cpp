#include "rinf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "rinf/errors.hpp"
#include "rinf/rng.hpp"

namespace rinf::harness {

namespace {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // population variance
};

MeanVar mean_var(const std::vector<double>& xs) {
    MeanVar mv;
    if (xs.empty()) return mv;
    mv.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
    mv.var /= xs.size();
    return mv;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Per-retrain evaluation of one removal configuration.
struct CellResult {
    std::map<std::string, MeanVar> quantity;  // per method
    MeanVar f1;
    std::map<std::string, double> non_convergence;  // per method
    bool valid = false;
};

int removal_count(double fraction, int n_train) {
    return fraction <= 0.0 ? 0 : static_cast<int>(std::ceil(fraction * n_train));
}

bool class_guard_ok(const data::Dataset& ds) {
    if (ds.size() < 2) return false;
    const bool has0 = std::find(ds.labels.begin(), ds.labels.end(), 0) != ds.labels.end();
    const bool has1 = std::find(ds.labels.begin(), ds.labels.end(), 1) != ds.labels.end();
    return has0 && has1;
}

// Shared state per fold: standardized data and per-strategy rankings.
struct FoldContext {
    data::Dataset train;
    data::Dataset test;
    int fold_index = 0;
    std::map<std::string, std::vector<std::uint64_t>> rankings;
};

std::vector<std::uint64_t> random_ranking(const data::Dataset& train, std::uint64_t seed) {
    std::vector<std::uint64_t> ids = train.sample_ids;
    auto rng = make_rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    return ids;
}

nn::TrainConfig scoring_config(const ExperimentConfig& cfg, int fold, std::uint64_t stream) {
    nn::TrainConfig sc = cfg.train;
    sc.epochs = cfg.score_epochs;
    sc.seed = derive_seed(cfg.seed, 0x53434f52ULL + stream, static_cast<std::uint64_t>(fold));
    return sc;
}

std::uint64_t retrain_seed(const ExperimentConfig& cfg, int fold, int rep) {
    // independent of strategy and fraction so that fraction-0 rows are
    // identical across strategies
    return derive_seed(cfg.seed, 0x52455452ULL + static_cast<std::uint64_t>(fold),
                       static_cast<std::uint64_t>(rep));
}

CellResult evaluate_cell(const ExperimentConfig& cfg, const FoldContext& fc,
                         const std::vector<std::uint64_t>& removal,
                         std::vector<std::string>& warnings) {
    CellResult cell;
    std::unordered_set<std::uint64_t> removal_set(removal.begin(), removal.end());
    const data::Dataset reduced = data::remove_samples(fc.train, removal_set);
    if (!class_guard_ok(reduced)) {
        warnings.push_back("fold " + std::to_string(fc.fold_index) +
                           ": removal would empty a class; row skipped");
        return cell;
    }

    std::map<std::string, std::vector<double>> quantity;
    std::map<std::string, long> noncv, cohort;
    std::vector<double> f1s;

    for (int rep = 0; rep < cfg.n_retrain; ++rep) {
        nn::TrainConfig tc = cfg.train;
        tc.seed = retrain_seed(cfg, fc.fold_index, rep);
        auto model = nn::train(
            nn::MlpClassifier::init_random(reduced.dim(), tc.hidden_sizes, tc.seed, tc.init_scale),
            reduced, tc);
        f1s.push_back(nn::f1_on(model, fc.test));

        for (auto method : cfg.cf_methods) {
            const std::string name = recourse::method_name(method);
            try {
                if (cfg.case_study == CaseStudy::AvgCost) {
                    const auto cc =
                        recourse::avg_cost_of_recourse(model, fc.test, reduced, method, cfg.rc);
                    quantity[name].push_back(cc.value);
                    noncv[name] += cc.non_converged;
                    cohort[name] += cc.cohort_size;
                } else {
                    const auto gg =
                        recourse::group_cost_gap(model, fc.test, reduced, method, cfg.rc);
                    quantity[name].push_back(gg.gap);
                    noncv[name] += gg.non_converged;
                    cohort[name] += gg.n_q0 + gg.n_q1;
                }
            } catch (const DataError& e) {
                warnings.push_back("fold " + std::to_string(fc.fold_index) + ", rep " +
                                   std::to_string(rep) + ", " + name + ": " + e.what());
            }
        }
    }

    if (quantity.empty()) return cell;
    cell.f1 = mean_var(f1s);
    for (auto& [name, values] : quantity) {
        cell.quantity[name] = mean_var(values);
        cell.non_convergence[name] =
            cohort[name] > 0 ? static_cast<double>(noncv[name]) / cohort[name] : 0.0;
    }
    cell.valid = true;
    return cell;
}

void append_rows(ExperimentReport& report, const ExperimentConfig& cfg, const FoldContext& fc,
                 const std::string& strategy, double fraction, const CellResult& cell) {
    for (auto method : cfg.cf_methods) {
        const std::string name = recourse::method_name(method);
        auto it = cell.quantity.find(name);
        if (it == cell.quantity.end()) continue;
        ReportRow row;
        row.fold = fc.fold_index;
        row.strategy = strategy;
        row.method = name;
        row.fraction = fraction;
        row.quantity_mean = it->second.mean;
        row.quantity_var = it->second.var;
        row.f1_mean = cell.f1.mean;
        row.f1_var = cell.f1.var;
        row.non_convergence_rate = cell.non_convergence.at(name);
        report.rows.push_back(row);
    }
}

void build_rankings(const ExperimentConfig& cfg, FoldContext& fc,
                    valuation::ValueKind vf_kind) {
    for (auto strategy : cfg.strategies) {
        const std::string name = strategy_name(strategy);
        switch (strategy) {
            case Strategy::Ours: {
                const auto scores = valuation::influence_scores(
                    fc.train, fc.test, scoring_config(cfg, fc.fold_index, 0),
                    valuation::value_function(vf_kind), cfg.score_reps);
                fc.rankings[name] = valuation::select_influential(
                    scores, static_cast<int>(scores.phi.size()), std::nullopt,
                    valuation::SelectMode::PositiveTop);
                break;
            }
            case Strategy::DataShap: {
                const auto scores = valuation::data_shap_mc(
                    fc.train, fc.test, scoring_config(cfg, fc.fold_index, 1), cfg.score_reps);
                fc.rankings[name] = valuation::select_influential(
                    scores, static_cast<int>(scores.phi.size()), std::nullopt,
                    cfg.datashap_absolute ? valuation::SelectMode::AbsoluteTop
                                          : valuation::SelectMode::PositiveTop);
                break;
            }
            case Strategy::Random:
                fc.rankings[name] = random_ranking(
                    fc.train, derive_seed(cfg.seed, 0x524e44ULL, fc.fold_index));
                break;
        }
    }
}

// Removal protocol for one fold: baseline plus every (strategy, fraction).
void run_removal_protocol(const ExperimentConfig& cfg, const FoldContext& fc,
                          ExperimentReport& report) {
    const CellResult baseline = evaluate_cell(cfg, fc, {}, report.warnings);
    if (!baseline.valid) {
        report.warnings.push_back("fold " + std::to_string(fc.fold_index) +
                                  ": baseline evaluation failed; fold skipped");
        return;
    }

    for (auto strategy : cfg.strategies) {
        const std::string sname = strategy_name(strategy);
        append_rows(report, cfg, fc, sname, 0.0, baseline);

        const auto& ranking = fc.rankings.at(sname);
        for (double fraction : cfg.removal_fractions) {
            int m = removal_count(fraction, fc.train.size());
            if (m > static_cast<int>(ranking.size())) {
                report.warnings.push_back(
                    "fold " + std::to_string(fc.fold_index) + ", " + sname + ", fraction " +
                    fmt_double(fraction) + ": ranking shorter than removal count; truncated");
                m = static_cast<int>(ranking.size());
            }
            if (m > fc.train.size() - 2) m = fc.train.size() - 2;
            const std::vector<std::uint64_t> removal(ranking.begin(), ranking.begin() + m);
            const CellResult cell = evaluate_cell(cfg, fc, removal, report.warnings);
            if (cell.valid) append_rows(report, cfg, fc, sname, fraction, cell);
        }
    }
}

} // namespace

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Ours: return "ours";
        case Strategy::DataShap: return "datashap";
        case Strategy::Random: return "random";
    }
    return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "ours") return Strategy::Ours;
    if (name == "datashap") return Strategy::DataShap;
    if (name == "random") return Strategy::Random;
    throw ConfigError("unknown strategy: " + name);
}

void ExperimentConfig::validate() const {
    train.validate();
    rc.validate();
    if (cf_methods.empty()) throw ConfigError("at least one counterfactual method required");
    if (strategies.empty()) throw ConfigError("at least one removal strategy required");
    if (n_retrain < 1) throw ConfigError("n_retrain must be positive");
    if (folds < 2) throw ConfigError("folds must be at least 2");
    if (score_reps < 1 || score_epochs < 1)
        throw ConfigError("score_reps and score_epochs must be positive");
    double prev = 0.0;
    for (double f : removal_fractions) {
        if (f <= prev) throw ConfigError("removal fractions must be ascending and positive");
        if (f > 0.3) throw ConfigError("removal fractions must be at most 0.3");
        prev = f;
    }
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    for (int i = 1; i <= 30; ++i) cfg.removal_fractions.push_back(i / 100.0);
    cfg.cf_methods = {recourse::Method::Nun, recourse::Method::Proto, recourse::Method::Wachter};
    cfg.strategies = {Strategy::Ours, Strategy::DataShap, Strategy::Random};
    cfg.train.epochs = 50;
    return cfg;
}

data::Dataset load_dataset(const ExperimentConfig& cfg) {
    switch (cfg.dataset) {
        case DatasetKind::Diabetes: return data::load_diabetes(cfg.data_path);
        case DatasetKind::Credit: return data::load_credit(cfg.data_path);
        case DatasetKind::Csv:
            return data::load_csv(cfg.data_path, cfg.label_column,
                                  cfg.protected_column.empty()
                                      ? std::nullopt
                                      : std::make_optional(cfg.protected_column));
    }
    throw ConfigError("unknown dataset kind");
}

ExperimentReport run_case_study_1(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    report.case_study = "avg_cost";
    report.seed = cfg.seed;
    report.version = version_string();

    const auto dataset = load_dataset(cfg);
    const auto folds = data::kfold(dataset, cfg.folds, cfg.seed);

    for (const auto& split : folds) {
        auto std_res = data::standardize(split.train, {split.test});
        FoldContext fc{std::move(std_res.train), std::move(std_res.others[0]), split.fold_index, {}};
        build_rankings(cfg, fc, valuation::ValueKind::AvgRecourseCostProxy);
        run_removal_protocol(cfg, fc, report);
    }
    return report;
}

ExperimentReport run_case_study_2(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    report.case_study = "group_gap";
    report.seed = cfg.seed;
    report.version = version_string();

    const auto dataset = load_dataset(cfg);
    if (!dataset.protected_attr)
        throw DataError("case study 2 requires a protected attribute");
    const auto folds = data::kfold(dataset, cfg.folds, cfg.seed);

    // Baseline gap per fold per method (mean over n_retrain retrains).
    std::vector<FoldContext> contexts;
    std::vector<std::map<std::string, std::optional<double>>> fold_gaps(folds.size());
    for (const auto& split : folds) {
        auto std_res = data::standardize(split.train, {split.test});
        contexts.push_back(
            FoldContext{std::move(std_res.train), std::move(std_res.others[0]), split.fold_index, {}});
    }

    for (std::size_t f = 0; f < contexts.size(); ++f) {
        const auto& fc = contexts[f];
        std::map<std::string, std::vector<double>> gaps;
        for (int rep = 0; rep < cfg.n_retrain; ++rep) {
            nn::TrainConfig tc = cfg.train;
            tc.seed = retrain_seed(cfg, fc.fold_index, rep);
            auto model = nn::train(
                nn::MlpClassifier::init_random(fc.train.dim(), tc.hidden_sizes, tc.seed,
                                               tc.init_scale),
                fc.train, tc);
            for (auto method : cfg.cf_methods) {
                const std::string name = recourse::method_name(method);
                try {
                    gaps[name].push_back(
                        recourse::group_cost_gap(model, fc.test, fc.train, method, cfg.rc).gap);
                } catch (const DataError& e) {
                    report.warnings.push_back("fold " + std::to_string(fc.fold_index) + ", " +
                                              name + ": " + e.what());
                }
            }
        }
        for (auto method : cfg.cf_methods) {
            const std::string name = recourse::method_name(method);
            auto it = gaps.find(name);
            if (it == gaps.end() || it->second.empty())
                fold_gaps[f][name] = std::nullopt;  // fold excluded from selection
            else
                fold_gaps[f][name] = mean_var(it->second).mean;
        }
    }

    // Table-style stats and worst-fold selection, per method independently.
    std::map<std::string, int> worst_fold;
    for (auto method : cfg.cf_methods) {
        const std::string name = recourse::method_name(method);
        BaselineGapStat stat;
        stat.method = name;
        std::vector<double> valid;
        int best = -1;
        double best_gap = -1.0;
        for (std::size_t f = 0; f < fold_gaps.size(); ++f) {
            const auto& g = fold_gaps[f].at(name);
            stat.per_fold.push_back(g.value_or(std::nan("")));
            if (!g) continue;
            valid.push_back(*g);
            if (*g > best_gap) {
                best_gap = *g;
                best = static_cast<int>(f);
            }
        }
        if (best < 0)
            throw DataError("case study 2: no fold with both groups represented for method " + name);
        const auto mv = mean_var(valid);
        stat.max = best_gap;
        stat.mean = mv.mean;
        stat.var = mv.var;
        stat.worst_fold = contexts[best].fold_index;
        worst_fold[name] = best;
        report.baseline_gap_stats.push_back(stat);
    }

    // Removal protocol on each method's worst fold, scored with the
    // group-gap proxy. Folds are processed once even when shared.
    std::unordered_set<int> processed;
    for (auto method : cfg.cf_methods) {
        const int f = worst_fold.at(recourse::method_name(method));
        if (!processed.insert(f).second) continue;
        ExperimentConfig fold_cfg = cfg;
        // restrict evaluation to the methods whose worst fold this is
        fold_cfg.cf_methods.clear();
        for (auto m : cfg.cf_methods)
            if (worst_fold.at(recourse::method_name(m)) == f) fold_cfg.cf_methods.push_back(m);
        auto& fc = contexts[f];
        build_rankings(fold_cfg, fc, valuation::ValueKind::GroupGapProxy);
        run_removal_protocol(fold_cfg, fc, report);
    }
    return report;
}

std::string version_string() {
#ifdef RINF_GIT_DESC
    return std::string("rinf ") + RINF_GIT_DESC;
#else
    return "rinf 0.1.0";
#endif
}

namespace {

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = cfg.dataset == DatasetKind::Diabetes ? "diabetes"
                   : cfg.dataset == DatasetKind::Credit ? "credit"
                                                        : "csv";
    j["data_path"] = cfg.data_path;
    j["case_study"] = cfg.case_study == CaseStudy::AvgCost ? "avg-cost" : "group-gap";
    for (auto m : cfg.cf_methods) j["methods"].push_back(recourse::method_name(m));
    for (auto s : cfg.strategies) j["strategies"].push_back(strategy_name(s));
    j["fractions"] = cfg.removal_fractions;
    j["n_retrain"] = cfg.n_retrain;
    j["folds"] = cfg.folds;
    j["seed"] = cfg.seed;
    j["score_reps"] = cfg.score_reps;
    j["score_epochs"] = cfg.score_epochs;
    j["train_epochs"] = cfg.train.epochs;
    j["learning_rate"] = cfg.train.learning_rate;
    j["hidden"] = {cfg.train.hidden_sizes.first, cfg.train.hidden_sizes.second};
    j["recourse"] = {{"C", cfg.rc.regularization},
                     {"max_iters", cfg.rc.max_iters},
                     {"step_size", cfg.rc.step_size},
                     {"n_prototypes", cfg.rc.n_prototypes},
                     {"proto_weight", cfg.rc.proto_weight}};
    j["datashap_absolute"] = cfg.datashap_absolute;
    return j;
}

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

} // namespace

nlohmann::json report_to_json(const ExperimentReport& report, const ExperimentConfig& cfg,
                              bool with_timestamp) {
    nlohmann::json j;
    j["case_study"] = report.case_study;
    j["seed"] = report.seed;
    j["version"] = report.version;
    j["config"] = config_to_json(cfg);
    if (with_timestamp) j["timestamp"] = timestamp_now();
    j["warnings"] = report.warnings;

    auto& results = j["results"] = nlohmann::json::object();
    for (const auto& row : report.rows) {
        results["fold_" + std::to_string(row.fold)][row.strategy][row.method]
               [fmt_double(row.fraction)] = {{"quantity_mean", row.quantity_mean},
                                             {"quantity_var", row.quantity_var},
                                             {"f1_mean", row.f1_mean},
                                             {"f1_var", row.f1_var},
                                             {"non_convergence_rate", row.non_convergence_rate}};
    }
    if (!report.baseline_gap_stats.empty()) {
        auto& stats = j["baseline_gap_stats"] = nlohmann::json::object();
        for (const auto& s : report.baseline_gap_stats) {
            nlohmann::json per_fold = nlohmann::json::array();
            for (double g : s.per_fold)
                per_fold.push_back(std::isnan(g) ? nlohmann::json(nullptr) : nlohmann::json(g));
            stats[s.method] = {{"max", s.max},
                               {"mean", s.mean},
                               {"var", s.var},
                               {"worst_fold", s.worst_fold},
                               {"per_fold", per_fold}};
        }
    }
    return j;
}

void emit_report(const ExperimentReport& report, const ExperimentConfig& cfg,
                 const std::string& path, Format format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report to " + path);

    if (format == Format::Json) {
        out << report_to_json(report, cfg, true).dump(2) << "\n";
    } else {
        out << "# case_study=" << report.case_study << "\n";
        out << "# seed=" << report.seed << "\n";
        out << "# version=" << report.version << "\n";
        out << "# config=" << config_to_json(cfg).dump() << "\n";
        out << "# timestamp=" << timestamp_now() << "\n";
        out << "fold,strategy,method,fraction,quantity_mean,quantity_var,f1_mean,f1_var,"
               "non_convergence_rate\n";
        for (const auto& r : report.rows)
            out << r.fold << ',' << r.strategy << ',' << r.method << ',' << fmt_double(r.fraction)
                << ',' << fmt_double(r.quantity_mean) << ',' << fmt_double(r.quantity_var) << ','
                << fmt_double(r.f1_mean) << ',' << fmt_double(r.f1_var) << ','
                << fmt_double(r.non_convergence_rate) << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

void emit_curve_data(const ExperimentReport& report, const std::string& path) {
    if (report.rows.empty()) throw IntegrityError("emit_curve_data: empty report");

    // group rows per (fold, strategy, method)
    std::map<std::tuple<int, std::string, std::string>, std::vector<const ReportRow*>> series;
    for (const auto& r : report.rows) series[{r.fold, r.strategy, r.method}].push_back(&r);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write curve data to " + path);
    out << "fold,strategy,method,fraction,quantity_mean,quantity_var,f1_mean,f1_var\n";
    for (auto& [key, rows] : series) {
        std::sort(rows.begin(), rows.end(),
                  [](const ReportRow* a, const ReportRow* b) { return a->fraction < b->fraction; });
        if (rows.front()->fraction != 0.0)
            throw IntegrityError("emit_curve_data: missing baseline row for " +
                                 std::get<1>(key) + "/" + std::get<2>(key));
        for (const auto* r : rows)
            out << r->fold << ',' << r->strategy << ',' << r->method << ','
                << fmt_double(r->fraction) << ',' << fmt_double(r->quantity_mean) << ','
                << fmt_double(r->quantity_var) << ',' << fmt_double(r->f1_mean) << ','
                << fmt_double(r->f1_var) << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

} // namespace rinf::harness
