#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rinf/errors.hpp"
#include "rinf/harness.hpp"
#include "support/synthetic.hpp"

using namespace rinf;
using harness::ExperimentConfig;
using harness::ExperimentReport;
using harness::Strategy;

namespace {

struct TempCsv {
    std::filesystem::path path;
    TempCsv(const data::Dataset& ds, const std::string& name) {
        path = std::filesystem::temp_directory_path() / name;
        testsupport::write_csv(ds, path.string());
    }
    ~TempCsv() { std::filesystem::remove(path); }
};

ExperimentConfig small_config(const std::string& data_path, bool with_protected) {
    ExperimentConfig cfg;
    cfg.dataset = harness::DatasetKind::Csv;
    cfg.data_path = data_path;
    cfg.label_column = "y";
    if (with_protected) cfg.protected_column = "q";
    cfg.cf_methods = {recourse::Method::Wachter, recourse::Method::Nun};
    cfg.strategies = {Strategy::Ours, Strategy::Random};
    cfg.removal_fractions = {0.1, 0.2};
    cfg.n_retrain = 2;
    cfg.folds = 2;
    cfg.seed = 5;
    cfg.train.epochs = 8;
    cfg.train.hidden_sizes = {8, 8};
    cfg.score_reps = 2;
    cfg.score_epochs = 2;
    cfg.rc.max_iters = 200;
    return cfg;
}

int count_lines(const std::string& path) {
    std::ifstream in(path);
    int n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config validation rejects bad settings") {
    auto cfg = small_config("unused.csv", false);
    CHECK_NOTHROW(cfg.validate());

    auto bad = cfg;
    bad.removal_fractions = {0.2, 0.1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.removal_fractions = {0.31};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.removal_fractions = {0.0, 0.1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.folds = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.cf_methods.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.n_retrain = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("default config covers the full removal schedule") {
    const auto cfg = harness::default_config();
    REQUIRE(cfg.removal_fractions.size() == 30);
    CHECK(cfg.removal_fractions.front() == doctest::Approx(0.01));
    CHECK(cfg.removal_fractions.back() == doctest::Approx(0.30));
    CHECK(cfg.cf_methods.size() == 3);
    CHECK(cfg.strategies.size() == 3);
}

TEST_CASE("strategy names round-trip") {
    for (auto s : {Strategy::Ours, Strategy::DataShap, Strategy::Random})
        CHECK(harness::strategy_from_name(harness::strategy_name(s)) == s);
    CHECK_THROWS_AS(harness::strategy_from_name("top"), ConfigError);
}

TEST_CASE("case study 1: baseline rows are identical across strategies") {
    TempCsv csv(testsupport::two_blobs(20, 42), "rinf_h_cs1.csv");
    const auto cfg = small_config(csv.path.string(), false);
    const auto report = harness::run_case_study_1(cfg);

    REQUIRE(!report.rows.empty());
    for (int fold = 0; fold < cfg.folds; ++fold) {
        for (const auto& method : {"wachter", "nun"}) {
            std::vector<const harness::ReportRow*> baselines;
            for (const auto& r : report.rows)
                if (r.fold == fold && r.method == method && r.fraction == 0.0)
                    baselines.push_back(&r);
            REQUIRE(baselines.size() == cfg.strategies.size());
            for (const auto* r : baselines) {
                CHECK(r->quantity_mean == baselines[0]->quantity_mean);
                CHECK(r->quantity_var == baselines[0]->quantity_var);
                CHECK(r->f1_mean == baselines[0]->f1_mean);
                CHECK(r->f1_var == baselines[0]->f1_var);
            }
        }
    }
}

TEST_CASE("case study 1: full row grid and determinism") {
    TempCsv csv(testsupport::two_blobs(20, 42), "rinf_h_grid.csv");
    const auto cfg = small_config(csv.path.string(), false);
    const auto a = harness::run_case_study_1(cfg);
    const auto b = harness::run_case_study_1(cfg);

    // folds x strategies x methods x (baseline + fractions), when no guardrail trips
    const std::size_t expected = 2u * 2u * 2u * 3u;
    CHECK(a.rows.size() == expected);
    CHECK(a.warnings.empty());

    const auto ja = harness::report_to_json(a, cfg, false);
    const auto jb = harness::report_to_json(b, cfg, false);
    CHECK(ja.dump() == jb.dump());
    CHECK(ja.find("timestamp") == ja.end());
    CHECK(harness::report_to_json(a, cfg, true).contains("timestamp"));
}

TEST_CASE("case study 2: per-method baseline stats and worst-fold rows") {
    TempCsv csv(testsupport::unfair_blobs(7), "rinf_h_cs2.csv");
    auto cfg = small_config(csv.path.string(), true);
    cfg.case_study = harness::CaseStudy::GroupGap;
    cfg.cf_methods = {recourse::Method::Wachter};
    const auto report = harness::run_case_study_2(cfg);

    REQUIRE(report.baseline_gap_stats.size() == 1);
    const auto& stat = report.baseline_gap_stats[0];
    CHECK(stat.method == "wachter");
    CHECK(stat.per_fold.size() == 2);
    CHECK(stat.max >= stat.mean);
    CHECK(stat.worst_fold >= 0);
    CHECK(stat.worst_fold < cfg.folds);

    // removal rows come from the worst fold only
    for (const auto& r : report.rows) CHECK(r.fold == stat.worst_fold);
    CHECK(!report.rows.empty());
}

TEST_CASE("case study 2 requires a protected attribute") {
    TempCsv csv(testsupport::two_blobs(10, 3), "rinf_h_noq.csv");
    auto cfg = small_config(csv.path.string(), false);
    cfg.case_study = harness::CaseStudy::GroupGap;
    CHECK_THROWS_AS(harness::run_case_study_2(cfg), DataError);
}

TEST_CASE("emit_report writes both formats") {
    TempCsv csv(testsupport::two_blobs(20, 42), "rinf_h_emit.csv");
    const auto cfg = small_config(csv.path.string(), false);
    const auto report = harness::run_case_study_1(cfg);

    const auto dir = std::filesystem::temp_directory_path();
    const auto jpath = (dir / "rinf_h_report.json").string();
    const auto cpath = (dir / "rinf_h_report.csv").string();
    harness::emit_report(report, cfg, jpath, harness::Format::Json);
    harness::emit_report(report, cfg, cpath, harness::Format::Csv);

    const auto j = nlohmann::json::parse(read_all(jpath));
    CHECK(j.at("case_study") == "avg_cost");
    CHECK(j.at("results").contains("fold_0"));
    CHECK(j.at("results").contains("fold_1"));
    CHECK(j.at("results")["fold_0"]["ours"]["wachter"].contains("0"));

    // header + 5 metadata comments + one line per row
    const auto text = read_all(cpath);
    CHECK(text.rfind("# case_study=avg_cost", 0) == 0);
    CHECK(count_lines(cpath) == 5 + 1 + static_cast<int>(report.rows.size()));

    std::filesystem::remove(jpath);
    std::filesystem::remove(cpath);
}

TEST_CASE("emit_curve_data sorts fractions and requires baselines") {
    ExperimentReport report;
    report.case_study = "avg_cost";
    auto row = [](int fold, double fraction) {
        harness::ReportRow r;
        r.fold = fold;
        r.strategy = "ours";
        r.method = "wachter";
        r.fraction = fraction;
        r.quantity_mean = 10.0 - fraction;
        return r;
    };
    report.rows = {row(0, 0.2), row(0, 0.0), row(0, 0.1)};

    const auto path = (std::filesystem::temp_directory_path() / "rinf_h_curve.csv").string();
    harness::emit_curve_data(report, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "fold,strategy,method,fraction,quantity_mean,quantity_var,f1_mean,f1_var");
    std::vector<double> fractions;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string field;
        for (int i = 0; i < 4; ++i) std::getline(ss, field, ',');
        fractions.push_back(std::stod(field));
    }
    CHECK(fractions == std::vector<double>{0.0, 0.1, 0.2});
    std::filesystem::remove(path);

    report.rows.erase(report.rows.begin() + 1);  // drop the baseline
    CHECK_THROWS_AS(harness::emit_curve_data(report, path), IntegrityError);

    ExperimentReport empty;
    CHECK_THROWS_AS(harness::emit_curve_data(empty, path), IntegrityError);
}

TEST_CASE("version string is non-empty") {
    CHECK(harness::version_string().rfind("rinf", 0) == 0);
}
