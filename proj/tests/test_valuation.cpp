#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "rinf/errors.hpp"
#include "rinf/valuation.hpp"
#include "support/synthetic.hpp"

using namespace rinf;
using valuation::InfluenceScores;
using valuation::SelectMode;

namespace {

double subset_sum(const std::vector<std::uint64_t>& s,
                  const std::map<std::uint64_t, double>& weights) {
    double v = 0.0;
    for (auto id : s) v += weights.at(id);
    return v;
}

valuation::ValueFunction constant_vf(double value) {
    valuation::ValueFunction vf;
    vf.eval = [value](const nn::MlpClassifier&, const data::Dataset&) -> std::optional<double> {
        return value;
    };
    return vf;
}

nn::TrainConfig scoring_config(std::uint64_t seed, int epochs = 3) {
    nn::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.hidden_sizes = {8, 8};
    return cfg;
}

} // namespace

TEST_CASE("shapley_exact: null game gives zero values") {
    const std::vector<std::uint64_t> ids{3, 7, 9};
    const auto phi = valuation::shapley_exact(ids, [](const auto&) { return 0.0; });
    REQUIRE(phi.size() == 3);
    for (const auto& [id, v] : phi) CHECK(v == 0.0);
}

TEST_CASE("shapley_exact: additive game recovers the weights") {
    const std::map<std::uint64_t, double> weights{{0, 1.5}, {1, -2.0}, {2, 0.25}, {3, 4.0}};
    const std::vector<std::uint64_t> ids{0, 1, 2, 3};
    const auto phi =
        valuation::shapley_exact(ids, [&](const auto& s) { return subset_sum(s, weights); });
    for (auto id : ids) CHECK(phi.at(id) == doctest::Approx(weights.at(id)).epsilon(1e-12));
}

TEST_CASE("shapley_exact: three-player worked example") {
    // V(S) = 1 if S contains player 0 or player 1, else 0. Players 0 and 1
    // are symmetric, player 2 is null.
    // phi_0 = phi_1: marginal is 1 when joining a coalition without the other
    // of {0,1}; over orderings that happens with probability 1/2, so phi = 1/2.
    const std::vector<std::uint64_t> ids{0, 1, 2};
    const auto phi = valuation::shapley_exact(ids, [](const auto& s) {
        for (auto id : s)
            if (id == 0 || id == 1) return 1.0;
        return 0.0;
    });
    CHECK(phi.at(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(phi.at(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(phi.at(2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("shapley_exact: efficiency and symmetry on a random game") {
    const std::vector<std::uint64_t> ids{0, 1, 2, 3, 4};
    auto rng = make_rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // value depends only on |S| and whether 2 in S, so 0,1,3,4 are symmetric
    std::vector<double> by_size(ids.size() + 1);
    for (auto& v : by_size) v = u(rng);
    const double bonus = u(rng);
    const auto game = [&](const std::vector<std::uint64_t>& s) {
        double v = by_size[s.size()];
        for (auto id : s)
            if (id == 2) v += bonus;
        return v;
    };
    const auto phi = valuation::shapley_exact(ids, game);

    double total = 0.0;
    for (const auto& [id, v] : phi) total += v;
    CHECK(total == doctest::Approx(game(ids) - game({})).epsilon(1e-10));

    CHECK(phi.at(0) == doctest::Approx(phi.at(1)).epsilon(1e-10));
    CHECK(phi.at(0) == doctest::Approx(phi.at(3)).epsilon(1e-10));
    CHECK(phi.at(0) == doctest::Approx(phi.at(4)).epsilon(1e-10));
}

TEST_CASE("shapley_exact: size limits") {
    CHECK(valuation::shapley_exact({}, [](const auto&) { return 1.0; }).empty());
    std::vector<std::uint64_t> big(13);
    std::iota(big.begin(), big.end(), 0);
    CHECK_THROWS_AS(valuation::shapley_exact(big, [](const auto&) { return 0.0; }), ConfigError);
}

TEST_CASE("influence_scores: constant value function gives exactly zero scores") {
    const auto train = testsupport::two_blobs(5, 1);
    const auto test = testsupport::two_blobs(5, 2);
    const auto cfg = scoring_config(17, 3);
    const auto scores = valuation::influence_scores(train, test, cfg, constant_vf(0.7), 4);

    REQUIRE(scores.phi.size() == 10);
    for (const auto& [id, phi] : scores.phi) CHECK(phi == 0.0);
    for (const auto& [id, v] : scores.visits) CHECK(v == 4 * 3);
    CHECK(scores.empty_cohort_steps == 0);
    CHECK(scores.max_telescoping_error == 0.0);
}

TEST_CASE("influence_scores: always-undefined value function records empty steps") {
    const auto train = testsupport::two_blobs(4, 3);
    const auto test = testsupport::two_blobs(4, 4);
    valuation::ValueFunction vf;
    vf.eval = [](const nn::MlpClassifier&, const data::Dataset&) -> std::optional<double> {
        return std::nullopt;
    };
    const auto cfg = scoring_config(5, 2);
    const auto scores = valuation::influence_scores(train, test, cfg, vf, 3);
    for (const auto& [id, phi] : scores.phi) CHECK(phi == 0.0);
    CHECK(scores.empty_cohort_steps == 3 * 2 * train.size());
}

TEST_CASE("influence_scores: telescoping per epoch within float tolerance") {
    const auto train = testsupport::two_blobs(10, 6);
    const auto test = testsupport::two_blobs(15, 7);
    const auto cfg = scoring_config(11, 4);
    const auto scores =
        valuation::influence_scores(train, test, cfg, valuation::avg_cost_proxy_vf(), 5);
    CHECK(scores.max_telescoping_error <= 1e-9);
}

TEST_CASE("influence_scores: determinism") {
    const auto train = testsupport::two_blobs(6, 8);
    const auto test = testsupport::two_blobs(6, 9);
    const auto cfg = scoring_config(23, 2);
    const auto a = valuation::influence_scores(train, test, cfg, valuation::avg_cost_proxy_vf(), 3);
    const auto b = valuation::influence_scores(train, test, cfg, valuation::avg_cost_proxy_vf(), 3);
    for (const auto& [id, phi] : a.phi) CHECK(phi == b.phi.at(id));
}

TEST_CASE("influence_scores: duplicated samples receive statistically equal scores") {
    auto train = testsupport::two_blobs(8, 12);
    // append an exact copy of sample 0 with a fresh id
    const int n = train.size();
    data::Matrix features(n + 1, 2);
    features.topRows(n) = train.features;
    features.row(n) = train.features.row(0);
    train.features = features;
    train.labels.push_back(train.labels[0]);
    train.sample_ids.push_back(100);

    const auto test = testsupport::two_blobs(12, 13);
    const auto cfg = scoring_config(29, 3);
    const int reps = 60;
    const auto scores =
        valuation::influence_scores(train, test, cfg, valuation::avg_cost_proxy_vf(), reps);

    // per-repetition score differences between the twins should average to
    // zero; check the mean against its own standard error
    double mean = 0.0, m2 = 0.0;
    int k = 0;
    for (const auto& rep : scores.history) {
        const double d = rep.at(train.sample_ids[0]) - rep.at(100);
        ++k;
        const double delta = d - mean;
        mean += delta / k;
        m2 += delta * (d - mean);
    }
    const double stderr_mean = std::sqrt(m2 / (k - 1)) / std::sqrt(static_cast<double>(k));
    CHECK(std::abs(mean) <= 3.0 * stderr_mean + 1e-12);
}

TEST_CASE("influence_scores: mislabeled sample scores lowest for predictive performance") {
    auto train = testsupport::two_blobs(12, 40);
    train.labels[0] = 1;  // class-0 point at (-2, 0) flipped to class 1
    const auto test = testsupport::two_blobs(30, 41);

    const auto cfg = scoring_config(43, 3);
    const auto scores =
        valuation::influence_scores(train, test, cfg, valuation::predictive_performance_vf(), 40);

    const double bad = scores.phi.at(train.sample_ids[0]);
    CHECK(bad < 0.0);
    for (const auto& [id, phi] : scores.phi)
        if (id != train.sample_ids[0]) CHECK(bad < phi);
}

TEST_CASE("influence_scores: input validation") {
    const auto ds = testsupport::two_blobs(3, 1);
    const auto cfg = scoring_config(1);
    data::Dataset empty;
    empty.features = data::Matrix(0, 2);
    CHECK_THROWS_AS(valuation::influence_scores(empty, ds, cfg, constant_vf(0.0), 2), DataError);
    CHECK_THROWS_AS(valuation::influence_scores(ds, ds, cfg, constant_vf(0.0), 0), ConfigError);
    CHECK_THROWS_AS(valuation::influence_scores(ds, ds, cfg, valuation::ValueFunction{}, 2),
                    ConfigError);
}

TEST_CASE("data_shap_mc equals influence_scores with the performance value function") {
    const auto train = testsupport::two_blobs(6, 20);
    const auto test = testsupport::two_blobs(8, 21);
    const auto cfg = scoring_config(37, 2);
    const auto a = valuation::data_shap_mc(train, test, cfg, 4);
    const auto b =
        valuation::influence_scores(train, test, cfg, valuation::predictive_performance_vf(), 4);
    REQUIRE(a.phi.size() == b.phi.size());
    for (const auto& [id, phi] : a.phi) CHECK(phi == b.phi.at(id));
    CHECK(a.value_kind == valuation::ValueKind::PredictivePerformance);
}

TEST_CASE("select_influential worked examples") {
    InfluenceScores s;
    s.phi = {{0, 0.5}, {1, -0.9}, {2, 0.1}};

    CHECK(valuation::select_influential(s, 2, std::nullopt, SelectMode::AbsoluteTop) ==
          std::vector<std::uint64_t>{1, 0});
    CHECK(valuation::select_influential(s, 2, std::nullopt, SelectMode::PositiveTop) ==
          std::vector<std::uint64_t>{0, 2});
    CHECK(valuation::select_influential(s, std::nullopt, 0.6, SelectMode::AbsoluteTop) ==
          std::vector<std::uint64_t>{1});
    CHECK(valuation::select_influential(s, 3, std::nullopt, SelectMode::PositiveTop) ==
          std::vector<std::uint64_t>{0, 2});
    CHECK(valuation::select_influential(s, 0, std::nullopt, SelectMode::AbsoluteTop).empty());
}

TEST_CASE("select_influential breaks ties toward the smaller id") {
    InfluenceScores s;
    s.phi = {{4, 0.3}, {9, 0.3}, {2, 0.3}};
    CHECK(valuation::select_influential(s, 2, std::nullopt, SelectMode::PositiveTop) ==
          std::vector<std::uint64_t>{2, 4});
}

TEST_CASE("select_influential rejects bad argument combinations") {
    InfluenceScores s;
    s.phi = {{0, 1.0}};
    CHECK_THROWS_AS(valuation::select_influential(s, 1, 0.5, SelectMode::AbsoluteTop), ConfigError);
    CHECK_THROWS_AS(
        valuation::select_influential(s, std::nullopt, std::nullopt, SelectMode::AbsoluteTop),
        ConfigError);
    CHECK_THROWS_AS(valuation::select_influential(s, 2, std::nullopt, SelectMode::AbsoluteTop),
                    ConfigError);
}

TEST_CASE("convergence_diagnostics: stable vs oscillating histories") {
    InfluenceScores stable;
    stable.n_repetitions = 6;
    stable.phi = {{0, 0.5}};
    for (int j = 0; j < 6; ++j) stable.history.push_back({{0, 0.5}});
    const auto good = valuation::convergence_diagnostics(stable);
    CHECK(good.converged);
    CHECK(good.stability_ratio == doctest::Approx(0.0));

    InfluenceScores swing;
    swing.n_repetitions = 6;
    swing.phi = {{0, 0.0}};
    for (int j = 0; j < 6; ++j) swing.history.push_back({{0, j < 3 ? 1.0 : -1.0}});
    CHECK(!valuation::convergence_diagnostics(swing).converged);

    InfluenceScores single;
    single.n_repetitions = 1;
    CHECK_THROWS_AS(valuation::convergence_diagnostics(single), ConfigError);
}

TEST_CASE("convergence_diagnostics: iid noise around a signal converges") {
    auto rng = make_rng(77);
    std::normal_distribution<double> noise(0.0, 0.1);
    InfluenceScores s;
    s.n_repetitions = 500;
    double sum = 0.0;
    for (int j = 0; j < 500; ++j) {
        const double v = 1.0 + noise(rng);
        s.history.push_back({{0, v}});
        sum += v;
    }
    s.phi = {{0, sum / 500.0}};
    CHECK(valuation::convergence_diagnostics(s).converged);
}

TEST_CASE("scores serialize and round-trip through json") {
    const auto train = testsupport::two_blobs(4, 30);
    const auto test = testsupport::two_blobs(4, 31);
    const auto cfg = scoring_config(51, 2);
    const auto scores =
        valuation::influence_scores(train, test, cfg, valuation::avg_cost_proxy_vf(), 3);

    const auto j = valuation::to_json(scores);
    CHECK(j.at("n_repetitions") == 3);
    CHECK(j.at("k_epochs") == 2);
    CHECK(j.at("seed") == 51);
    CHECK(j.at("value_function") == "avg_recourse_cost_proxy");
    CHECK(j.at("scores").size() == scores.phi.size());

    const auto back = valuation::scores_from_json(j);
    CHECK(back.n_repetitions == scores.n_repetitions);
    CHECK(back.k_epochs == scores.k_epochs);
    CHECK(back.seed == scores.seed);
    CHECK(back.value_kind == scores.value_kind);
    for (const auto& [id, phi] : scores.phi) {
        CHECK(back.phi.at(id) == phi);
        CHECK(back.visits.at(id) == scores.visits.at(id));
    }
}
