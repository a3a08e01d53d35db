#include "rinf/valuation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "rinf/errors.hpp"
#include "rinf/recourse.hpp"
#include "rinf/rng.hpp"

namespace rinf::valuation {

std::string value_kind_name(ValueKind kind) {
    switch (kind) {
        case ValueKind::PredictivePerformance: return "predictive_performance";
        case ValueKind::AvgRecourseCostProxy: return "avg_recourse_cost_proxy";
        case ValueKind::GroupGapProxy: return "group_gap_proxy";
        case ValueKind::Custom: return "custom";
    }
    return "unknown";
}

ValueFunction predictive_performance_vf() {
    ValueFunction vf;
    vf.kind = ValueKind::PredictivePerformance;
    vf.eval = [](const nn::MlpClassifier& m, const data::Dataset& d) -> std::optional<double> {
        return nn::f1_on(m, d);
    };
    return vf;
}

ValueFunction avg_cost_proxy_vf() {
    ValueFunction vf;
    vf.kind = ValueKind::AvgRecourseCostProxy;
    vf.eval = [](const nn::MlpClassifier& m, const data::Dataset& d) -> std::optional<double> {
        try {
            return recourse::avg_cost_proxy(m, d);
        } catch (const EmptyCohortError&) {
            return std::nullopt;
        }
    };
    return vf;
}

ValueFunction group_gap_proxy_vf() {
    ValueFunction vf;
    vf.kind = ValueKind::GroupGapProxy;
    vf.eval = [](const nn::MlpClassifier& m, const data::Dataset& d) -> std::optional<double> {
        try {
            return recourse::group_gap_proxy(m, d);
        } catch (const EmptyGroupError&) {
            return std::nullopt;
        } catch (const EmptyCohortError&) {
            return std::nullopt;
        }
    };
    return vf;
}

ValueFunction value_function(ValueKind kind) {
    switch (kind) {
        case ValueKind::PredictivePerformance: return predictive_performance_vf();
        case ValueKind::AvgRecourseCostProxy: return avg_cost_proxy_vf();
        case ValueKind::GroupGapProxy: return group_gap_proxy_vf();
        case ValueKind::Custom: break;
    }
    throw ConfigError("value_function: no built-in eval for this kind");
}

std::map<std::uint64_t, double> shapley_exact(
    const std::vector<std::uint64_t>& ids,
    const std::function<double(const std::vector<std::uint64_t>&)>& value_of_subset) {
    const int n = static_cast<int>(ids.size());
    if (n > 12) throw ConfigError("shapley_exact: more than 12 players (oracle use only)");
    if (n == 0) return {};

    // cache V over all subsets (bitmask order)
    const std::uint32_t total = 1u << n;
    std::vector<double> value(total);
    std::vector<std::uint64_t> subset;
    for (std::uint32_t mask = 0; mask < total; ++mask) {
        subset.clear();
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) subset.push_back(ids[i]);
        value[mask] = value_of_subset(subset);
    }

    std::vector<double> binom(n, 1.0);  // binom[s] = C(n-1, s)
    for (int s = 1; s < n; ++s) binom[s] = binom[s - 1] * (n - s) / s;

    std::map<std::uint64_t, double> phi;
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::uint32_t mask = 0; mask < total; ++mask) {
            if (mask & (1u << i)) continue;
            const int s = std::popcount(mask);
            sum += (value[mask | (1u << i)] - value[mask]) / binom[s];
        }
        phi[ids[i]] = sum / n;
    }
    return phi;
}

InfluenceScores influence_scores(const data::Dataset& train, const data::Dataset& test,
                                 const nn::TrainConfig& cfg, const ValueFunction& vf, int n_reps) {
    cfg.validate();
    if (!vf.eval) throw ConfigError("influence_scores: value function has no eval");
    if (train.size() == 0 || test.size() == 0)
        throw DataError("influence_scores: train and test must be non-empty");
    if (n_reps < 1) throw ConfigError("influence_scores: n_reps must be positive");

    InfluenceScores scores;
    scores.n_repetitions = n_reps;
    scores.k_epochs = cfg.epochs;
    scores.seed = cfg.seed;
    scores.value_kind = vf.kind;

    std::map<std::uint64_t, double> sum_phi;
    for (auto id : train.sample_ids) {
        sum_phi[id] = 0.0;
        scores.visits[id] = 0;
    }

    std::vector<int> order(train.size());
    for (int j = 0; j < n_reps; ++j) {
        auto model = nn::MlpClassifier::init_random(train.dim(), cfg.hidden_sizes,
                                                    derive_seed(cfg.seed, j, 0), cfg.init_scale);
        auto shuffle_rng = make_rng(derive_seed(cfg.seed, j, 1));

        std::map<std::uint64_t, double> rep_sum;
        for (auto id : train.sample_ids) rep_sum[id] = 0.0;

        // carried value; stays stale while the quantity is undefined
        std::optional<double> current = vf.eval(model, test);

        for (int t = 0; t < cfg.epochs; ++t) {
            const std::optional<double> epoch_start = current;
            double epoch_increments = 0.0;
            bool epoch_clean = epoch_start.has_value();

            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            for (int row : order) {
                model.sgd_step(train.row(row), train.labels[row], cfg.learning_rate);
                const std::optional<double> after = vf.eval(model, test);

                double increment = 0.0;
                if (after.has_value() && current.has_value()) {
                    increment = *after - *current;
                } else {
                    ++scores.empty_cohort_steps;
                    epoch_clean = false;
                }
                if (after.has_value()) current = after;

                const std::uint64_t id = train.sample_ids[row];
                sum_phi[id] += increment;
                rep_sum[id] += increment;
                scores.visits[id] += 1;
                epoch_increments += increment;
            }

            if (epoch_clean && current.has_value()) {
                const double err = std::abs(epoch_increments - (*current - *epoch_start));
                scores.max_telescoping_error = std::max(scores.max_telescoping_error, err);
            }
        }

        std::map<std::uint64_t, double> rep_mean;
        for (auto& [id, s] : rep_sum) rep_mean[id] = s / static_cast<double>(cfg.epochs);
        scores.history.push_back(std::move(rep_mean));
    }

    const double denom = static_cast<double>(n_reps) * cfg.epochs;
    for (auto& [id, s] : sum_phi) scores.phi[id] = s / denom;
    return scores;
}

InfluenceScores data_shap_mc(const data::Dataset& train, const data::Dataset& test,
                             const nn::TrainConfig& cfg, int n_reps, const ValueFunction& vf) {
    return influence_scores(train, test, cfg, vf, n_reps);
}

std::vector<std::uint64_t> select_influential(const InfluenceScores& scores, std::optional<int> k,
                                              std::optional<double> threshold, SelectMode mode) {
    if (k.has_value() == threshold.has_value())
        throw ConfigError("select_influential: exactly one of k / threshold must be given");
    if (k && (*k < 0 || *k > static_cast<int>(scores.phi.size())))
        throw ConfigError("select_influential: k out of range");

    std::vector<std::pair<std::uint64_t, double>> ranked(scores.phi.begin(), scores.phi.end());
    const auto key = [mode](double phi) { return mode == SelectMode::AbsoluteTop ? std::abs(phi) : phi; };
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
        const double ka = key(a.second), kb = key(b.second);
        if (ka != kb) return ka > kb;
        return a.first < b.first;
    });

    std::vector<std::uint64_t> out;
    for (const auto& [id, phi] : ranked) {
        if (mode == SelectMode::PositiveTop && phi <= 0.0) break;
        if (k && static_cast<int>(out.size()) >= *k) break;
        if (threshold && key(phi) < *threshold) break;
        out.push_back(id);
    }
    return out;
}

ConvergenceReport convergence_diagnostics(const InfluenceScores& scores, double threshold) {
    if (scores.n_repetitions < 2)
        throw ConfigError("convergence_diagnostics: need at least 2 repetitions");

    ConvergenceReport report;
    report.threshold = threshold;
    const int n = static_cast<int>(scores.history.size());
    const int half = n / 2;

    double worst = 0.0;
    for (const auto& [id, phi] : scores.phi) {
        double first = 0.0, all = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = scores.history[j].at(id);
            all += v;
            if (j < half) first += v;
        }
        first /= half;
        all /= n;
        worst = std::max(worst, std::abs(first - all) / (std::abs(all) + 1e-9));
    }
    report.stability_ratio = worst;
    report.converged = worst < threshold;
    return report;
}

nlohmann::json to_json(const InfluenceScores& scores) {
    nlohmann::json j;
    j["n_repetitions"] = scores.n_repetitions;
    j["k_epochs"] = scores.k_epochs;
    j["seed"] = scores.seed;
    j["value_function"] = value_kind_name(scores.value_kind);
    j["empty_cohort_steps"] = scores.empty_cohort_steps;
    j["max_telescoping_error"] = scores.max_telescoping_error;
    auto& records = j["scores"] = nlohmann::json::array();
    for (const auto& [id, phi] : scores.phi)
        records.push_back({{"sample_id", id}, {"phi", phi}, {"visits", scores.visits.at(id)}});
    return j;
}

InfluenceScores scores_from_json(const nlohmann::json& j) {
    InfluenceScores scores;
    scores.n_repetitions = j.at("n_repetitions").get<int>();
    scores.k_epochs = j.at("k_epochs").get<int>();
    scores.seed = j.at("seed").get<std::uint64_t>();
    scores.empty_cohort_steps = j.value("empty_cohort_steps", 0);
    scores.max_telescoping_error = j.value("max_telescoping_error", 0.0);
    const std::string kind = j.at("value_function").get<std::string>();
    for (auto k : {ValueKind::PredictivePerformance, ValueKind::AvgRecourseCostProxy,
                   ValueKind::GroupGapProxy, ValueKind::Custom})
        if (value_kind_name(k) == kind) scores.value_kind = k;
    for (const auto& rec : j.at("scores")) {
        const auto id = rec.at("sample_id").get<std::uint64_t>();
        scores.phi[id] = rec.at("phi").get<double>();
        scores.visits[id] = rec.at("visits").get<int>();
    }
    return scores;
}

} // namespace rinf::valuation
