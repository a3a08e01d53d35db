#include "rinf/recourse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rinf/errors.hpp"

namespace rinf::recourse {

namespace {

constexpr double kSmoothEps = 1e-8;   // l1 surrogate: sum sqrt(d_i^2 + eps)
constexpr double kMaxGradNorm = 2.0;  // descent step clip

Vector smooth_l1_gradient(const Vector& delta) {
    return delta.array() / (delta.array().square() + kSmoothEps).sqrt();
}

// Shared gradient-descent loop for Wachter and Proto. extra_gradient adds
// the prototype pull when non-null.
Counterfactual descend(const nn::MlpClassifier& model, const Vector& x_orig, int y_target,
                       const RecourseConfig& cfg, const std::vector<Vector>* prototypes,
                       Method method) {
    cfg.validate();
    Counterfactual cf;
    cf.method = method;
    cf.y_target = y_target;
    cf.delta = Vector::Zero(x_orig.size());
    cf.x_cf = x_orig;

    if (model.predict(x_orig) == y_target) {
        cf.cost = 0.0;
        cf.converged = true;
        return cf;
    }

    Vector delta = Vector::Zero(x_orig.size());
    Vector best_delta;
    double best_score = std::numeric_limits<double>::infinity();

    // flipped iterates are ranked by the regularization part of the
    // objective: C * l1 plus the prototype pull when present
    auto score_of = [&](const Vector& d) {
        double s = cfg.regularization * cost_l1(d);
        if (prototypes && !prototypes->empty()) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& p : *prototypes)
                nearest = std::min(nearest, (x_orig + d - p).squaredNorm());
            s += cfg.proto_weight * nearest;
        }
        return s;
    };

    for (int it = 0; it < cfg.max_iters; ++it) {
        const Vector x = x_orig + delta;
        Vector grad = model.input_gradient(x, y_target) +
                      cfg.regularization * smooth_l1_gradient(delta);
        if (prototypes && !prototypes->empty()) {
            // pull toward the prototype nearest to the current candidate
            const Vector* nearest = &prototypes->front();
            double best = std::numeric_limits<double>::infinity();
            for (const auto& p : *prototypes) {
                const double d = (x - p).squaredNorm();
                if (d < best) {
                    best = d;
                    nearest = &p;
                }
            }
            grad += cfg.proto_weight * 2.0 * (x - *nearest);
        }
        // clip to keep strongly weighted objectives from oscillating
        const double gnorm = grad.norm();
        if (gnorm > kMaxGradNorm) grad *= kMaxGradNorm / gnorm;
        delta -= cfg.step_size * grad;

        if (model.predict(x_orig + delta) == y_target) {
            const double s = score_of(delta);
            if (s < best_score) {
                best_score = s;
                best_delta = delta;
            }
        }
    }

    if (best_delta.size() > 0) {
        cf.delta = best_delta;
        cf.converged = true;
    } else {
        cf.delta = delta;
        cf.converged = false;
    }
    cf.x_cf = x_orig + cf.delta;
    cf.cost = cost_l1(cf.delta);
    return cf;
}

std::vector<int> negative_cohort(const nn::MlpClassifier& model, const data::Dataset& test) {
    std::vector<int> rows;
    for (int i = 0; i < test.size(); ++i)
        if (model.predict(test.row(i)) == 0) rows.push_back(i);
    return rows;
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::Wachter: return "wachter";
        case Method::Nun: return "nun";
        case Method::Proto: return "proto";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    if (name == "wachter") return Method::Wachter;
    if (name == "nun") return Method::Nun;
    if (name == "proto") return Method::Proto;
    throw ConfigError("unknown counterfactual method: " + name);
}

void RecourseConfig::validate() const {
    if (regularization <= 0.0) throw ConfigError("recourse: C must be positive");
    if (max_iters < 1) throw ConfigError("recourse: max_iters must be positive");
    if (step_size <= 0.0) throw ConfigError("recourse: step_size must be positive");
    if (n_prototypes < 1) throw ConfigError("recourse: n_prototypes must be positive");
    if (proto_weight < 0.0) throw ConfigError("recourse: proto_weight must be nonnegative");
}

double cost_l1(const Vector& delta) {
    if (!delta.allFinite()) throw NumericError("cost_l1: non-finite entries");
    return delta.array().abs().sum();
}

Counterfactual wachter_counterfactual(const nn::MlpClassifier& model, const Vector& x_orig,
                                      int y_target, const RecourseConfig& cfg) {
    return descend(model, x_orig, y_target, cfg, nullptr, Method::Wachter);
}

Counterfactual nun_counterfactual(const data::Dataset& candidates, const nn::MlpClassifier& model,
                                  const Vector& x_orig, int y_target) {
    int best_row = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < candidates.size(); ++i) {
        if (model.predict(candidates.row(i)) != y_target) continue;
        const double d = (candidates.row(i) - x_orig).array().abs().sum();
        if (d < best_dist ||
            (d == best_dist && best_row >= 0 &&
             candidates.sample_ids[i] < candidates.sample_ids[best_row])) {
            best_dist = d;
            best_row = i;
        }
    }
    if (best_row < 0)
        throw NoCandidateError("nun_counterfactual: no candidate predicted as target class");

    Counterfactual cf;
    cf.method = Method::Nun;
    cf.y_target = y_target;
    cf.x_cf = candidates.row(best_row);
    cf.delta = cf.x_cf - x_orig;
    cf.cost = best_dist;
    cf.converged = true;
    return cf;
}

Counterfactual proto_counterfactual(const data::Dataset& candidates, const nn::MlpClassifier& model,
                                    const Vector& x_orig, int y_target, const RecourseConfig& cfg) {
    cfg.validate();
    // prototypes: the n_prototypes target-class samples nearest to x_orig
    std::vector<std::pair<double, int>> by_dist;
    for (int i = 0; i < candidates.size(); ++i)
        if (candidates.labels[i] == y_target)
            by_dist.emplace_back((candidates.row(i) - x_orig).norm(), i);
    if (static_cast<int>(by_dist.size()) < cfg.n_prototypes)
        throw NoCandidateError("proto_counterfactual: fewer target-class samples than prototypes");
    std::sort(by_dist.begin(), by_dist.end());

    std::vector<Vector> prototypes;
    for (int p = 0; p < cfg.n_prototypes; ++p) prototypes.push_back(candidates.row(by_dist[p].second));
    return descend(model, x_orig, y_target, cfg, &prototypes, Method::Proto);
}

Counterfactual counterfactual(Method method, const data::Dataset& candidates,
                              const nn::MlpClassifier& model, const Vector& x_orig, int y_target,
                              const RecourseConfig& cfg) {
    switch (method) {
        case Method::Wachter: return wachter_counterfactual(model, x_orig, y_target, cfg);
        case Method::Nun: return nun_counterfactual(candidates, model, x_orig, y_target);
        case Method::Proto: return proto_counterfactual(candidates, model, x_orig, y_target, cfg);
    }
    throw ConfigError("unknown counterfactual method");
}

double logit_gap(const nn::MlpClassifier& model, const Vector& x) {
    const auto [g0, g1] = model.forward_logits(x);
    return std::abs(g0 - g1);
}

CohortCost avg_cost_of_recourse(const nn::MlpClassifier& model, const data::Dataset& test,
                                const data::Dataset& reference, Method method,
                                const RecourseConfig& cfg) {
    const auto cohort = negative_cohort(model, test);
    if (cohort.empty())
        throw EmptyCohortError("avg_cost_of_recourse: no negatively classified samples");

    CohortCost out;
    out.cohort_size = static_cast<int>(cohort.size());
    double sum = 0.0;
    for (int i : cohort) {
        const auto cf = counterfactual(method, reference, model, test.row(i), 1, cfg);
        sum += cf.cost;
        if (!cf.converged) ++out.non_converged;
    }
    out.value = sum / static_cast<double>(cohort.size());
    return out;
}

double avg_cost_proxy(const nn::MlpClassifier& model, const data::Dataset& test) {
    const auto cohort = negative_cohort(model, test);
    if (cohort.empty()) throw EmptyCohortError("avg_cost_proxy: no negatively classified samples");
    double sum = 0.0;
    for (int i : cohort) sum += logit_gap(model, test.row(i));
    return sum / static_cast<double>(cohort.size());
}

GroupGap group_cost_gap(const nn::MlpClassifier& model, const data::Dataset& test,
                        const data::Dataset& reference, Method method, const RecourseConfig& cfg) {
    if (!test.protected_attr)
        throw DataError("group_cost_gap: dataset has no protected attribute");
    const auto cohort = negative_cohort(model, test);

    GroupGap out;
    double max_cost[2] = {-1.0, -1.0};
    for (int i : cohort) {
        const int q = (*test.protected_attr)[i];
        const auto cf = counterfactual(method, reference, model, test.row(i), 1, cfg);
        if (!cf.converged) ++out.non_converged;
        max_cost[q] = std::max(max_cost[q], cf.cost);
        (q == 0 ? out.n_q0 : out.n_q1)++;
    }
    if (out.n_q0 == 0 || out.n_q1 == 0)
        throw EmptyGroupError("group_cost_gap: a protected group has no negative samples");
    out.max_q0 = max_cost[0];
    out.max_q1 = max_cost[1];
    out.gap = std::abs(max_cost[0] - max_cost[1]);
    return out;
}

double group_gap_proxy(const nn::MlpClassifier& model, const data::Dataset& test) {
    if (!test.protected_attr)
        throw DataError("group_gap_proxy: dataset has no protected attribute");
    const auto cohort = negative_cohort(model, test);

    double max_gap[2] = {-1.0, -1.0};
    int count[2] = {0, 0};
    for (int i : cohort) {
        const int q = (*test.protected_attr)[i];
        max_gap[q] = std::max(max_gap[q], logit_gap(model, test.row(i)));
        ++count[q];
    }
    if (count[0] == 0 || count[1] == 0)
        throw EmptyGroupError("group_gap_proxy: a protected group has no negative samples");
    return std::abs(max_gap[0] - max_gap[1]);
}

} // namespace rinf::recourse
