#ifndef RINF_RECOURSE_HPP
#define RINF_RECOURSE_HPP

#include <string>

#include "rinf/data.hpp"
#include "rinf/neuralnet.hpp"

namespace rinf::recourse {

using Vector = Eigen::VectorXd;

enum class Method { Wachter, Nun, Proto };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// A counterfactual explanation x_cf = x_orig + delta for a requested target
// class. cost is always the exact l1 norm of delta; converged means the
// model predicts y_target at x_cf.
struct Counterfactual {
    Vector delta;
    Vector x_cf;
    int y_target = 1;
    double cost = 0.0;
    bool converged = false;
    Method method = Method::Wachter;
};

struct RecourseConfig {
    double regularization = 0.1;  // C in the counterfactual objective
    int max_iters = 500;
    double step_size = 0.05;
    int n_prototypes = 5;
    double proto_weight = 0.5;

    void validate() const;
};

double cost_l1(const Vector& delta);

// Gradient descent on CE(h(x+delta), y_target) + C * smooth_l1(delta).
// Never throws on non-convergence; returns the best-effort delta instead.
Counterfactual wachter_counterfactual(const nn::MlpClassifier& model, const Vector& x_orig,
                                      int y_target, const RecourseConfig& cfg);

// Nearest unlike neighbor: closest candidate (l1) predicted y_target by the
// model; ties broken by smallest sample id.
Counterfactual nun_counterfactual(const data::Dataset& candidates, const nn::MlpClassifier& model,
                                  const Vector& x_orig, int y_target);

// Wachter objective plus proto_weight * squared l2 distance to the nearest
// of the n_prototypes target-class training points closest to x_orig.
Counterfactual proto_counterfactual(const data::Dataset& candidates, const nn::MlpClassifier& model,
                                    const Vector& x_orig, int y_target, const RecourseConfig& cfg);

Counterfactual counterfactual(Method method, const data::Dataset& candidates,
                              const nn::MlpClassifier& model, const Vector& x_orig, int y_target,
                              const RecourseConfig& cfg);

// |g0(x) - g1(x)|, a proxy for the distance to the decision boundary.
double logit_gap(const nn::MlpClassifier& model, const Vector& x);

struct CohortCost {
    double value = 0.0;     // mean cost of recourse over the negative cohort
    int cohort_size = 0;
    int non_converged = 0;  // counterfactuals included with best-effort cost
};

// Mean cost of recourse over the test samples currently predicted 0,
// targeting the favorable class. `reference` supplies NUN/Proto candidates.
CohortCost avg_cost_of_recourse(const nn::MlpClassifier& model, const data::Dataset& test,
                                const data::Dataset& reference, Method method,
                                const RecourseConfig& cfg);

// Logit-gap proxy for the mean cost of recourse over the negative cohort.
double avg_cost_proxy(const nn::MlpClassifier& model, const data::Dataset& test);

struct GroupGap {
    double gap = 0.0;       // |max cost (q=0) - max cost (q=1)|
    double max_q0 = 0.0;
    double max_q1 = 0.0;
    int n_q0 = 0;
    int n_q1 = 0;
    int non_converged = 0;
};

// Worst-case recourse-cost gap between the protected groups, over the
// negatively classified test samples.
GroupGap group_cost_gap(const nn::MlpClassifier& model, const data::Dataset& test,
                        const data::Dataset& reference, Method method, const RecourseConfig& cfg);

// Logit-gap proxy of the group cost gap.
double group_gap_proxy(const nn::MlpClassifier& model, const data::Dataset& test);

} // namespace rinf::recourse

#endif // RINF_RECOURSE_HPP
