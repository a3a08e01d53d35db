#ifndef RINF_TESTS_SYNTHETIC_HPP
#define RINF_TESTS_SYNTHETIC_HPP

#include <fstream>
#include <random>
#include <vector>

#include "rinf/data.hpp"
#include "rinf/rng.hpp"

namespace rinf::testsupport {

struct Point {
    double x;
    double y;
    int label;
    int group = 0;
};

inline data::Dataset dataset_from_points(const std::vector<Point>& points, bool with_protected) {
    data::Dataset ds;
    ds.features = data::Matrix(points.size(), 2);
    ds.feature_names = {"f0", "f1"};
    if (with_protected) ds.protected_attr = std::vector<int>();
    for (std::size_t i = 0; i < points.size(); ++i) {
        ds.features(i, 0) = points[i].x;
        ds.features(i, 1) = points[i].y;
        ds.labels.push_back(points[i].label);
        ds.sample_ids.push_back(i);
        if (with_protected) ds.protected_attr->push_back(points[i].group);
    }
    ds.validate();
    return ds;
}

inline void add_blob(std::vector<Point>& points, int n, double cx, double cy, double sd, int label,
                     std::mt19937_64& rng, int group = 0) {
    std::normal_distribution<double> nx(cx, sd), ny(cy, sd);
    for (int i = 0; i < n; ++i) points.push_back({nx(rng), ny(rng), label, group});
}

// Two well-separated Gaussian blobs: class 0 at (-2,0), class 1 at (+2,0).
inline data::Dataset two_blobs(int n_per_class, std::uint64_t seed, double sd = 0.5) {
    auto rng = make_rng(seed);
    std::vector<Point> points;
    add_blob(points, n_per_class, -2.0, 0.0, sd, 0, rng);
    add_blob(points, n_per_class, 2.0, 0.0, sd, 1, rng);
    return dataset_from_points(points, false);
}

// Separable blobs plus a handful of unfavorable points planted between the
// negative mass and the favorable class. The planted points stay contested
// during training and push the decision boundary away from the negatives,
// inflating everyone's cost of recourse.
inline data::Dataset blobs_with_cost_outliers(int n_class0, int n_class1, int n_outliers,
                                              std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::vector<Point> points;
    add_blob(points, n_class0, -2.0, 0.0, 0.5, 0, rng);
    add_blob(points, n_class1, 2.0, 0.0, 0.5, 1, rng);
    add_blob(points, n_outliers, -0.5, 0.0, 0.1, 0, rng);
    return dataset_from_points(points, false);
}

// Case-study-II construction: group q=1 negatives live in an upper region
// whose boundary is pushed far to the favorable side by a small planted
// cluster of negative samples, producing a large worst-case cost gap.
inline data::Dataset unfair_blobs(std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::vector<Point> points;
    // favorable class, both groups
    add_blob(points, 50, 2.0, 0.0, 0.5, 1, rng, 0);
    add_blob(points, 50, 2.0, 0.5, 0.5, 1, rng, 1);
    // unfavorable class, group 0 near the boundary
    add_blob(points, 60, -2.0, 0.0, 0.5, 0, rng, 0);
    // unfavorable class, group 1 in the upper region
    add_blob(points, 30, -2.0, 3.0, 0.5, 0, rng, 1);
    // planted: negative samples deep in the favorable side of the upper region
    add_blob(points, 10, 3.0, 3.0, 0.3, 0, rng, 0);
    return dataset_from_points(points, true);
}

// Statistically identical groups (labels and geometry independent of q).
inline data::Dataset fair_blobs(int n_per_class, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::vector<Point> points;
    std::bernoulli_distribution coin(0.5);
    add_blob(points, n_per_class, -2.0, 0.0, 0.5, 0, rng);
    add_blob(points, n_per_class, 2.0, 0.0, 0.5, 1, rng);
    for (auto& p : points) p.group = coin(rng) ? 1 : 0;
    return dataset_from_points(points, true);
}

inline void write_csv(const data::Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    for (const auto& name : ds.feature_names) out << name << ',';
    if (ds.protected_attr) out << "q,";
    out << "y\n";
    for (int i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < ds.dim(); ++j) out << ds.features(i, j) << ',';
        if (ds.protected_attr) out << (*ds.protected_attr)[i] << ',';
        out << ds.labels[i] << "\n";
    }
}

} // namespace rinf::testsupport

#endif // RINF_TESTS_SYNTHETIC_HPP
