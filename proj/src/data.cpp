#include "rinf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "rinf/errors.hpp"
#include "rinf/rng.hpp"

namespace rinf::data {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, int row, const std::string& col) {
    const std::string t = trim(cell);
    try {
        std::size_t pos = 0;
        double v = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw ParseError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                         ", column '" + col + "'");
    }
}

int parse_binary(double v, int row, const std::string& col) {
    if (v == 0.0) return 0;
    if (v == 1.0) return 1;
    throw ParseError("column '" + col + "' must be binary, got " + std::to_string(v) + " at row " +
                     std::to_string(row));
}

std::vector<std::string> read_nonempty_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) lines.push_back(line);
    }
    return lines;
}

} // namespace

void Dataset::validate() const {
    const auto n = static_cast<std::size_t>(features.rows());
    if (labels.size() != n || sample_ids.size() != n)
        throw IntegrityError("dataset: row/label/id count mismatch");
    if (protected_attr && protected_attr->size() != n)
        throw IntegrityError("dataset: protected attribute length mismatch");
    if (!feature_names.empty() && feature_names.size() != static_cast<std::size_t>(features.cols()))
        throw IntegrityError("dataset: feature name count mismatch");
    std::unordered_set<std::uint64_t> seen;
    for (auto id : sample_ids)
        if (!seen.insert(id).second) throw IntegrityError("dataset: duplicate sample id");
    for (int y : labels)
        if (y != 0 && y != 1) throw IntegrityError("dataset: non-binary label");
    if (protected_attr)
        for (int q : *protected_attr)
            if (q != 0 && q != 1) throw IntegrityError("dataset: non-binary protected attribute");
}

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::optional<std::string>& protected_column) {
    const auto lines = read_nonempty_lines(path);
    if (lines.empty()) throw ParseError("empty CSV file: " + path);

    std::vector<std::string> header = split_csv_line(lines[0]);
    for (auto& h : header) h = trim(h);

    auto find_col = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError("column '" + name + "' not found in " + path);
        return static_cast<int>(it - header.begin());
    };

    const int label_idx = find_col(label_column);
    const int prot_idx = protected_column ? find_col(*protected_column) : -1;

    std::vector<int> feature_cols;
    std::vector<std::string> feature_names;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        if (c == label_idx || c == prot_idx) continue;
        feature_cols.push_back(c);
        feature_names.push_back(header[c]);
    }

    const int n = static_cast<int>(lines.size()) - 1;
    const int d = static_cast<int>(feature_cols.size());
    Dataset ds;
    ds.features = Matrix(n, d);
    ds.labels.resize(n);
    ds.feature_names = feature_names;
    if (prot_idx >= 0) ds.protected_attr = std::vector<int>(n);

    for (int r = 0; r < n; ++r) {
        auto cells = split_csv_line(lines[r + 1]);
        if (cells.size() != header.size())
            throw ParseError("row " + std::to_string(r) + " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(header.size()));
        for (int j = 0; j < d; ++j)
            ds.features(r, j) = parse_number(cells[feature_cols[j]], r, feature_names[j]);
        ds.labels[r] = parse_binary(parse_number(cells[label_idx], r, label_column), r, label_column);
        if (prot_idx >= 0)
            (*ds.protected_attr)[r] =
                parse_binary(parse_number(cells[prot_idx], r, *protected_column), r, *protected_column);
        ds.sample_ids.push_back(static_cast<std::uint64_t>(r));
    }
    ds.validate();
    return ds;
}

Dataset load_diabetes(const std::string& path) {
    const auto lines = read_nonempty_lines(path);
    if (lines.empty()) throw ParseError("empty file: " + path);
    const int n = static_cast<int>(lines.size()) - 1;
    if (n != 442)
        throw IntegrityError("diabetes: expected 442 rows, found " + std::to_string(n));

    // Header: AGE SEX BMI BP S1 S2 S3 S4 S5 S6 Y (whitespace separated)
    Dataset ds;
    ds.features = Matrix(n, 9);
    ds.labels.resize(n);
    ds.protected_attr = std::vector<int>(n);
    ds.feature_names = {"age", "bmi", "bp", "s1", "s2", "s3", "s4", "s5", "s6"};

    std::vector<double> target(n);
    for (int r = 0; r < n; ++r) {
        std::istringstream ss(lines[r + 1]);
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (vals.size() != 11)
            throw ParseError("diabetes: row " + std::to_string(r) + " has " +
                             std::to_string(vals.size()) + " values, expected 11");
        ds.features(r, 0) = vals[0];
        const double sex = vals[1];
        if (sex != 1.0 && sex != 2.0)
            throw ParseError("diabetes: SEX must be 1 or 2 at row " + std::to_string(r));
        (*ds.protected_attr)[r] = sex == 2.0 ? 1 : 0;
        for (int j = 0; j < 8; ++j) ds.features(r, 1 + j) = vals[2 + j];
        target[r] = vals[10];
        ds.sample_ids.push_back(static_cast<std::uint64_t>(r));
    }

    // Binarize disease progression at the median; values above the median
    // are the unfavorable outcome y=0.
    std::vector<double> sorted = target;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[n / 2];
    for (int r = 0; r < n; ++r) ds.labels[r] = target[r] > median ? 0 : 1;

    ds.validate();
    return ds;
}

Dataset load_credit(const std::string& path) {
    const auto lines = read_nonempty_lines(path);
    const int n = static_cast<int>(lines.size());
    if (n != 1000)
        throw IntegrityError("credit: expected 1000 rows, found " + std::to_string(n));

    // UCI german.data: 20 attributes + target, space separated, no header.
    // Numerical attributes (1-based): 2 duration, 5 credit amount,
    // 8 installment rate, 11 residence since, 13 age, 16 existing credits,
    // 18 dependents. Attribute 9 encodes personal status and sex.
    const std::array<int, 7> numeric_cols{1, 4, 7, 10, 12, 15, 17};
    Dataset ds;
    ds.features = Matrix(n, 7);
    ds.labels.resize(n);
    ds.protected_attr = std::vector<int>(n);
    ds.feature_names = {"duration",        "credit_amount",    "installment_rate", "residence_since",
                        "age",             "existing_credits", "dependents"};

    for (int r = 0; r < n; ++r) {
        std::istringstream ss(lines[r]);
        std::vector<std::string> tok;
        std::string t;
        while (ss >> t) tok.push_back(t);
        if (tok.size() != 21)
            throw ParseError("credit: row " + std::to_string(r) + " has " +
                             std::to_string(tok.size()) + " fields, expected 21");
        for (int j = 0; j < 7; ++j)
            ds.features(r, j) = parse_number(tok[numeric_cols[j]], r, ds.feature_names[j]);
        const std::string& status = tok[8];
        if (status.size() != 3 || status[0] != 'A' || status[1] != '9')
            throw ParseError("credit: bad personal-status code '" + status + "' at row " +
                             std::to_string(r));
        (*ds.protected_attr)[r] = (status == "A92" || status == "A95") ? 1 : 0;
        const double y = parse_number(tok[20], r, "target");
        if (y != 1.0 && y != 2.0)
            throw ParseError("credit: target must be 1 or 2 at row " + std::to_string(r));
        ds.labels[r] = y == 1.0 ? 1 : 0;  // 1 = good credit = favorable
        ds.sample_ids.push_back(static_cast<std::uint64_t>(r));
    }
    ds.validate();
    return ds;
}

Standardization standardize_fit(const Dataset& train) {
    if (train.size() == 0) throw DataError("standardize: empty training set");
    Standardization s;
    s.mean = train.features.colwise().mean();
    const int n = train.size();
    s.stddev = Vector(train.dim());
    for (int j = 0; j < train.dim(); ++j) {
        const double var = (train.features.col(j).array() - s.mean(j)).square().sum() / n;
        double sd = std::sqrt(var);
        if (sd < 1e-12) {
            std::cerr << "warning: feature " << j << " is constant; using unit divisor\n";
            sd = 1.0;
        }
        s.stddev(j) = sd;
    }
    return s;
}

Dataset standardize_apply(const Dataset& ds, const Standardization& stats) {
    if (ds.dim() != stats.mean.size())
        throw ShapeError("standardize_apply: dimension mismatch");
    Dataset out = ds;
    for (int j = 0; j < out.dim(); ++j)
        out.features.col(j) = (out.features.col(j).array() - stats.mean(j)) / stats.stddev(j);
    return out;
}

StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others) {
    StandardizeResult res;
    res.stats = standardize_fit(train);
    res.train = standardize_apply(train, res.stats);
    for (const auto& o : others) res.others.push_back(standardize_apply(o, res.stats));
    return res;
}

std::vector<FoldSplit> kfold(const Dataset& dataset, int k, std::uint64_t seed) {
    const int n = dataset.size();
    if (k < 2) throw ConfigError("kfold: k must be >= 2");
    if (n < k) throw ConfigError("kfold: fewer samples than folds");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(derive_seed(seed, 0x6b666f6cULL));
    std::shuffle(order.begin(), order.end(), rng);

    auto take = [&](const std::vector<int>& rows) {
        Dataset out;
        out.features = Matrix(rows.size(), dataset.dim());
        out.feature_names = dataset.feature_names;
        if (dataset.protected_attr) out.protected_attr = std::vector<int>();
        for (int r : rows) {
            out.features.row(out.labels.size()) = dataset.features.row(r);
            out.labels.push_back(dataset.labels[r]);
            out.sample_ids.push_back(dataset.sample_ids[r]);
            if (dataset.protected_attr) out.protected_attr->push_back((*dataset.protected_attr)[r]);
        }
        return out;
    };

    std::vector<FoldSplit> folds;
    for (int f = 0; f < k; ++f) {
        std::vector<int> test_rows, train_rows;
        for (int i = 0; i < n; ++i)
            (i % k == f ? test_rows : train_rows).push_back(order[i]);
        // keep original file order within each part
        std::sort(test_rows.begin(), test_rows.end());
        std::sort(train_rows.begin(), train_rows.end());
        FoldSplit fs;
        fs.train = take(train_rows);
        fs.test = take(test_rows);
        fs.fold_index = f;
        folds.push_back(std::move(fs));
    }
    return folds;
}

Dataset remove_samples(const Dataset& dataset, const std::unordered_set<std::uint64_t>& ids) {
    std::unordered_set<std::uint64_t> present(dataset.sample_ids.begin(), dataset.sample_ids.end());
    for (auto id : ids)
        if (!present.count(id))
            throw NotFoundError("remove_samples: unknown sample id " + std::to_string(id));

    std::vector<int> keep;
    for (int i = 0; i < dataset.size(); ++i)
        if (!ids.count(dataset.sample_ids[i])) keep.push_back(i);

    Dataset out;
    out.features = Matrix(keep.size(), dataset.dim());
    out.feature_names = dataset.feature_names;
    if (dataset.protected_attr) out.protected_attr = std::vector<int>();
    for (std::size_t j = 0; j < keep.size(); ++j) {
        out.features.row(j) = dataset.features.row(keep[j]);
        out.labels.push_back(dataset.labels[keep[j]]);
        out.sample_ids.push_back(dataset.sample_ids[keep[j]]);
        if (dataset.protected_attr) out.protected_attr->push_back((*dataset.protected_attr)[keep[j]]);
    }
    return out;
}

} // namespace rinf::data
