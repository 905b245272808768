#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfc/rng.hpp"

namespace cfc {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tabular dataset with an explicit missing-value mask. Cells where
/// present(i,j) is false are never read; missing values are not imputed.
struct Dataset {
    int n = 0;
    int p = 0;
    int class_count = 0;
    std::vector<double> x;            // row-major n*p, valid only where present
    std::vector<std::uint8_t> mask;   // row-major n*p, 1 = present
    std::vector<int> y;               // labels in [0, class_count)
    std::vector<double> costs;        // per-feature, all > 0
    std::vector<std::string> feature_names;

    double value(int i, int j) const { return x[static_cast<std::size_t>(i) * p + j]; }
    bool present(int i, int j) const { return mask[static_cast<std::size_t>(i) * p + j] != 0; }
    void set(int i, int j, double v) {
        x[static_cast<std::size_t>(i) * p + j] = v;
        mask[static_cast<std::size_t>(i) * p + j] = 1;
    }

    void validate() const {
        if (n < 1 || p < 1) throw ValidationError("dataset must have n >= 1 and p >= 1");
        if (class_count < 2) throw ValidationError("dataset must have at least 2 classes");
        for (double c : costs)
            if (!(c > 0)) throw ValidationError("all feature costs must be positive");
        for (int label : y)
            if (label < 0 || label >= class_count)
                throw ValidationError("label out of range [0, class_count)");
    }
};

struct SplitSpec {
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;
    std::uint64_t seed = 0;

    void validate() const {
        for (double f : {train_frac, val_frac, test_frac})
            if (!(f > 0.0 && f < 1.0)) throw ValidationError("split fractions must lie in (0,1)");
        if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
            throw ValidationError("split fractions must sum to 1");
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

} // namespace detail

/// Load a CSV with a header row of feature names plus one label column.
/// An optional second header row starting with "#costs" carries per-feature
/// costs. Empty cells denote missing values. Labels are re-indexed to
/// 0..K-1 in order of first appearance.
inline Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    auto header = detail::split_csv_line(line);

    int label_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (detail::trim(header[j]) == label_column) label_col = static_cast<int>(j);
    if (label_col < 0) throw ValidationError(path + ": label column '" + label_column + "' not found");

    Dataset ds;
    ds.p = static_cast<int>(header.size()) - 1;
    if (ds.p < 1) throw ValidationError(path + ": no feature columns");
    for (std::size_t j = 0; j < header.size(); ++j)
        if (static_cast<int>(j) != label_col) ds.feature_names.push_back(detail::trim(header[j]));

    int line_no = 1;
    std::map<std::string, int> label_index;
    std::vector<std::string> raw_labels;
    bool costs_seen = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);

        if (!costs_seen && !cells.empty() && detail::trim(cells[0]) == "#costs") {
            costs_seen = true;
            if (static_cast<int>(cells.size()) != ds.p + 1)
                throw ParseError(path + ":" + std::to_string(line_no) + ": cost row width mismatch");
            for (int j = 1; j <= ds.p; ++j) {
                try {
                    ds.costs.push_back(std::stod(detail::trim(cells[j])));
                } catch (const std::exception&) {
                    throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric cost");
                }
            }
            continue;
        }

        if (static_cast<int>(cells.size()) != ds.p + 1)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(ds.p + 1) + " cells, got " + std::to_string(cells.size()));

        int jf = 0;
        std::vector<double> row(ds.p, 0.0);
        std::vector<std::uint8_t> rmask(ds.p, 0);
        for (std::size_t j = 0; j < cells.size(); ++j) {
            std::string cell = detail::trim(cells[j]);
            if (static_cast<int>(j) == label_col) {
                if (cell.empty())
                    throw ParseError(path + ":" + std::to_string(line_no) + ": empty label");
                raw_labels.push_back(cell);
                continue;
            }
            if (!cell.empty()) {
                std::size_t pos = 0;
                double v;
                try {
                    v = std::stod(cell, &pos);
                } catch (const std::exception&) {
                    throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
                }
                if (pos != cell.size())
                    throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
                row[jf] = v;
                rmask[jf] = 1;
            }
            ++jf;
        }
        ds.x.insert(ds.x.end(), row.begin(), row.end());
        ds.mask.insert(ds.mask.end(), rmask.begin(), rmask.end());
    }

    ds.n = static_cast<int>(raw_labels.size());
    if (ds.n < 1) throw ValidationError(path + ": no data rows");
    for (const auto& s : raw_labels) {
        auto it = label_index.find(s);
        if (it == label_index.end())
            it = label_index.emplace(s, static_cast<int>(label_index.size())).first;
        ds.y.push_back(it->second);
    }
    ds.class_count = static_cast<int>(label_index.size());
    if (ds.class_count < 2) throw ValidationError(path + ": only one class present");
    if (ds.costs.empty()) ds.costs.assign(ds.p, 1.0);
    ds.validate();
    return ds;
}

/// Per-feature i.i.d. uniform costs on [lo, hi], deterministic per seed.
inline std::vector<double> assign_random_costs(int p, double lo, double hi, std::uint64_t seed) {
    if (!(lo > 0)) throw ValidationError("cost lower bound must be > 0");
    if (!(lo <= hi)) throw ValidationError("cost bounds require lo <= hi");
    std::mt19937_64 rng = make_rng(seed, "costs");
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> costs(p);
    for (auto& c : costs) c = (lo == hi) ? lo : dist(rng);
    return costs;
}

struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev; // population std over present training cells
};

/// Fit per-feature z-score statistics over present cells of the training split only.
inline NormStats fit_normalizer(const Dataset& train) {
    if (train.n < 1) throw ValidationError("cannot fit normalizer on empty dataset");
    NormStats st;
    st.mean.assign(train.p, 0.0);
    st.stddev.assign(train.p, 0.0);
    for (int j = 0; j < train.p; ++j) {
        double sum = 0.0, sum2 = 0.0;
        int cnt = 0;
        for (int i = 0; i < train.n; ++i) {
            if (!train.present(i, j)) continue;
            sum += train.value(i, j);
            sum2 += train.value(i, j) * train.value(i, j);
            ++cnt;
        }
        if (cnt > 0) {
            double m = sum / cnt;
            st.mean[j] = m;
            st.stddev[j] = std::sqrt(std::max(0.0, sum2 / cnt - m * m));
        }
    }
    return st;
}

/// Apply z-score stats; features with std below the floor map to 0. Mask preserved.
inline Dataset apply_normalizer(const NormStats& st, Dataset ds) {
    for (int i = 0; i < ds.n; ++i)
        for (int j = 0; j < ds.p; ++j) {
            if (!ds.present(i, j)) continue;
            double v = ds.value(i, j);
            ds.x[static_cast<std::size_t>(i) * ds.p + j] =
                (st.stddev[j] < 1e-12) ? 0.0 : (v - st.mean[j]) / st.stddev[j];
        }
    return ds;
}

namespace detail {

inline Dataset take_rows(const Dataset& ds, const std::vector<int>& rows) {
    Dataset out;
    out.p = ds.p;
    out.class_count = ds.class_count;
    out.costs = ds.costs;
    out.feature_names = ds.feature_names;
    out.n = static_cast<int>(rows.size());
    out.x.reserve(out.n * ds.p);
    out.mask.reserve(out.n * ds.p);
    for (int i : rows) {
        out.x.insert(out.x.end(), ds.x.begin() + static_cast<std::size_t>(i) * ds.p,
                     ds.x.begin() + static_cast<std::size_t>(i + 1) * ds.p);
        out.mask.insert(out.mask.end(), ds.mask.begin() + static_cast<std::size_t>(i) * ds.p,
                        ds.mask.begin() + static_cast<std::size_t>(i + 1) * ds.p);
        out.y.push_back(ds.y[i]);
    }
    return out;
}

} // namespace detail

struct SplitResult {
    Dataset train, val, test;
    std::vector<int> train_rows, val_rows, test_rows;
};

/// Seeded random row partition; rounding remainder goes to the training part.
inline SplitResult split(const Dataset& ds, const SplitSpec& spec) {
    spec.validate();
    std::vector<int> idx(ds.n);
    for (int i = 0; i < ds.n; ++i) idx[i] = i;
    std::mt19937_64 rng = make_rng(spec.seed, "split");
    std::shuffle(idx.begin(), idx.end(), rng);

    int n_val = static_cast<int>(std::floor(spec.val_frac * ds.n));
    int n_test = static_cast<int>(std::floor(spec.test_frac * ds.n));
    int n_train = ds.n - n_val - n_test;
    if (n_train < 1 || n_val < 1 || n_test < 1)
        throw ValidationError("dataset too small: a split part would be empty");

    SplitResult r;
    r.train_rows.assign(idx.begin(), idx.begin() + n_train);
    r.val_rows.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    r.test_rows.assign(idx.begin() + n_train + n_val, idx.end());
    r.train = detail::take_rows(ds, r.train_rows);
    r.val = detail::take_rows(ds, r.val_rows);
    r.test = detail::take_rows(ds, r.test_rows);
    return r;
}

/// Randomly delete minority-class rows until the minority proportion is
/// within one sample of target_ratio. Survivor order is preserved.
inline Dataset make_unbalanced(const Dataset& ds, int minority_label, double target_ratio,
                               std::uint64_t seed) {
    if (ds.class_count != 2) throw ValidationError("make_unbalanced requires a binary dataset");
    std::vector<int> minority, majority;
    for (int i = 0; i < ds.n; ++i)
        (ds.y[i] == minority_label ? minority : majority).push_back(i);
    if (minority.empty() || majority.empty()) throw ValidationError("both classes must be present");

    double current = static_cast<double>(minority.size()) / ds.n;
    if (!(target_ratio > 0.0 && target_ratio < current))
        throw ValidationError("target_ratio must lie in (0, current minority proportion)");

    auto maj = static_cast<double>(majority.size());
    int keep = static_cast<int>(std::llround(target_ratio * maj / (1.0 - target_ratio)));
    keep = std::clamp(keep, 1, static_cast<int>(minority.size()));

    std::mt19937_64 rng = make_rng(seed, "unbalance");
    std::vector<int> shuffled = minority;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<std::uint8_t> keep_row(ds.n, 0);
    for (int i : majority) keep_row[i] = 1;
    for (int k = 0; k < keep; ++k) keep_row[shuffled[k]] = 1;

    std::vector<int> rows;
    for (int i = 0; i < ds.n; ++i)
        if (keep_row[i]) rows.push_back(i);
    return detail::take_rows(ds, rows);
}

} // namespace cfc
