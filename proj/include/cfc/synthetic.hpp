#pragma once

#include <fstream>
#include <random>
#include <string>

#include "cfc/dataset.hpp"
#include "cfc/rng.hpp"

namespace cfc {

/// p=3 binary features, y = f0. Feature 0 is cheap and informative
/// (cost 0.1); features 1 and 2 are noise (costs 0.5 and 0.9).
inline Dataset make_single_informative(int n, std::uint64_t seed) {
    Dataset ds;
    ds.n = n;
    ds.p = 3;
    ds.class_count = 2;
    ds.costs = {0.1, 0.5, 0.9};
    ds.feature_names = {"signal", "noise_a", "noise_b"};
    ds.x.assign(static_cast<std::size_t>(n) * 3, 0.0);
    ds.mask.assign(static_cast<std::size_t>(n) * 3, 1);
    std::mt19937_64 rng = make_rng(seed, "synthetic-single");
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < n; ++i) {
        int f0 = coin(rng) ? 1 : 0;
        ds.x[i * 3 + 0] = f0;
        ds.x[i * 3 + 1] = coin(rng) ? 1 : 0;
        ds.x[i * 3 + 2] = coin(rng) ? 1 : 0;
        ds.y.push_back(f0);
    }
    return ds;
}

/// Two perfectly correlated informative binary features with very different
/// costs (f0: 0.9, f1: 0.1) plus one noise feature; y = f0 = f1. The cheapest
/// sufficient acquisition is f1 alone.
inline Dataset make_redundant(int n, std::uint64_t seed) {
    Dataset ds;
    ds.n = n;
    ds.p = 3;
    ds.class_count = 2;
    ds.costs = {0.9, 0.1, 0.5};
    ds.feature_names = {"signal_pricey", "signal_cheap", "noise"};
    ds.x.assign(static_cast<std::size_t>(n) * 3, 0.0);
    ds.mask.assign(static_cast<std::size_t>(n) * 3, 1);
    std::mt19937_64 rng = make_rng(seed, "synthetic-redundant");
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < n; ++i) {
        int s = coin(rng) ? 1 : 0;
        ds.x[i * 3 + 0] = s;
        ds.x[i * 3 + 1] = s;
        ds.x[i * 3 + 2] = coin(rng) ? 1 : 0;
        ds.y.push_back(s);
    }
    return ds;
}

/// UCI-style binary tabular data: class-conditional Gaussians with the given
/// per-feature mean separation; only the first `informative` features carry
/// signal. Costs drawn uniform on [0.1, 1].
inline Dataset make_gaussian_binary(int n, int p, int informative, double separation,
                                    std::uint64_t seed) {
    Dataset ds;
    ds.n = n;
    ds.p = p;
    ds.class_count = 2;
    ds.costs = assign_random_costs(p, 0.1, 1.0, seed);
    for (int j = 0; j < p; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    ds.x.assign(static_cast<std::size_t>(n) * p, 0.0);
    ds.mask.assign(static_cast<std::size_t>(n) * p, 1);
    std::mt19937_64 rng = make_rng(seed, "synthetic-gaussian");
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        int label = coin(rng) ? 1 : 0;
        double mu = label == 1 ? separation / 2 : -separation / 2;
        for (int j = 0; j < p; ++j)
            ds.x[static_cast<std::size_t>(i) * p + j] = (j < informative ? mu : 0.0) + noise(rng);
        ds.y.push_back(label);
    }
    return ds;
}

/// Mask a fraction of cells uniformly at random (missing values).
inline Dataset mask_cells(Dataset ds, double fraction, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed, "mask-cells");
    std::bernoulli_distribution drop(fraction);
    for (auto& m : ds.mask)
        if (m && drop(rng)) m = 0;
    return ds;
}

/// Write a dataset in the CSV layout load_csv expects, including the #costs row.
inline void write_csv(const Dataset& ds, const std::string& path,
                      const std::string& label_column = "label") {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write csv: " + path);
    for (const auto& name : ds.feature_names) out << name << ',';
    out << label_column << '\n';
    out << "#costs";
    for (double c : ds.costs) out << ',' << c;
    out << '\n';
    out.precision(17);
    for (int i = 0; i < ds.n; ++i) {
        for (int j = 0; j < ds.p; ++j) {
            if (ds.present(i, j)) out << ds.value(i, j);
            out << ',';
        }
        out << "c" << ds.y[i] << '\n';
    }
    if (!out) throw ValidationError("csv write failed: " + path);
}

} // namespace cfc
