#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cfc/metrics.hpp"
#include "cfc/synthetic.hpp"

using namespace cfc;

TEST_CASE("auc") {
    SECTION("perfect separation") {
        CHECK(auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
    }
    SECTION("all ties") {
        CHECK(auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
    }
    SECTION("hand-counted concordant pairs") {
        CHECK(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == Catch::Approx(0.75));
    }
    SECTION("invariant under strictly increasing transforms") {
        std::mt19937_64 rng(3);
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < 50; ++i) {
            scores.push_back(std::uniform_real_distribution<double>(-2, 2)(rng));
            labels.push_back(static_cast<int>(rng() % 2));
        }
        double base = auc(scores, labels);
        auto transformed = scores;
        for (auto& s : transformed) s = std::exp(3 * s) + 1;
        CHECK(auc(transformed, labels) == Catch::Approx(base).margin(1e-12));
    }
    SECTION("random scorer on balanced labels is near 0.5") {
        std::mt19937_64 rng(7);
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < 1000; ++i) {
            scores.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
            labels.push_back(i % 2);
        }
        CHECK(auc(scores, labels) == Catch::Approx(0.5).margin(0.05));
    }
    SECTION("single class rejected") {
        CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), ValidationError);
    }
}

TEST_CASE("evaluate") {
    auto ds = make_single_informative(100, 5);
    RewardConfig rc;
    rc.lambda = 0.01;

    SECTION("constant majority policy") {
        auto net = init_network(ds.p, 2, 8, 1);
        for (std::size_t i = net.off_wp(); i < net.size(); ++i) net.w[i] = 0.0;
        int majority = std::count(ds.y.begin(), ds.y.end(), 1) * 2 > ds.n ? 1 : 0;
        net.w[net.off_bp() + ds.p + majority] = 50.0;
        auto rep = evaluate(net, ds, rc);
        double freq = static_cast<double>(std::count(ds.y.begin(), ds.y.end(), majority)) / ds.n;
        CHECK(rep.accuracy == Catch::Approx(freq));
        CHECK(rep.mean_cost == 0.0);
        CHECK(rep.mean_features == 0.0);
        CHECK(rep.objective == Catch::Approx(rep.accuracy - rc.lambda * rep.mean_cost));
    }
    SECTION("confusion counts reconstruct accuracy") {
        auto net = init_network(ds.p, 2, 16, 9);
        auto rep = evaluate(net, ds, rc);
        long trace = rep.confusion[0] + rep.confusion[3];
        CHECK(rep.accuracy == Catch::Approx(static_cast<double>(trace) / ds.n));
        long total = 0;
        for (long c : rep.confusion) total += c;
        CHECK(total == ds.n);
        CHECK(rep.mean_cost <= 0.1 + 0.5 + 0.9 + 1e-12);
    }
    SECTION("deterministic") {
        auto net = init_network(ds.p, 2, 16, 9);
        auto a = evaluate(net, ds, rc);
        auto b = evaluate(net, ds, rc);
        CHECK(a.accuracy == b.accuracy);
        CHECK(a.mean_cost == b.mean_cost);
        CHECK(a.auc == b.auc);
    }
    SECTION("dimension mismatch rejected") {
        auto net = init_network(ds.p + 1, 2, 8, 1);
        CHECK_THROWS_AS(evaluate(net, ds, rc), ValidationError);
    }
}
