#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cfc/env.hpp"
#include "cfc/synthetic.hpp"

using namespace cfc;

TEST_CASE("reset gives the empty state") {
    auto ds = make_single_informative(10, 1);
    auto s = reset(ds, 3);
    CHECK(s.accumulated_cost == 0.0);
    CHECK(s.t == 0);
    CHECK(s.acquired.empty());
    auto enc = encode(s);
    REQUIRE(enc.size() == 6);
    for (double v : enc) CHECK(v == 0.0);
}

TEST_CASE("encode concatenates indicator and masked values") {
    Dataset ds;
    ds.n = 1;
    ds.p = 3;
    ds.class_count = 2;
    ds.costs = {1, 1, 1};
    ds.x = {0.5, -0.5, 2.0};
    ds.mask = {1, 1, 1};
    ds.y = {0};
    RewardConfig rc;

    auto s = reset(ds, 0);
    auto sr = step(s, Action::acquire(1), ds, rc);
    auto enc = encode(sr.next);
    CHECK(enc == std::vector<double>{0, 1, 0, 0, -0.5, 0});

    SECTION("indicator distinguishes an acquired zero value") {
        ds.x[2] = 0.0;
        auto with_zero = step(reset(ds, 0), Action::acquire(2), ds, rc);
        auto e = encode(with_zero.next);
        auto e0 = encode(reset(ds, 0));
        CHECK(e != e0);
        // only the indicator half differs
        CHECK(std::vector<double>(e.begin() + 3, e.end()) ==
              std::vector<double>(e0.begin() + 3, e0.end()));
    }
}

TEST_CASE("legal_actions") {
    auto ds = make_single_informative(5, 2);
    auto s = reset(ds, 0);
    SECTION("fresh state with all features present") {
        auto legal = legal_actions(s, ds, ds.p);
        CHECK(legal == std::vector<std::uint8_t>{1, 1, 1, 1, 1});
    }
    SECTION("missing feature is never legal") {
        ds.mask[0 * ds.p + 2] = 0;
        auto legal = legal_actions(s, ds, ds.p);
        CHECK(legal[2] == 0);
    }
    SECTION("horizon cap leaves only classify actions") {
        auto legal = legal_actions(s, ds, 0);
        CHECK(legal == std::vector<std::uint8_t>{0, 0, 0, 1, 1});
    }
    SECTION("acquired features become illegal") {
        RewardConfig rc;
        auto sr = step(s, Action::acquire(1), ds, rc);
        auto legal = legal_actions(sr.next, ds, ds.p);
        CHECK(legal[1] == 0);
        CHECK(legal[0] == 1);
    }
}

TEST_CASE("step rewards") {
    auto ds = make_single_informative(5, 3);
    ds.costs = {0.4, 0.5, 0.6};
    RewardConfig rc;
    rc.lambda = 0.01;

    SECTION("acquisition pays -lambda*cost") {
        auto sr = step(reset(ds, 0), Action::acquire(0), ds, rc);
        CHECK(sr.reward == Catch::Approx(-0.004));
        CHECK(sr.next.accumulated_cost == Catch::Approx(0.4));
        CHECK_FALSE(sr.done);
        CHECK(sr.next.t == 1);
    }
    SECTION("balanced classify gives +-1") {
        int y = ds.y[0];
        auto good = step(reset(ds, 0), Action::classify(y), ds, rc);
        CHECK(good.reward == 1.0);
        CHECK(good.done);
        auto bad = step(reset(ds, 0), Action::classify(1 - y), ds, rc);
        CHECK(bad.reward == -1.0);
    }
    SECTION("majority-class weighting by delta") {
        rc.minority_class = 1;
        rc.delta = 0.2;
        int row = -1;
        for (int i = 0; i < ds.n; ++i)
            if (ds.y[i] == 0) row = i; // majority sample
        REQUIRE(row >= 0);
        auto wrong = step(reset(ds, row), Action::classify(1), ds, rc);
        CHECK(wrong.reward == Catch::Approx(-0.2));
        auto right = step(reset(ds, row), Action::classify(0), ds, rc);
        CHECK(right.reward == Catch::Approx(0.2));
    }
    SECTION("illegal actions are contract violations") {
        RewardConfig rc2;
        auto sr = step(reset(ds, 0), Action::acquire(0), ds, rc2);
        CHECK_THROWS_AS(step(sr.next, Action::acquire(0), ds, rc2), std::logic_error);
        CHECK_THROWS_AS(step(sr.next, Action::classify(5), ds, rc2), std::logic_error);
    }
    SECTION("step is referentially transparent") {
        auto a = step(reset(ds, 1), Action::acquire(2), ds, rc);
        auto b = step(reset(ds, 1), Action::acquire(2), ds, rc);
        CHECK(a.reward == b.reward);
        CHECK(encode(a.next) == encode(b.next));
    }
}

TEST_CASE("trajectory invariants") {
    auto ds = make_gaussian_binary(20, 4, 2, 1.0, 11);
    RewardConfig rc;
    rc.lambda = 0.03;
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        int row = static_cast<int>(rng() % ds.n);
        auto s = reset(ds, row);
        double acq_reward = 0.0;
        int steps = std::uniform_int_distribution<int>(0, ds.p)(rng);
        for (int k = 0; k < steps; ++k) {
            auto legal = legal_actions(s, ds, ds.p);
            std::vector<int> feats;
            for (int j = 0; j < ds.p; ++j)
                if (legal[j]) feats.push_back(j);
            if (feats.empty()) break;
            int f = feats[rng() % feats.size()];
            auto sr = step(s, Action::acquire(f), ds, rc);
            acq_reward += sr.reward;
            s = sr.next;
        }
        CHECK(acq_reward == Catch::Approx(-rc.lambda * s.accumulated_cost).margin(1e-12));
        // encode has exactly t nonzero entries in the indicator half
        auto enc = encode(s);
        int nonzero = 0;
        for (int j = 0; j < ds.p; ++j)
            if (enc[j] != 0.0) ++nonzero;
        CHECK(nonzero == s.t);
        // terminal reward is one of {+1,-1,+delta,-delta}
        RewardConfig weighted = rc;
        weighted.minority_class = 1;
        weighted.delta = 0.25;
        auto done = step(s, Action::classify(static_cast<int>(rng() % 2)), ds, weighted);
        double r = std::abs(done.reward);
        CHECK((r == 1.0 || r == 0.25));
    }
}

TEST_CASE("imbalance_ratio") {
    Dataset ds;
    ds.p = 1;
    ds.class_count = 2;
    ds.costs = {1};
    ds.feature_names = {"f"};
    ds.n = 120;
    ds.x.assign(120, 0.0);
    ds.mask.assign(120, 1);
    for (int i = 0; i < 120; ++i) ds.y.push_back(i < 20 ? 1 : 0);
    CHECK(imbalance_ratio(ds, 1) == Catch::Approx(0.2));

    Dataset bal = ds;
    bal.y.assign(120, 0);
    for (int i = 0; i < 60; ++i) bal.y[i] = 1;
    CHECK(imbalance_ratio(bal, 1) == 1.0);

    SECTION("after make_unbalanced the ratio tracks the target") {
        auto sub = make_unbalanced(bal, 1, 0.1, 3);
        CHECK(imbalance_ratio(sub, 1) == Catch::Approx(0.1 / 0.9).margin(0.02));
    }
}
