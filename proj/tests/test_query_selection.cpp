#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "testbeds.hpp"

using namespace mmrl;
using mmrl::testing::make_dataset;
using mmrl::testing::unimodal;
using mmrl::testing::entropy2;

namespace {

PosteriorSamples random_samples(std::size_t n, std::size_t modes, std::size_t dim, Rng& rng) {
    PosteriorSamples s;
    const Prior prior{modes, dim, std::nullopt};
    for (std::size_t i = 0; i < n; ++i) s.samples.push_back(sample_prior(prior, rng));
    return s;
}

void expect_valid_query(const RankingQuery& q, const Dataset& ds, std::size_t k) {
    EXPECT_EQ(q.size(), k);
    EXPECT_NO_THROW(q.validate(ds));
}

}  // namespace

TEST(IgLoss, IdenticalFeaturesGiveNLogN) {
    const auto ds = make_dataset({{0.5, -1.0}, {0.5, -1.0}, {0.5, -1.0}, {2.0, 2.0}});
    Rng rng(1);
    const auto s = random_samples(10, 2, 2, rng);
    EXPECT_NEAR(ig_loss(ds, {{0, 1, 2}}, s, Rng(3)), 10.0 * std::log(10.0), 1e-9);
}

TEST(IgLoss, SingleSampleIsZero) {
    const auto ds = gen_gaussian_dataset(8, 3, 2);
    Rng rng(2);
    for (int i = 0; i < 10; ++i) {
        const auto s = random_samples(1, 2, 3, rng);
        EXPECT_NEAR(ig_loss(ds, {{0, 3, 5, 7}}, s, rng.split("x", i)), 0.0, 1e-12);
    }
}

TEST(IgLoss, NonNegative) {
    const auto ds = gen_gaussian_dataset(10, 2, 3);
    Rng rng(3);
    for (int i = 0; i < 30; ++i) {
        const auto s = random_samples(15, 1 + rng.index(3), 2, rng);
        const RankingQuery q{random_subset(10, 2 + rng.index(4), rng)};
        EXPECT_GE(ig_loss(ds, q, s, rng.split("draws", i)), -1e-12);
    }
}

TEST(IgLoss, DeterministicPerQuery) {
    const auto ds = gen_gaussian_dataset(10, 2, 4);
    Rng rng(4);
    const auto s = random_samples(20, 2, 2, rng);
    // The item order in the query does not change the draws or the value.
    EXPECT_DOUBLE_EQ(ig_loss(ds, {{1, 4, 7}}, s, Rng(9)), ig_loss(ds, {{7, 1, 4}}, s, Rng(9)));
    EXPECT_NE(ig_loss(ds, {{1, 4, 7}}, s, Rng(9)), ig_loss(ds, {{1, 4, 7}}, s, Rng(10)));
}

TEST(IgLoss, InvariantToSampleOrder) {
    const auto ds = gen_gaussian_dataset(10, 2, 5);
    Rng rng(5);
    const auto s = random_samples(20, 2, 2, rng);
    const std::vector<std::size_t> items{0, 2, 5, 9};

    // Carrying each sample's paired response with it leaves L unchanged.
    const auto responses = draw_paired_responses(ds, items, s.samples, Rng(6));
    const double base = ig_loss_given(QueryLikelihoodTable(ds, items, s.samples), responses);
    std::vector<std::size_t> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<MixtureParams> ps;
    std::vector<std::vector<std::size_t>> pr;
    for (auto i : perm) {
        ps.push_back(s.samples[i]);
        pr.push_back(responses[i]);
    }
    EXPECT_NEAR(ig_loss_given(QueryLikelihoodTable(ds, items, ps), pr), base, 1e-9);

    // After a canonical sort of the samples the draws line up again.
    auto key = [](const MixtureParams& p) { return p.weight_vectors(); };
    auto sorted = s;
    std::sort(sorted.samples.begin(), sorted.samples.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
    PosteriorSamples shuffled;
    shuffled.samples = ps;
    std::sort(shuffled.samples.begin(), shuffled.samples.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
    EXPECT_DOUBLE_EQ(ig_loss(ds, {items}, sorted, Rng(6)), ig_loss(ds, {items}, shuffled, Rng(6)));
}

// Monte-Carlo mutual information log N - L/N against the exact value for
// K = 2 on a 20-point empirical posterior.
TEST(IgLoss, MatchesExactMutualInformation) {
    const auto ds = make_dataset({{1.0}, {-0.5}});
    Rng rng(7);
    PosteriorSamples s;
    for (int i = 0; i < 20; ++i) s.samples.push_back(unimodal({2.0 * rng.normal()}));
    double pbar = 0.0, cond = 0.0;
    for (const auto& p : s.samples) {
        const double pa = response_likelihood(p, ds, {{0, 1}}, {{0, 1}});
        pbar += pa / 20.0;
        cond += entropy2(pa) / 20.0;
    }
    const double exact = entropy2(pbar) - cond;
    double mc = 0.0;
    for (int draw = 0; draw < 200; ++draw)
        mc += (std::log(20.0) - ig_loss(ds, {{0, 1}}, s, Rng(100 + draw)) / 20.0) / 200.0;
    EXPECT_NEAR(mc, exact, 0.05);
}

TEST(Anneal, Temperature) {
    const AnnealSchedule s;
    EXPECT_DOUBLE_EQ(s.temperature(1), 10.0);
    EXPECT_NEAR(s.temperature(3), 8.1, 1e-12);
    EXPECT_EQ(s.n_chains, 10u);
    EXPECT_EQ(s.iters, 30u);
    AnnealSchedule bad;
    bad.cooling = 1.0;
    EXPECT_THROW(bad.validate(), InvalidInput);
    bad = {};
    bad.start_temp = 0.0;
    EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(Anneal, PoolOfExactlyKItems) {
    const auto ds = gen_gaussian_dataset(4, 2, 8);
    Rng rng(8);
    const auto s = random_samples(10, 2, 2, rng);
    EXPECT_EQ(select_query_ig(ds, s, 4, {}, Rng(1)).items, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(select_query_vr(ds, s, 4, {}, Rng(1)).items, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_THROW(select_query_ig(ds, s, 5, {}, Rng(1)), InvalidInput);
    EXPECT_THROW(select_query_vr(ds, s, 5, {}, Rng(1)), InvalidInput);
}

TEST(Anneal, BestSoFarIsMonotone) {
    const auto ds = gen_gaussian_dataset(40, 2, 9);
    Rng rng(9);
    const auto s = random_samples(20, 2, 2, rng);
    const auto r = anneal_ig(ds, s, 4, {}, Rng(2));
    ASSERT_EQ(r.best_trace.size(), 10u);
    double best = r.best_trace.front().front();
    for (const auto& chain : r.best_trace) {
        ASSERT_EQ(chain.size(), 31u);
        for (std::size_t i = 1; i < chain.size(); ++i) EXPECT_LE(chain[i], chain[i - 1]);
        best = std::min(best, chain.back());
    }
    EXPECT_DOUBLE_EQ(r.loss, best);
    EXPECT_LE(r.evaluations, 10u * 31u);
    expect_valid_query(r.query, ds, 4);
}

TEST(Anneal, FindsTopDecileOnTwelveItems) {
    const auto ds = mmrl::testing::twelve_item_dataset();
    int good = 0;
    for (std::uint64_t run = 0; run < 50; ++run) {
        const auto s = mmrl::testing::bimodal_samples(30, 1000 + run);
        const Rng rng(run);
        const auto chosen = anneal_ig(ds, s, 2, {}, rng);
        // Score every pair with the same paired-draw stream the annealer used.
        std::vector<double> all;
        for (std::size_t a = 0; a < 12; ++a)
            for (std::size_t b = a + 1; b < 12; ++b) all.push_back(ig_loss(ds, {{a, b}}, s, rng.split("ig-draws")));
        ASSERT_EQ(all.size(), 66u);
        EXPECT_DOUBLE_EQ(chosen.loss, ig_loss(ds, chosen.query, s, rng.split("ig-draws")));
        std::sort(all.begin(), all.end());
        good += chosen.loss <= all[6];  // within the best 10% (7 of 66)
    }
    EXPECT_GE(good, 45);
}

TEST(Anneal, Deterministic) {
    const auto ds = gen_gaussian_dataset(30, 2, 10);
    Rng rng(10);
    const auto s = random_samples(20, 2, 2, rng);
    EXPECT_EQ(select_query_ig(ds, s, 3, {}, Rng(4)), select_query_ig(ds, s, 3, {}, Rng(4)));
}

TEST(RandomSelection, SingleSubsetAndNoRepeats) {
    const auto ds = gen_gaussian_dataset(3, 1, 11);
    QuerySet used;
    Rng rng(11);
    EXPECT_EQ(select_query_random(ds, 3, used, rng).items, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_THROW(select_query_random(ds, 3, used, rng), InvalidState);

    const auto big = gen_gaussian_dataset(6, 1, 12);
    QuerySet seen;
    std::set<std::vector<std::size_t>> distinct;
    for (int i = 0; i < 15; ++i) {
        const auto q = select_query_random(big, 2, seen, rng);
        expect_valid_query(q, big, 2);
        EXPECT_TRUE(distinct.insert(q.items).second);
    }
    EXPECT_THROW(select_query_random(big, 2, seen, rng), InvalidState);
}

TEST(RandomSelection, UniformOverSubsets) {
    const auto ds = gen_gaussian_dataset(6, 1, 13);
    std::map<std::vector<std::size_t>, double> counts;
    Rng rng(13);
    for (int i = 0; i < 5000; ++i) {
        QuerySet fresh;
        counts[select_query_random(ds, 2, fresh, rng).items] += 1;
    }
    ASSERT_EQ(counts.size(), 15u);
    std::vector<double> c, p;
    for (const auto& [q, n] : counts) {
        c.push_back(n);
        p.push_back(1.0 / 15.0);
    }
    EXPECT_GT(mmrl::testing::chi_square_p(c, p), 0.01);
}

TEST(VolumeRemoval, ClosedForms) {
    const auto ds = make_dataset({{0.5, -1.0}, {0.5, -1.0}, {0.5, -1.0}, {2.0, 2.0}});
    Rng rng(14);
    const auto s = random_samples(10, 2, 2, rng);
    EXPECT_NEAR(vr_objective(ds, {{0, 1, 2}}, s, Rng(1)), 10.0 * (1.0 - 1.0 / 6.0), 1e-9);

    const auto one = random_samples(1, 2, 2, rng);
    const auto items = std::vector<std::size_t>{0, 3};
    const auto x = draw_paired_responses(ds, items, one.samples, Rng(2)).front();
    const RankingResponse resp{{items[x[0]], items[x[1]]}};
    EXPECT_NEAR(vr_objective(ds, {items}, one, Rng(2)), 1.0 - response_likelihood(one.samples[0], ds, {items}, resp),
                1e-12);
}

TEST(VolumeRemoval, DiffersFromInformationGain) {
    const auto ds = mmrl::testing::twelve_item_dataset();
    int differ = 0;
    for (std::uint64_t round = 0; round < 10; ++round) {
        const auto s = mmrl::testing::bimodal_samples(30, 500 + round);
        const auto ig = select_query_ig(ds, s, 2, {}, Rng(round));
        const auto vr = select_query_vr(ds, s, 2, {}, Rng(round));
        expect_valid_query(vr, ds, 2);
        differ += ig.items != vr.items;
    }
    EXPECT_GE(differ, 1);
}

TEST(Identifiability, Cases) {
    EXPECT_EQ(check_identifiability(2, 6), Identifiability::identifiable);
    EXPECT_EQ(check_identifiability(1, 2), Identifiability::identifiable);
    EXPECT_EQ(check_identifiability(5, 6), Identifiability::not_guaranteed);
    EXPECT_EQ(check_identifiability(6, 8), Identifiability::identifiable);
    EXPECT_EQ(check_identifiability(7, 8), Identifiability::not_guaranteed);
    EXPECT_THROW(check_identifiability(0, 6), InvalidInput);
    EXPECT_THROW(check_identifiability(1, 1), InvalidInput);
}

TEST(Strategies, ReturnValidQueries) {
    const auto ds = gen_gaussian_dataset(25, 3, 15);
    Rng rng(15);
    const auto s = random_samples(20, 2, 3, rng);
    QuerySet used;
    for (auto strategy : {Strategy::ig, Strategy::random, Strategy::vr})
        for (std::size_t k : {2u, 4u, 6u}) {
            const auto q = select_query(strategy, ds, s, k, {}, used, Rng(k));
            expect_valid_query(q, ds, k);
        }
}
