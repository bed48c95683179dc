#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "conedp/pareto.hpp"
#include "conedp/sampling.hpp"

using namespace conedp;

namespace {

// Independent oracle: componentwise domination scan, no cone machinery.
std::vector<Vec> orthant_front_oracle(const std::vector<Vec>& pts) {
    std::vector<Vec> out;
    for (size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (size_t j = 0; j < pts.size() && !dominated; ++j) {
            if (i == j) continue;
            bool le = true, lt = false;
            for (Eigen::Index k = 0; k < pts[i].size(); ++k) {
                if (pts[j][k] > pts[i][k]) le = false;
                if (pts[j][k] < pts[i][k]) lt = true;
            }
            if (le && lt) dominated = true;
        }
        if (!dominated) out.push_back(pts[i]);
    }
    std::sort(out.begin(), out.end(), lex_less);
    return out;
}

bool same_points(const std::vector<Vec>& a, const std::vector<Vec>& b, double tau = 0.0) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if ((a[i] - b[i]).norm() > tau) return false;
    return true;
}

}  // namespace

TEST_CASE("minimal elements on desk examples") {
    OrderingCone P = orthant_cone(2);
    PointCloud s(2, {make_vec({0, 1}), make_vec({1, 0}), make_vec({1, 1}), make_vec({0.5, 0.5})});
    ParetoFront f = minimal_elements(s, P);
    REQUIRE(f.size() == 3);
    CHECK(same_points(f.points, {make_vec({0, 1}), make_vec({0.5, 0.5}), make_vec({1, 0})}));

    OrderingCone wide(2, {make_vec({1, -1}), make_vec({1, 1})});
    PointCloud s2(2, {make_vec({0, 0}), make_vec({1, 0})});
    ParetoFront f2 = minimal_elements(s2, wide);
    REQUIRE(f2.size() == 1);
    CHECK((f2.points[0] - make_vec({0, 0})).norm() == 0.0);

    CHECK_THROWS_AS(minimal_elements(PointCloud(2, {}), P), contract_error);
}

TEST_CASE("random 3D clouds match the quadratic-scan oracle") {
    std::mt19937_64 rng(42);
    OrderingCone P = orthant_cone(3);
    for (int rep = 0; rep < 5; ++rep) {
        PointCloud cloud = sampling::uniform_cloud(rng, 3, 200);
        ParetoFront fast = minimal_elements(cloud, P);
        ParetoFront ref = minimal_elements(cloud, P, tol::mem, /*force_reference=*/true);
        CHECK(same_points(fast.points, ref.points));
        CHECK(same_points(fast.points, orthant_front_oracle(cloud.points())));
    }
}

TEST_CASE("front is an antichain and idempotent") {
    std::mt19937_64 rng(7);
    OrderingCone P(2, {make_vec({2, 1}), make_vec({1, 2})});
    for (int rep = 0; rep < 20; ++rep) {
        PointCloud cloud = sampling::uniform_cloud(rng, 2, 60, -1.0, 1.0);
        ParetoFront f = minimal_elements(cloud, P);
        CHECK(is_antichain(f.points, P));
        ParetoFront ff = minimal_elements(f.as_cloud(2), P);
        CHECK(same_points(f.points, ff.points));
    }
}

TEST_CASE("external stability holds for every finite cloud") {
    std::mt19937_64 rng(11);
    OrderingCone P1 = orthant_cone(2);
    OrderingCone P2(2, {make_vec({2, 1}), make_vec({1, 2})});
    for (int rep = 0; rep < 200; ++rep) {
        PointCloud cloud = sampling::uniform_cloud(rng, 2, 50, -2.0, 2.0);
        for (const auto* P : {&P1, &P2}) {
            ParetoFront f = minimal_elements(cloud, *P);
            CHECK(is_externally_stable(cloud, f, *P));
        }
    }
    // 500-point cloud under the slanted cone, as a larger spot check.
    PointCloud big = sampling::uniform_cloud(rng, 2, 500, -3.0, 3.0);
    CHECK(is_externally_stable(big, minimal_elements(big, P2), P2));
}

TEST_CASE("cone monotonicity: larger cones retain fewer points") {
    std::mt19937_64 rng(13);
    OrderingCone small(2, {make_vec({2, 1}), make_vec({1, 2})});
    OrderingCone big = orthant_cone(2);  // contains `small`
    for (const auto& g : small.generators()) REQUIRE(big.contains(g));
    for (int rep = 0; rep < 50; ++rep) {
        PointCloud cloud = sampling::uniform_cloud(rng, 2, 40);
        ParetoFront f_small = minimal_elements(cloud, small);
        ParetoFront f_big = minimal_elements(cloud, big);
        for (const auto& y : f_big.points) {
            bool found = false;
            for (const auto& z : f_small.points)
                if ((y - z).norm() == 0.0) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("translation and scaling equivariance") {
    std::mt19937_64 rng(17);
    OrderingCone P = orthant_cone(2);
    for (int rep = 0; rep < 30; ++rep) {
        PointCloud cloud = sampling::uniform_cloud(rng, 2, 40);
        Vec c = sampling::gaussian(rng, 2, 3.0);
        ParetoFront f = minimal_elements(cloud, P);
        ParetoFront ft = minimal_elements(cloud.translated(c), P);
        std::vector<Vec> shifted;
        for (const auto& y : f.points) shifted.push_back(y + c);
        std::sort(shifted.begin(), shifted.end(), lex_less);
        CHECK(same_points(ft.points, shifted));

        double lambda = 0.5 + rep * 0.1;
        ParetoFront fs = minimal_elements(cloud.scaled(lambda), P);
        std::vector<Vec> scaled;
        for (const auto& y : f.points) scaled.push_back(lambda * y);
        std::sort(scaled.begin(), scaled.end(), lex_less);
        CHECK(same_points(fs.points, scaled));
    }
}

TEST_CASE("hausdorff distance basics and metric axioms") {
    PointCloud a(2, {make_vec({1, 2}), make_vec({3, 4})});
    CHECK(hausdorff(a, a) == 0.0);
    CHECK(hausdorff(PointCloud(2, {make_vec({0, 0})}), PointCloud(2, {make_vec({3, 4})})) == Catch::Approx(5.0));
    // Enumerated by hand over all pairs: max(d((1,0),b), d((0,1),a)) = sqrt 2.
    CHECK(hausdorff(PointCloud(2, {make_vec({0, 0}), make_vec({1, 0})}), PointCloud(2, {make_vec({0, 1})})) ==
          Catch::Approx(std::sqrt(2.0)));

    std::mt19937_64 rng(19);
    for (int rep = 0; rep < 100; ++rep) {
        PointCloud x = sampling::uniform_cloud(rng, 2, 8);
        PointCloud y = sampling::uniform_cloud(rng, 2, 5);
        PointCloud z = sampling::uniform_cloud(rng, 2, 6);
        double dxy = hausdorff(x, y), dyx = hausdorff(y, x);
        CHECK(dxy == dyx);
        CHECK(hausdorff(x, z) <= dxy + hausdorff(y, z) + 1e-12);
    }
    CHECK_THROWS_AS(hausdorff(a, PointCloud(2, {})), contract_error);
}

TEST_CASE("sandwich lemma on constructed and random instances") {
    OrderingCone P = orthant_cone(2);
    auto r1 = check_sandwich_lemma(PointCloud(2, {make_vec({0, 0})}),
                                   PointCloud(2, {make_vec({0, 0}), make_vec({1, 1})}), P);
    CHECK(r1.applicable);
    CHECK(r1.holds());
    auto r2 = check_sandwich_lemma(PointCloud(2, {make_vec({0, 0})}),
                                   PointCloud(2, {make_vec({0, 0}), make_vec({-1, -1})}), P);
    CHECK_FALSE(r2.applicable);

    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 200; ++rep) {
        PointCloud k1 = sampling::uniform_cloud(rng, 2, 20, -1.0, 1.0);
        std::vector<Vec> pts = k1.points();
        std::uniform_int_distribution<size_t> pick(0, pts.size() - 1);
        for (int j = 0; j < 15; ++j) pts.push_back(k1[pick(rng)] + sampling::cone_point(rng, P, 0.5));
        PointCloud k2(2, std::move(pts));
        auto rep_rand = check_sandwich_lemma(k1, k2, P);
        CHECK(rep_rand.applicable);
        CHECK(rep_rand.holds());
    }
}

TEST_CASE("S + P probes coincide with E(S,P) + P") {
    std::mt19937_64 rng(29);
    OrderingCone P(2, {make_vec({2, 1}), make_vec({1, 2})});
    for (int rep = 0; rep < 50; ++rep) {
        PointCloud s = sampling::uniform_cloud(rng, 2, 30, -1.0, 1.0);
        ParetoFront f = minimal_elements(s, P);
        for (int probe = 0; probe < 40; ++probe) {
            Vec z = sampling::gaussian(rng, 2, 1.5);
            auto in_sum = [&](const std::vector<Vec>& base) {
                for (const auto& b : base)
                    if (P.distance(z - b) < tol::mem) return true;
                return false;
            };
            CHECK(in_sum(s.points()) == in_sum(f.points));
        }
    }
}

TEST_CASE("lipschitz certificate: trivial, shifted, and randomized instances") {
    ConePair pair(OrderingCone(2, {make_vec({2, 1}), make_vec({1, 2})}), orthant_cone(2));
    std::mt19937_64 rng(31);

    PointCloud k = sampling::kcp_cloud(rng, pair, 6, 20);
    auto same = lipschitz_certificate(k, k, pair);
    CHECK(same.h_fronts == 0.0);
    CHECK(same.satisfied);

    Vec c = make_vec({0.3, -0.2});
    auto shifted = lipschitz_certificate(k, k.translated(c), pair);
    CHECK(shifted.h_inputs == Catch::Approx(c.norm()));
    CHECK(shifted.h_fronts == Catch::Approx(c.norm()));
    CHECK(shifted.satisfied);

    double max_ratio = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        PointCloud k1 = sampling::kcp_cloud(rng, pair, 8, 42);
        PointCloud k2 = sampling::kcp_cloud(rng, pair, 8, 42);
        auto r = lipschitz_certificate(k1, k2, pair);
        CHECK(r.satisfied);
        if (r.h_inputs > 1e-12) max_ratio = std::max(max_ratio, r.h_fronts / r.h_inputs);
    }
    CHECK(max_ratio <= lipschitz_constant(pair));
    // Clouds outside K(C,P) are rejected: (1, 0.1) is C-dominated by the
    // origin but not P-dominated, so the two fronts differ.
    PointCloud bad(2, {make_vec({0, 0}), make_vec({1.0, 0.1})});
    REQUIRE(minimal_elements(bad, pair.inner()).size() == 2);
    REQUIRE(minimal_elements(bad, pair.outer()).size() == 1);
    CHECK_THROWS_AS(lipschitz_certificate(bad, bad, pair), contract_error);
}

TEST_CASE("epsilon archive keeps everything at eps=0 and thins otherwise") {
    OrderingCone P = orthant_cone(2);
    std::vector<Vec> pts;
    for (int k = 0; k <= 100; ++k) pts.push_back(make_vec({k / 100.0, 1.0 - k / 100.0}));
    ParetoFront f = minimal_elements(PointCloud(2, pts), P);
    REQUIRE(f.size() == 101);
    CHECK(epsilon_archive(f, P, 0.0).size() == 101);
    ParetoFront thin = epsilon_archive(f, P, 0.05);
    CHECK(thin.size() < 50);
    CHECK(is_antichain(thin.points, P));
}
