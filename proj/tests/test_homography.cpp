#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "warpforge/error.hpp"
#include "warpforge/homography.hpp"
#include "warpforge/synthetic.hpp"

using namespace warpforge;

namespace {

double rel_fro(const Homography& a, const Homography& b) {
    return (a.matrix() - b.matrix()).norm() / b.matrix().norm();
}

Point project(const Eigen::Matrix3d& h, Point p) {
    Eigen::Vector3d q = h * Eigen::Vector3d(p.x, p.y, 1);
    return {q(0) / q(2), q(1) / q(2)};
}

FourPtOffsets random_offsets(std::mt19937_64& rng, int w, int h, double frac) {
    FourPtOffsets o;
    o.frame_w = w;
    o.frame_h = h;
    for (auto& p : o.offsets) p = {uniform(rng, -frac, frac) * w, uniform(rng, -frac, frac) * h};
    return o;
}

Homography random_h(std::mt19937_64& rng) {
    Eigen::Matrix3d m;
    m << 1 + uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), uniform(rng, -20, 20), uniform(rng, -0.1, 0.1),
        1 + uniform(rng, -0.1, 0.1), uniform(rng, -20, 20), uniform(rng, -1e-4, 1e-4), uniform(rng, -1e-4, 1e-4), 1;
    return Homography(m);
}

}  // namespace

TEST_SUITE("homography") {

TEST_CASE("dlt on fixed corners is the identity") {
    std::vector<Correspondence> c;
    for (Point p : frame_corners(100, 80)) c.push_back({p, p});
    CHECK((solve_dlt(c).matrix() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
}

TEST_CASE("dlt on translated unit square") {
    std::vector<Correspondence> c;
    for (Point p : frame_corners(2, 2)) c.push_back({p, {p.x + 5, p.y}});
    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    t(0, 2) = 5;
    CHECK((solve_dlt(c).matrix() - t).norm() < 1e-12);
}

TEST_CASE("dlt recovers a random homography from 8 points") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        Homography h = random_h(rng);
        std::vector<Correspondence> c;
        for (int i = 0; i < 8; ++i) {
            Point p{uniform(rng, 0, 400), uniform(rng, 0, 300)};
            c.push_back({p, project(h.matrix(), p)});
        }
        CHECK(rel_fro(solve_dlt(c), h) < 1e-8);
    }
}

TEST_CASE("dlt rejects collinear points") {
    std::vector<Correspondence> c;
    for (int i = 0; i < 5; ++i) c.push_back({{double(i), double(i)}, {double(i), double(2 * i)}});
    CHECK_THROWS_AS(solve_dlt(c), SingularSystem);
    CHECK_THROWS(solve_dlt(std::vector<Correspondence>(3)));
}

TEST_CASE("ransac on exact data keeps every point and equals dlt") {
    std::mt19937_64 rng(2);
    Homography h = random_h(rng);
    std::vector<Correspondence> c;
    for (int i = 0; i < 30; ++i) {
        Point p{uniform(rng, 0, 400), uniform(rng, 0, 300)};
        c.push_back({p, project(h.matrix(), p)});
    }
    auto r = ransac_fit(c, 1.0, 200, 5);
    CHECK(r.inliers.size() == c.size());
    CHECK((r.model.matrix() - solve_dlt(c).matrix()).norm() == 0.0);

    std::vector<Correspondence> four(c.begin(), c.begin() + 4);
    CHECK((ransac_fit(four, 1.0, 50, 1).model.matrix() - solve_dlt(four).matrix()).norm() == 0.0);
}

TEST_CASE("ransac rejects outliers") {
    std::mt19937_64 rng(3);
    Homography h = random_h(rng);
    std::vector<Correspondence> c;
    for (int i = 0; i < 20; ++i) {
        Point p{uniform(rng, 0, 400), uniform(rng, 0, 300)};
        c.push_back({p, project(h.matrix(), p)});
    }
    for (int i = 0; i < 10; ++i)
        c.push_back({{uniform(rng, 0, 400), uniform(rng, 0, 300)}, {uniform(rng, 0, 400), uniform(rng, 0, 300)}});
    auto r = ransac_fit(c, 2.0, 1000, 9);
    CHECK(rel_fro(r.model, h) < 1e-3);
    for (std::size_t i = 0; i < 20; ++i) CHECK(std::find(r.inliers.begin(), r.inliers.end(), i) != r.inliers.end());
    auto again = ransac_fit(c, 2.0, 1000, 9);
    CHECK(again.inliers == r.inliers);
    CHECK(again.model.values() == r.model.values());
}

TEST_CASE("ransac without a usable sample raises no-model") {
    std::vector<Correspondence> c;
    for (int i = 0; i < 12; ++i) c.push_back({{double(i), 2.0 * i}, {double(i), 3.0 * i}});
    CHECK_THROWS_AS(ransac_fit(c, 1.0, 50, 1), NoModel);
    CHECK_THROWS_AS(ransac_fit(std::span(c).first(3), 1.0, 50, 1), NoModel);
}

TEST_CASE("offsets to homography") {
    FourPtOffsets zero{{}, 120, 90};
    CHECK(offsets_to_homography(zero).matrix() == Eigen::Matrix3d::Identity());
    FourPtOffsets t{{Point{3, -2}, Point{3, -2}, Point{3, -2}, Point{3, -2}}, 120, 90};
    Eigen::Matrix3d expect = Eigen::Matrix3d::Identity();
    expect(0, 2) = 3;
    expect(1, 2) = -2;
    CHECK((offsets_to_homography(t).matrix() - expect).norm() < 1e-12);
}

TEST_CASE("offsets round trip") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto o = random_offsets(rng, 640, 480, 0.1);
        auto back = homography_to_offsets(offsets_to_homography(o), 640, 480);
        for (int k = 0; k < 4; ++k) {
            CHECK(std::abs(back.offsets[k].x - o.offsets[k].x) < 1e-9);
            CHECK(std::abs(back.offsets[k].y - o.offsets[k].y) < 1e-9);
        }
    }
}

TEST_CASE("degenerate quad is rejected") {
    FourPtOffsets o{{}, 100, 100};
    o.offsets[1] = {-99, 0};  // TR collapses onto TL
    o.offsets[3] = {-99, 0};  // BR collapses onto BL
    CHECK_THROWS(offsets_to_homography(o));
}

TEST_CASE("middle plane of zero and translation offsets") {
    auto z = decompose_middle_plane(FourPtOffsets{{}, 64, 48});
    CHECK(z.ref.matrix() == Eigen::Matrix3d::Identity());
    CHECK(z.tgt.matrix() == Eigen::Matrix3d::Identity());

    FourPtOffsets t{{Point{4, 0}, Point{4, 0}, Point{4, 0}, Point{4, 0}}, 64, 48};
    auto m = decompose_middle_plane(t);
    CHECK(m.tgt(0, 2) == doctest::Approx(2).epsilon(1e-12));
    CHECK(m.ref(0, 2) == doctest::Approx(-2).epsilon(1e-12));
    CHECK(std::abs(m.tgt(1, 2)) < 1e-12);
    CHECK(std::abs(m.ref(1, 2)) < 1e-12);
}

TEST_CASE("middle plane identity and halving") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        auto o = random_offsets(rng, 800, 566, 0.15);
        const Homography H = offsets_to_homography(o);
        auto m = decompose_middle_plane(o);
        CHECK(rel_fro(H * m.ref, m.tgt) < 1e-9);
        CHECK(m.ref(2, 2) == 1.0);
        CHECK(m.tgt(2, 2) == 1.0);
        auto half = homography_to_offsets(m.tgt, 800, 566);
        for (int k = 0; k < 4; ++k) {
            CHECK(std::abs(half.offsets[k].x - 0.5 * o.offsets[k].x) < 1e-9);
            CHECK(std::abs(half.offsets[k].y - 0.5 * o.offsets[k].y) < 1e-9);
        }
    }
}

TEST_CASE("apply homography") {
    std::vector<Point> pts{{3, 4}, {-2, 7.5}};
    auto same = apply_homography(Homography::identity(), pts);
    CHECK(same[0].x == 3);
    CHECK(same[1].y == 7.5);
    auto t = apply_homography(Homography::translation(5, -1), std::vector<Point>{{0, 0}});
    CHECK(t[0].x == 5);
    CHECK(t[0].y == -1);

    std::mt19937_64 rng(7);
    Homography h = random_h(rng);
    std::vector<Point> cloud;
    for (int i = 0; i < 100; ++i) cloud.push_back({uniform(rng, 0, 500), uniform(rng, 0, 500)});
    auto back = apply_homography(h.inverse(), apply_homography(h, cloud));
    double worst = 0;
    for (int i = 0; i < 100; ++i) worst = std::max({worst, std::abs(back[i].x - cloud[i].x), std::abs(back[i].y - cloud[i].y)});
    CHECK(worst < 1e-9);

    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(2, 0) = 1;  // line x = -1 maps to infinity
    auto call = [&] { apply_homography(Homography(m), std::vector<Point>{{0, 0}, {-1, 3}}); };
    CHECK_THROWS_WITH_AS(call(), doctest::Contains("1"), ContractViolation);
}

TEST_CASE("homography to flow") {
    auto z = homography_to_flow(Homography::identity(), 5, 6);
    for (double v : z.dx) CHECK(v == 0.0);
    auto t = homography_to_flow(Homography::translation(3, 0), 5, 6);
    for (std::size_t i = 0; i < t.dx.size(); ++i) {
        CHECK(t.dx[i] == doctest::Approx(-3.0).epsilon(1e-14));
        CHECK(std::abs(t.dy[i]) < 1e-14);
    }
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    CHECK_THROWS(homography_to_flow(Homography(s), 4, 4));
}

TEST_CASE("sampling flow with origin") {
    Homography h = Homography::translation(1.5, -2);
    auto f = sampling_flow(h, 3, 4, {10, 20});
    for (std::size_t i = 0; i < f.dx.size(); ++i) {
        CHECK(f.dx[i] == doctest::Approx(1.5));
        CHECK(f.dy[i] == doctest::Approx(-2));
    }
    auto a = sampling_flow(h, 30, 40, {}, Exec::Serial);
    auto b = sampling_flow(h, 30, 40, {}, Exec::Parallel);
    CHECK(testutil::same_bits(a, b));
}

}  // TEST_SUITE
