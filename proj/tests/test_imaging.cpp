#include "doctest.h"

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "warpforge/error.hpp"
#include "warpforge/homography.hpp"
#include "warpforge/image_io.hpp"
#include "warpforge/imaging.hpp"

using namespace warpforge;

TEST_SUITE("imaging") {

TEST_CASE("bilinear sample on a constant image") {
    Image img(2, 2, 1, 0.5);
    auto s = bilinear_sample(img, 0.5, 0.5);
    CHECK(s.in_bounds);
    CHECK(s.values[0] == 0.5);
}

TEST_CASE("bilinear sample interpolates along x") {
    Image img(2, 2, 1, 0.0);
    img.at(0, 1) = 1.0;
    CHECK(bilinear_sample(img, 0.25, 0.0).values[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("bilinear sample out of bounds") {
    Image img(3, 3, 1, 0.7);
    auto s = bilinear_sample(img, -1.0, 0.0);
    CHECK_FALSE(s.in_bounds);
    CHECK(s.values[0] == 0.0);
    CHECK_FALSE(bilinear_sample(img, 2.0000001, 1.0).in_bounds);
    CHECK(bilinear_sample(img, 2.0, 2.0).in_bounds);
}

TEST_CASE("bilinear sample is exact on integers and linear along axes") {
    Image img = testutil::random_image(9, 11, 3, 4);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) CHECK(bilinear_sample(img, x, y).values[c] == img.at(y, x, c));
    for (double t : {0.1, 0.37, 0.9}) {
        const double v = bilinear_sample(img, 3 + t, 5).values[1];
        CHECK(v == doctest::Approx((1 - t) * img.at(5, 3, 1) + t * img.at(5, 4, 1)).epsilon(1e-14));
        const double w = bilinear_sample(img, 6, 2 + t).values[2];
        CHECK(w == doctest::Approx((1 - t) * img.at(2, 6, 2) + t * img.at(3, 6, 2)).epsilon(1e-14));
    }
}

TEST_CASE("bilinear gradient matches the left/top cell slope") {
    Image img = testutil::random_image(6, 6, 1, 5);
    auto g = bilinear_sample_grad(img, 2.0, 3.0);
    CHECK(g.ddx[0] == doctest::Approx(img.at(3, 2) - img.at(3, 1)));
    CHECK(g.ddy[0] == doctest::Approx(img.at(3, 2) - img.at(2, 2)));
    auto h = bilinear_sample_grad(img, 2.5, 3.25);
    const double eps = 1e-6;
    CHECK(h.ddx[0] == doctest::Approx((oracle::bilinear(img, 2.5 + eps, 3.25, 0) - oracle::bilinear(img, 2.5 - eps, 3.25, 0)) / (2 * eps)).epsilon(1e-6));
}

TEST_CASE("zero flow warp is the identity") {
    Image img = testutil::random_image(7, 5, 3, 1);
    auto w = warp_with_flow(img, FlowField(7, 5));
    CHECK(w.image.data == img.data);
    for (double m : w.mask.data) CHECK(m == 1.0);
}

TEST_CASE("uniform flow shifts content and blanks the last column") {
    Image img = testutil::random_image(4, 4, 1, 2);
    FlowField f(4, 4);
    std::fill(f.dx.begin(), f.dx.end(), 1.0);
    auto w = warp_with_flow(img, f);
    for (int y = 0; y < 4; ++y) {
        CHECK(w.mask.at(y, 3) == 0.0);
        CHECK(w.image.at(y, 3) == 0.0);
        for (int x = 0; x < 3; ++x) {
            CHECK(w.mask.at(y, x) == 1.0);
            CHECK(w.image.at(y, x) == img.at(y, x + 1));
        }
    }
}

TEST_CASE("warp dimension mismatch is a contract violation") {
    CHECK_THROWS_AS(warp_with_flow(Image(4, 4, 1), FlowField(4, 5)), ContractViolation);
}

TEST_CASE("homography flow warp agrees with pointwise sampling") {
    Image img = testutil::random_image(40, 50, 3, 3);
    Eigen::Matrix3d m;
    m << 1.02, 0.03, -1.5, -0.02, 0.98, 2.0, 1e-4, -2e-4, 1.0;
    Homography h(m);
    auto w = warp_with_flow(img, homography_to_flow(h, 40, 50));
    const Homography inv = h.inverse();
    double worst = 0;
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 50; ++x) {
            Eigen::Vector3d q = inv.matrix() * Eigen::Vector3d(x, y, 1);
            const double sx = q(0) / q(2), sy = q(1) / q(2);
            const bool in = oracle::inside(img, sx, sy);
            CHECK(w.mask.at(y, x) == (in ? 1.0 : 0.0));
            for (int c = 0; c < 3; ++c)
                worst = std::max(worst, std::abs(w.image.at(y, x, c) - (in ? oracle::bilinear(img, sx, sy, c) : 0.0)));
        }
    CHECK(worst < 1e-6);
}

TEST_CASE("remap places the canvas origin") {
    Image img = testutil::random_image(6, 6, 1, 9);
    FlowField f(3, 3);
    auto w = remap(img, f, 2.0, 1.0);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) CHECK(w.image.at(y, x) == img.at(y + 1, x + 2));
}

TEST_CASE("overlap mask") {
    CHECK(overlap_mask(Mask::ones(3, 3), Mask::ones(3, 3)).data == Mask::ones(3, 3).data);
    CHECK(overlap_mask(Mask::ones(3, 3), Mask(3, 3, 0.0)).count_nonzero() == 0);
    Mask left(20, 30), right(20, 30);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 30; ++x) {
            left.at(y, x) = x < 18 ? 1.0 : 0.0;
            right.at(y, x) = x >= 11 ? 1.0 : 0.0;
        }
    auto m = overlap_mask(left, right);
    std::size_t brute = 0;
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 30; ++x) brute += (x < 18 && x >= 11) ? 1 : 0;
    CHECK(m.count_nonzero() == brute);
    CHECK(brute == 7 * 20);
    CHECK_THROWS_AS(overlap_mask(Mask::ones(2, 2), Mask::ones(2, 3)), ContractViolation);
}

TEST_CASE("average fuse rules") {
    Image a = testutil::random_image(5, 5, 3, 11);
    CHECK(average_fuse(a, Mask::ones(5, 5), a, Mask::ones(5, 5)).data == a.data);
    auto half = average_fuse(Image(5, 5, 1, 1.0), Mask::ones(5, 5), Image(5, 5, 1, 0.0), Mask::ones(5, 5));
    for (double v : half.data) CHECK(v == 0.5);

    // shifted checkerboards: per-pixel rule against a brute-force reference
    Image c1(16, 24, 1), c2(16, 24, 1);
    Mask m1(16, 24), m2(16, 24);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 24; ++x) {
            c1.at(y, x) = ((x / 4 + y / 4) % 2) ? 1.0 : 0.0;
            c2.at(y, x) = (((x + 2) / 4 + y / 4) % 2) ? 1.0 : 0.0;
            m1.at(y, x) = x < 16 ? 1.0 : 0.0;
            m2.at(y, x) = x >= 8 ? 1.0 : 0.0;
        }
    auto f = average_fuse(c1, m1, c2, m2);
    int ghost = 0;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 24; ++x) {
            double expect = 0;
            if (m1.at(y, x) > 0 && m2.at(y, x) > 0)
                expect = 0.5 * (c1.at(y, x) + c2.at(y, x));
            else if (m1.at(y, x) > 0)
                expect = c1.at(y, x);
            else if (m2.at(y, x) > 0)
                expect = c2.at(y, x);
            CHECK(f.at(y, x) == expect);
            ghost += f.at(y, x) == 0.5;
        }
    CHECK(ghost > 0);
    CHECK(average_fuse(c2, m2, c1, m1).data == f.data);
}

TEST_CASE("threshold mask") {
    Mask m(1, 3);
    m.data = {0.9989, 0.999, 1.0};
    auto t = threshold_mask(m);
    CHECK(t.data == std::vector<double>{0.0, 1.0, 1.0});
}

TEST_CASE("serial and parallel warps are bit-identical") {
    Image img = testutil::random_image(64, 48, 3, 12);
    FlowField f(64, 48);
    std::mt19937_64 rng(3);
    for (auto& v : f.dx) v = uniform(rng, -3, 3);
    for (auto& v : f.dy) v = uniform(rng, -3, 3);
    auto a = warp_with_flow(img, f, Exec::Serial);
    auto b = warp_with_flow(img, f, Exec::Parallel);
    CHECK(a.image.data == b.image.data);
    CHECK(a.mask.data == b.mask.data);
}

TEST_CASE("image io round trips") {
    testutil::TempDir dir("io");
    Image img = testutil::random_image(5, 7, 3, 13);
    for (double& v : img.data) v = std::round(v * 255) / 255;
    io::write_png(dir.path / "a.png", img);
    CHECK(io::read_image(dir.path / "a.png").data == img.data);
    io::write_pnm(dir.path / "a.ppm", img);
    CHECK(io::read_image(dir.path / "a.ppm").data == img.data);
    Image gray = to_gray(img);
    for (double& v : gray.data) v = std::round(v * 255) / 255;
    io::write_pnm(dir.path / "g.pgm", gray);
    CHECK(io::read_image(dir.path / "g.pgm").channels == 1);
    CHECK_THROWS_AS(io::read_image(dir.path / "missing.png"), InputError);
}

TEST_CASE("WFF1 flow layout") {
    testutil::TempDir dir("wff");
    FlowField f(2, 3);
    for (int i = 0; i < 6; ++i) {
        f.dx[i] = 0.5 * i;
        f.dy[i] = -0.25 * i;
    }
    io::write_flow(dir.path / "f.wff", f);
    std::ifstream in(dir.path / "f.wff", std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    REQUIRE(bytes.size() == 4 + 8 + 12 * 4);
    CHECK(std::string(bytes.data(), 4) == "WFF1");
    std::uint32_t h, w;
    std::memcpy(&h, bytes.data() + 4, 4);
    std::memcpy(&w, bytes.data() + 8, 4);
    CHECK(h == 2);
    CHECK(w == 3);
    float dy5;
    std::memcpy(&dy5, bytes.data() + 12 + 6 * 4 + 5 * 4, 4);
    CHECK(dy5 == -1.25f);
    auto g = io::read_flow(dir.path / "f.wff");
    CHECK(testutil::same_bits(f, g));
}

}  // TEST_SUITE
