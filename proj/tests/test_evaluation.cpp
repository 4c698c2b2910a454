#include "doctest.h"

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "oracles.hpp"
#include "warpforge/error.hpp"
#include "warpforge/evaluation.hpp"
#include "warpforge/stitcher.hpp"

using namespace warpforge;

TEST_SUITE("evaluation") {

TEST_CASE("identical images give the infinite sentinel") {
    Image a = testutil::random_image(12, 12, 3, 1);
    auto r = mpsnr(a, a, Mask::ones(12, 12));
    CHECK(r.mrmse == 0.0);
    CHECK(std::isinf(r.mpsnr));
    CHECK(r.overlap_pixels == 144);
    CHECK(format_db(r.mpsnr) == "inf");
}

TEST_CASE("constant 0.1 difference is 20 dB") {
    Image a(20, 30, 3, 0.6), b(20, 30, 3, 0.5);
    auto r = mpsnr(a, b, Mask::ones(20, 30));
    CHECK(std::abs(r.mrmse - 0.1) < 1e-12);
    CHECK(std::abs(r.mpsnr - 20.0) < 1e-6);
}

TEST_CASE("strip-overlap psnr matches the loop oracle") {
    Image a = testutil::random_image(25, 40, 3, 2), b = testutil::random_image(25, 40, 3, 3);
    Mask m(25, 40);
    for (int y = 0; y < 25; ++y)
        for (int x = 12; x < 29; ++x) m.at(y, x) = 1.0;
    auto r = mpsnr(a, b, m);
    CHECK(std::abs(r.mpsnr - oracle::psnr(a, b, m)) < 1e-10);
    CHECK(r.overlap_pixels == 25 * 17);
    CHECK(mpsnr(b, a, m).mpsnr == r.mpsnr);
}

TEST_CASE("empty overlap is undefined") {
    Image a(8, 8, 1);
    CHECK_THROWS_AS(mpsnr(a, a, Mask(8, 8)), UndefinedMetric);
    CHECK_THROWS_AS(mssim(a, a, Mask(8, 8)), UndefinedMetric);
    Mask thin(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 5; x < 11; ++x) thin.at(y, x) = 1.0;  // 6 px wide: no full 7x7 window
    CHECK_THROWS_AS(mssim(testutil::random_image(20, 20, 1, 1), testutil::random_image(20, 20, 1, 2), thin), UndefinedMetric);
}

TEST_CASE("mpsnr is mask-monotone on constructed cases") {
    Image a(10, 10, 1, 0.5), b = a;
    for (int y = 0; y < 10; ++y)
        for (int x = 5; x < 10; ++x) b.at(y, x) = 0.8;
    for (int y = 0; y < 10; ++y) b.at(y, 0) = 0.52;
    Mask full = Mask::ones(10, 10), left(10, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 5; ++x) left.at(y, x) = 1.0;
    CHECK(mpsnr(a, b, left).mpsnr >= mpsnr(a, b, full).mpsnr);
}

TEST_CASE("mssim of an image with itself is exactly one") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        Image a = testutil::random_image(30, 26, s % 2 ? 3 : 1, s);
        CHECK(mssim(a, a, Mask::ones(30, 26)) == 1.0);
    }
    Image flat(16, 16, 1, 0.25);
    CHECK(mssim(flat, flat, Mask::ones(16, 16)) == 1.0);
}

TEST_CASE("mssim of a negative is low") {
    Image a = procedural_texture(64, 64, 3, 1);
    Image neg = a;
    for (double& v : neg.data) v = 1.0 - v;
    const double v = mssim(a, neg, Mask::ones(64, 64));
    CHECK(v < 0.5);
    CHECK(std::abs(v - oracle::ssim(a, neg)) < 1e-8);
}

TEST_CASE("full-overlap mssim equals the unmasked reference") {
    for (std::uint64_t s = 0; s < 4; ++s) {
        Image a = procedural_texture(48, 56, s, 3);
        Image b = a;
        std::mt19937_64 rng(s);
        for (double& v : b.data) v = std::clamp(v + uniform(rng, -0.1, 0.1), 0.0, 1.0);
        const double m = mssim(a, b, Mask::ones(48, 56));
        CHECK(std::abs(m - oracle::ssim(a, b)) < 1e-8);
        CHECK(m == mssim(b, a, Mask::ones(48, 56)));
        CHECK(m == mssim(a, b, Mask::ones(48, 56), Exec::Serial));
    }
}

TEST_CASE("masked mssim averages only fully covered windows") {
    Image a = testutil::random_image(30, 30, 1, 7), b = testutil::random_image(30, 30, 1, 8);
    Mask m(30, 30);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 15; ++x) m.at(y, x) = 1.0;
    // crop to the covered columns: the same windows are valid there
    Image ca(30, 15, 1), cb(30, 15, 1);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 15; ++x) {
            ca.at(y, x) = a.at(y, x);
            cb.at(y, x) = b.at(y, x);
        }
    CHECK(std::abs(mssim(a, b, m) - oracle::ssim(ca, cb)) < 1e-12);
}

TEST_CASE("metric report formats") {
    Image a(20, 20, 1, 0.6), b(20, 20, 1, 0.5);
    Mask m = Mask::ones(20, 20);
    m.at(0, 0) = 0.9985;  // below the binarization threshold
    auto r = evaluate_pair(a, b, m);
    CHECK(r.overlap_pixels == 399);
    CHECK(std::abs(r.mpsnr - 20.0) < 1e-6);
    CHECK(MetricReport::csv_header() == "mpsnr,mssim,mrmse,overlap_pixels");
    const std::string row = r.csv_row();
    CHECK(std::count(row.begin(), row.end(), ',') == 3);
    CHECK(r.to_text().find("mpsnr=") != std::string::npos);
    CHECK(r.to_text().find("overlap_pixels=399") != std::string::npos);
}

}  // TEST_SUITE
