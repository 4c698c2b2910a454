// Writes the encode_points golden vectors from a plain scalar evaluation of
// the encoder definition: a seeded affine map of [x/W, y/H] (no descriptors)
// followed by tanh.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <vector>

#include "golden_input.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: golden_encode OUT\n");
        return 1;
    }
    std::FILE* out = std::fopen(argv[1], "w");
    if (!out) return 1;
    const int in = 2;
    const int c = golden::channels;
    std::mt19937_64 rng(golden::seed);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53); };
    const double gain = std::sqrt(3.0 / in);
    std::vector<double> w(c * in), b(c);
    for (double& v : w) v = draw(-gain, gain);
    for (double& v : b) v = draw(-0.5, 0.5);
    for (const auto& p : golden::points()) {
        const double z0 = p[0] / golden::width, z1 = p[1] / golden::height;
        for (int k = 0; k < c; ++k)
            std::fprintf(out, "%s%.17g", k ? " " : "", std::tanh(b[k] + w[k * in] * z0 + w[k * in + 1] * z1));
        std::fprintf(out, "\n");
    }
    std::fclose(out);
    return 0;
}
