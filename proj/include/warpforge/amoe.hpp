#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "warpforge/feature_map.hpp"

namespace warpforge {

/// Linear gated router: global-average-pool F_s, F_g and F_s (+) F_g per
/// channel into a 4c summary, then one linear layer to 3 logits.
struct RouterParams {
    int channels = 0;
    Eigen::MatrixXd weight;  // 3 x 4c
    Eigen::Vector3d bias = Eigen::Vector3d::Zero();

    static RouterParams zeros(int channels);
    static RouterParams random(int channels, std::uint64_t seed, double scale = 0.5);
};

/// Three residual experts, each x -> residual(x) + tanh(W x + b) applied per
/// grid cell. The heterogeneous expert reads the 2c-channel concatenation and
/// uses the mean of its two halves as residual.
struct ExpertParams {
    int channels = 0;
    Eigen::MatrixXd w_s, w_g, w_h;  // c x c, c x c, c x 2c
    Eigen::VectorXd b_s, b_g, b_h;

    /// Zero transforms: every expert returns its residual unchanged.
    static ExpertParams identity(int channels);
    static ExpertParams random(int channels, std::uint64_t seed, double scale = 0.5);
};

struct FusionWeights {
    double s = 1.0 / 3.0;
    double g = 1.0 / 3.0;
    double h = 1.0 / 3.0;

    std::array<double, 3> as_array() const { return {s, g, h}; }
};

Eigen::Vector3d router_logits(const RouterParams& router, const FeatureMap& f_s, const FeatureMap& f_g);
FusionWeights softmax_weights(const Eigen::Vector3d& logits);
FusionWeights route(const RouterParams& router, const FeatureMap& f_s, const FeatureMap& f_g);

/// Channel concatenation.
FeatureMap concat(const FeatureMap& a, const FeatureMap& b);

struct ExpertOutputs {
    FeatureMap s, g, h;
};
ExpertOutputs apply_experts(const ExpertParams& experts, const FeatureMap& f_s, const FeatureMap& f_g);

/// w_s E_s(f_s) + w_g E_g(f_g) + w_h E_h(f_s (+) f_g).
FeatureMap fuse(const ExpertParams& experts, const FusionWeights& w, const FeatureMap& f_s, const FeatureMap& f_g);

/// Variance penalty plus lambda_e times negative entropy, with 0 log 0 = 0.
double reg_loss(const FusionWeights& w, double lambda_e);

/// d reg_loss / d w (the entropy part is -inf at w_r = 0).
Eigen::Vector3d reg_loss_grad(const FusionWeights& w, double lambda_e);

/// Gradients of J = <upstream, fuse(route(.))> + reg_scale * reg_loss(route(.)).
struct FusionGrads {
    RouterParams router;
    ExpertParams experts;
    FeatureMap f_s;
    FeatureMap f_g;
    Eigen::Vector3d logits = Eigen::Vector3d::Zero();
};

FusionGrads fusion_grads(const ExpertParams& experts, const RouterParams& router, const FeatureMap& f_s,
                         const FeatureMap& f_g, const FeatureMap& upstream, double reg_scale = 0.0,
                         double lambda_e = 0.1);

/// Scalar J matching fusion_grads, for finite-difference checks.
double fusion_objective(const ExpertParams& experts, const RouterParams& router, const FeatureMap& f_s,
                        const FeatureMap& f_g, const FeatureMap& upstream, double reg_scale = 0.0,
                        double lambda_e = 0.1);

struct PerturbConfig {
    double p_drop = 0.25;
    double p_noise = 0.25;
    std::optional<double> sigma;  // unset: 0.1 x RMS of the map
    std::uint64_t seed = 0;

    void validate() const;
};

enum class PerturbEvent { Keep, Drop, Noise };

struct PerturbResult {
    std::array<FeatureMap, 3> maps;  // s, g, h
    std::array<PerturbEvent, 3> events{};
};

/// Latent-space modality robustifier. Per branch a single uniform draw u
/// picks drop (u < p_drop), noise (u < p_drop + p_noise) or keep, so both
/// marginals equal their configured probabilities.
class ModalityRobustifier {
public:
    explicit ModalityRobustifier(PerturbConfig cfg);

    PerturbResult apply(const std::array<FeatureMap, 3>& branches);

private:
    PerturbConfig cfg_;
    std::mt19937_64 rng_;
};

/// One-shot perturbation seeded from cfg.seed.
PerturbResult perturb(const std::array<FeatureMap, 3>& branches, const PerturbConfig& cfg);

/// "AMOE", u32 version (1), u32 channels, f64 parameters: router weight
/// (row-major 3 x 4c), router bias, then per expert s, g, h its weight
/// (row-major) and bias.
void write_amoe_blob(const std::filesystem::path& path, const RouterParams& router, const ExpertParams& experts);
std::pair<RouterParams, ExpertParams> read_amoe_blob(const std::filesystem::path& path);

}  // namespace warpforge
