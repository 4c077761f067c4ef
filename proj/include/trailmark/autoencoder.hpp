#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trailmark/preprocess.hpp"

namespace trailmark::ae {

// Architecture constants are fixed; channels and the optimizer knobs are
// what the grid search explores.
struct AEHyper {
    int conv_window = 3;
    double dropout_p = 0.1;
    int pool_window = 2;
    int c1 = 8;
    int c2 = 8;
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 8;
    bool relu = false;  // off: the layer list carries no nonlinearity
    std::uint64_t seed = 0;
};

struct AETensors {
    std::vector<double> enc1_w, enc1_b;  // [c1][4][3], [c1]
    std::vector<double> enc2_w, enc2_b;  // [c2][c1][3], [c2]
    std::vector<double> dec1_w, dec1_b;  // [c1][c2][3], [c1]
    std::vector<double> dec2_w, dec2_b;  // [4][c1][3], [4]
};

struct AEParams {
    AEHyper hyper;
    AETensors t;
};

using AEGradients = AETensors;

struct AdamState {
    AETensors m;  // first moments
    AETensors v;  // second moments
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct MovementVector {
    std::string trial_id;
    std::vector<double> values;
};

enum class Mode { train, eval };

struct ForwardResult {
    std::vector<double> latent;  // c2 * ceil(m/2)
    std::vector<double> recon;   // 4 * m
};

inline std::size_t pooled_length(std::size_t m) { return (m + 1) / 2; }

inline std::size_t latent_length(const AEHyper& h, std::size_t m) {
    return static_cast<std::size_t>(h.c2) * pooled_length(m);
}

// --- primitive layers (exposed for direct testing) ---

// 1-D cross-correlation, window 3, zero-padded "same" length.
void conv3_same(std::span<const double> in, std::size_t c_in, std::size_t m,
                std::span<const double> w, std::span<const double> b, std::size_t c_out,
                std::span<double> out);

// Non-overlapping max pooling, window 2; returns argmax offsets for backprop.
void maxpool2(std::span<const double> in, std::size_t channels, std::size_t m,
              std::span<double> out, std::vector<std::size_t>& argmax);

// Nearest-neighbor repetition, factor 2.
void upsample2(std::span<const double> in, std::size_t channels, std::size_t mp,
               std::span<double> out);

// --- model operations ---

AEParams ae_init(const AEHyper& hyper);

// Fresh zero moments shaped like `params`.
AdamState adam_init(const AEParams& params);

// Encoder/decoder pass for one 4 x m sample. Train mode applies seeded
// dropout; eval mode is deterministic. Throws ShapeMismatch.
ForwardResult ae_forward(const AEParams& params, std::span<const double> x, std::size_t m,
                         Mode mode, std::uint64_t seed = 0);

// Mean absolute elementwise difference. Throws ShapeMismatch.
double ae_loss(std::span<const double> recon, std::span<const double> x);

// Gradient of the batch-mean MAE w.r.t. all parameters. In train mode the
// dropout masks are derived from `seed` and shared between the forward and
// backward passes. Optionally reports the batch loss.
AEGradients ae_gradient(const AEParams& params, const prep::SampleTensor& batch, Mode mode,
                        std::uint64_t seed, double* batch_loss = nullptr);

// Bias-corrected Adam update, in place.
void adam_step(AEParams& params, const AEGradients& grads, AdamState& state, double lr);

struct TrainResult {
    AEParams params;
    std::vector<double> loss_curve;  // eval-mode MAE per epoch
};

// Seeded mini-batch training; fully deterministic given hyper.seed.
TrainResult train_autoencoder(const prep::SampleTensor& data, const AEHyper& hyper);

struct GridSearchResult {
    AEHyper best;
    std::size_t best_index = 0;
    std::vector<double> holdout_mae;  // per candidate
};

// Trains every candidate on a seeded split and scores eval MAE on the
// holdout. Candidate i trains with seed ^ i. Ties break toward smaller
// c1+c2, then lower learning rate, then grid order.
GridSearchResult grid_search_ae(const prep::SampleTensor& data, const std::vector<AEHyper>& grid,
                                double holdout_fraction, std::uint64_t seed,
                                unsigned threads = 1);

// Eval-mode encoder output per sample, order preserved.
std::vector<MovementVector> encode(const AEParams& params, const prep::SampleTensor& data);

std::string save_checkpoint(const AEParams& params);
AEParams load_checkpoint(const std::string& text);

}  // namespace trailmark::ae
