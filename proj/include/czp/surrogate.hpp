// surrogate.hpp -- trainable response model over antenna raster images.
//
// Pipeline per sample: the three raster channels plus two linearly spaced
// coordinate channels are average-pooled, each pooled pixel is mapped to C
// features by a small shared MLP, a filter tokenizer turns the pixel field
// into L tokens (A = softmax over pixels of X W, T = A^T X), and a fully
// connected trunk over the flattened tokens feeds either a raw 69-point
// output head or a constant-zeros-poles head evaluated on the canonical
// grid. Differentiation runs on the tape in tape.hpp end to end.

#pragma once

#include <string>
#include <vector>

#include "czp/czp_model.hpp"
#include "czp/fit.hpp"
#include "czp/geometry.hpp"
#include "czp/oracle.hpp"
#include "czp/tape.hpp"

namespace czp {

enum class HeadKind { raw, czp };

struct SurrogateConfig {
    HeadKind head = HeadKind::czp;
    int czp_degree = 20;              // K, czp head only
    int pool = 10;                    // average-pool patch size in pixels
    std::vector<int> feat_hidden = {32};
    int feat_out = 16;                // C
    int tokens = 16;                  // L
    std::vector<int> trunk = {128, 64};
    LossKind loss = LossKind::mse;
    double shrink_a = 10.0;
    double shrink_c = 0.2;
    double eps_pole = kDefaultEpsPole;
    double raster_res = 10.0;         // px/mm of the learning raster

    int input_channels() const { return 5; }
};

struct TensorSpec {
    std::string name;
    int rows = 0, cols = 0;
    int offset = 0;

    int size() const { return rows * cols; }
};

struct ParamLayout {
    std::vector<TensorSpec> tensors;
    int total = 0;
    std::uint64_t hash = 0;
};

ParamLayout build_layout(const SurrogateConfig& cfg);

struct SurrogateParams {
    ParamLayout layout;
    Eigen::VectorXd flat;
};

SurrogateParams init_params(const SurrogateConfig& cfg, std::uint64_t seed);

// Inputs -------------------------------------------------------------------

// Full-resolution 5 x (H*W) channel stack: raster channels then coordinates.
Eigen::MatrixXd build_input(const AntennaImage& image);
// Average-pool each channel with cfg.pool and lay out pixels as rows:
// (Hp*Wp) x 5.
Eigen::MatrixXd pool_input(const Eigen::MatrixXd& channels, int h, int w, int pool);
Eigen::MatrixXd pooled_input_for(const DesignSpace& space, const DesignVector& design,
                                 const SurrogateConfig& cfg);

struct Tokens {
    Eigen::MatrixXd tokens;     // L x C
    Eigen::MatrixXd attention;  // (Hp*Wp) x L, columns sum to 1
};

Tokens featurize(const SurrogateParams& params, const SurrogateConfig& cfg,
                 const Eigen::MatrixXd& pooled_input);
Tokens featurize(const SurrogateParams& params, const SurrogateConfig& cfg,
                 const AntennaImage& image);

// Forward / gradients -------------------------------------------------------

FrequencyResponse forward(const SurrogateParams& params, const SurrogateConfig& cfg,
                          const Eigen::MatrixXd& pooled_input);
// czp head only: the model the head emits for a given input
CZPModel forward_czp_model(const SurrogateParams& params, const SurrogateConfig& cfg,
                           const Eigen::MatrixXd& pooled_input);

struct Sample {
    Eigen::MatrixXd pooled_input;
    Eigen::VectorXd target;  // natural-log response on the canonical grid
};

// Fold a (tokens - mean)/std standardization, estimated on probe samples,
// into the first trunk layer. Called by train() after init; a pure
// reparameterization of existing weights.
void calibrate_input_normalization(SurrogateParams& params, const SurrogateConfig& cfg,
                                   const std::vector<Sample>& probe);

double loss_and_grad(const SurrogateParams& params, const SurrogateConfig& cfg,
                     const std::vector<Sample>& batch, Eigen::VectorXd& grad);

// Training -------------------------------------------------------------------

struct SplitSpec {
    double train = 0.81, val = 0.09, test = 0.10;
    std::uint64_t seed = 0;
};

struct TrainOptions {
    SplitSpec split;
    int epochs = 200;
    int batch_size = 100;
    double learning_rate = 0.02;
    double momentum = 0.9;
    int plateau_epochs = 20;
    double lr_factor = 0.5;
    double grad_clip = 10.0;
    std::uint64_t init_seed = 1;
};

struct TrainReport {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;    // per epoch
    double final_test_loss = 0.0;
    double baseline_test_loss = 0.0;  // predict-the-training-mean baseline
    int best_epoch = 0;
    double best_val_loss = 0.0;
    int train_count = 0, val_count = 0, test_count = 0;
    double wall_seconds = 0.0;  // reported in the manifest, not the artifact
};

struct TrainOutput {
    SurrogateParams params;  // best-validation checkpoint
    TrainReport report;
    std::vector<int> test_indices;  // into the dataset, for later evaluation
};

TrainOutput train(const std::vector<DatasetRecord>& dataset, const SurrogateConfig& cfg,
                  const TrainOptions& options, const DesignSpace& space = five_patch_space());

struct EvalResult {
    double mean_loss = 0.0;
    std::vector<double> per_sample;
};

EvalResult evaluate(const SurrogateParams& params, const SurrogateConfig& cfg,
                    const std::vector<Sample>& samples);

std::vector<Sample> make_samples(const std::vector<DatasetRecord>& records,
                                 const SurrogateConfig& cfg,
                                 const DesignSpace& space = five_patch_space());

// Serialization ----------------------------------------------------------------

void save_params(const std::string& path, const SurrogateParams& params);
SurrogateParams load_params(const std::string& path, const SurrogateConfig& cfg);

std::string train_report_to_json(const TrainReport& report, const SurrogateConfig& cfg,
                                 const TrainOptions& options);
std::string loss_curves_to_csv(const TrainReport& report);

}  // namespace czp
