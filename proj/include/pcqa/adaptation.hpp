#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pcqa/core.hpp"
#include "pcqa/pairgen.hpp"

namespace pcqa {

// Frozen base map plus a trainable rank-r update:
//   forward(x) = W0 x + (alpha / r) B (A x)
struct LoraLinear {
    Eigen::MatrixXd base;  // W0, d_out x d_in, never touched by training
    Eigen::MatrixXd down;  // A, r x d_in
    Eigen::MatrixXd up;    // B, d_out x r
    double alpha = 1.0;

    std::size_t rank() const noexcept { return static_cast<std::size_t>(down.rows()); }
    std::size_t in_dim() const noexcept { return static_cast<std::size_t>(base.cols()); }
    std::size_t out_dim() const noexcept { return static_cast<std::size_t>(base.rows()); }
    double scale() const noexcept { return alpha / static_cast<double>(rank()); }

    // The learned update (alpha / r) B A.
    Eigen::MatrixXd delta() const { return scale() * up * down; }
};

// W0 is drawn from N(0, 1/d_in); see the overload to supply a base.
LoraLinear lora_init(std::size_t d_out, std::size_t d_in, std::size_t r, double alpha, std::uint64_t seed);
// A ~ N(0, 1) / sqrt(d_in), B = 0, so the adapted layer starts equal to the base.
LoraLinear lora_init(Eigen::MatrixXd base, std::size_t r, double alpha, std::uint64_t seed);

Eigen::VectorXd lora_forward(const LoraLinear& layer, const Eigen::VectorXd& x);

// Singular values of B A in descending order.
Eigen::VectorXd update_singular_values(const LoraLinear& layer);

struct ToyExample {
    Eigen::VectorXd descriptor;
    QualityLevel level = QualityLevel::similar;
};

struct ToyNetShape {
    std::size_t descriptor_dim = 9;
    std::size_t feature_dim = 8;
    std::size_t hidden_dim = 8;
    std::size_t rank = 4;
    double alpha = 8.0;  // alpha / r = 2
};

// Desk-scale stand-in for the adapted model: a fixed random feature projection,
// two LoRA layers in the query/value positions, and a softmax head over the levels.
//   f = P x, h1 = tanh(Q(f)), h2 = tanh(V(h1)), p = softmax(H h2 + b)
class ToyComparatorNet {
public:
    ToyComparatorNet(const ToyNetShape& shape, std::uint64_t seed);

    const ToyNetShape& shape() const noexcept { return shape_; }
    const LoraLinear& query() const noexcept { return query_; }
    const LoraLinear& value() const noexcept { return value_; }
    LoraLinear& query() noexcept { return query_; }
    LoraLinear& value() noexcept { return value_; }

    LevelDistribution predict(const Eigen::VectorXd& descriptor) const;

    // Trainable parameters flattened in the order A_q, B_q, A_v, B_v, H, b.
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& params);
    std::size_t parameter_count() const noexcept;

    // Mean cross-entropy over the selected examples and its gradient w.r.t. parameters().
    double loss_and_gradient(std::span<const ToyExample> pool, std::span<const std::size_t> batch,
                             Eigen::VectorXd& gradient) const;
    double mean_loss(std::span<const ToyExample> pool) const;

private:
    ToyNetShape shape_;
    Eigen::MatrixXd projection_;
    LoraLinear query_;
    LoraLinear value_;
    Eigen::MatrixXd head_;
    Eigen::VectorXd head_bias_;
};

struct LossEntry {
    std::size_t step = 0;
    PromptKind pool = PromptKind::texture;
    double loss = 0.0;
};

struct LossTrace {
    std::vector<LossEntry> entries;

    // CSV with header "step,loss,pool".
    std::string to_csv() const;
};

struct ToyTrainOptions {
    std::size_t steps = 200;
    double learning_rate = 0.5;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    // Called before each update with the step and the batch drawn for it.
    std::function<void(std::size_t step, PromptKind pool, std::span<const std::size_t> batch)> on_step;
};

// Plain gradient descent on the alternating texture/geometry schedule.
// Throws DivergenceError when a batch loss is not finite.
LossTrace toy_train(ToyComparatorNet& net, std::span<const ToyExample> texture_pool,
                    std::span<const ToyExample> geometry_pool, const ToyTrainOptions& options);

// Synthetic pair descriptors [f_a, f_b, f_b - f_a] whose stimulus features are a latent
// quality along a pool-specific direction; labels come from the standardized difference.
std::vector<ToyExample> synthetic_toy_pool(PromptKind kind, std::size_t count, std::size_t stimulus_dim,
                                           std::uint64_t seed);

}  // namespace pcqa
