#include "pcqa/adaptation.hpp"

#include <cmath>
#include <sstream>

#include "pcqa/io.hpp"
#include "pcqa/random.hpp"
#include "pcqa/schedule.hpp"

namespace pcqa {

namespace {

Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    // Filled row-major so the draw order does not depend on Eigen's storage order.
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

void append(Eigen::VectorXd& out, Eigen::Index& pos, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(pos++) = m(i, j);
}

void extract(const Eigen::VectorXd& in, Eigen::Index& pos, Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in(pos++);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double mx = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - mx).exp();
    return e / e.sum();
}

}  // namespace

LoraLinear lora_init(std::size_t d_out, std::size_t d_in, std::size_t r, double alpha, std::uint64_t seed) {
    if (d_out == 0 || d_in == 0) throw ShapeError("lora_init: dimensions must be positive");
    Rng rng(mix_seed(seed, "lora-base"));
    auto base = gaussian_matrix(rng, static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(d_in),
                                1.0 / std::sqrt(static_cast<double>(d_in)));
    return lora_init(std::move(base), r, alpha, seed);
}

LoraLinear lora_init(Eigen::MatrixXd base, std::size_t r, double alpha, std::uint64_t seed) {
    const auto d_out = static_cast<std::size_t>(base.rows());
    const auto d_in = static_cast<std::size_t>(base.cols());
    if (r < 1 || r > std::min(d_out, d_in))
        throw InvalidRank("lora rank " + std::to_string(r) + " outside [1, " +
                          std::to_string(std::min(d_out, d_in)) + "]");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("lora alpha must be positive");
    Rng rng(mix_seed(seed, "lora-down"));
    LoraLinear layer;
    layer.base = std::move(base);
    layer.down = gaussian_matrix(rng, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d_in),
                                 1.0 / std::sqrt(static_cast<double>(d_in)));
    layer.up = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(r));
    layer.alpha = alpha;
    return layer;
}

Eigen::VectorXd lora_forward(const LoraLinear& layer, const Eigen::VectorXd& x) {
    if (static_cast<std::size_t>(x.size()) != layer.in_dim())
        throw ShapeError("lora_forward: input has " + std::to_string(x.size()) + " components, layer expects " +
                         std::to_string(layer.in_dim()));
    return layer.base * x + layer.scale() * (layer.up * (layer.down * x));
}

Eigen::VectorXd update_singular_values(const LoraLinear& layer) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(layer.up * layer.down);
    return svd.singularValues();
}

ToyComparatorNet::ToyComparatorNet(const ToyNetShape& shape, std::uint64_t seed) : shape_(shape) {
    const auto d = static_cast<Eigen::Index>(shape.descriptor_dim);
    const auto f = static_cast<Eigen::Index>(shape.feature_dim);
    const auto h = static_cast<Eigen::Index>(shape.hidden_dim);
    if (d == 0 || f == 0 || h == 0) throw ShapeError("toy net dimensions must be positive");
    Rng rng(mix_seed(seed, "toy-net"));
    projection_ = gaussian_matrix(rng, f, d, 1.0 / std::sqrt(static_cast<double>(d)));
    query_ = lora_init(static_cast<std::size_t>(h), static_cast<std::size_t>(f), shape.rank, shape.alpha,
                       mix_seed(seed, "query"));
    value_ = lora_init(static_cast<std::size_t>(h), static_cast<std::size_t>(h), shape.rank, shape.alpha,
                       mix_seed(seed, "value"));
    head_ = gaussian_matrix(rng, static_cast<Eigen::Index>(kLevelCount), h, 0.1);
    head_bias_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kLevelCount));
}

LevelDistribution ToyComparatorNet::predict(const Eigen::VectorXd& descriptor) const {
    if (static_cast<std::size_t>(descriptor.size()) != shape_.descriptor_dim)
        throw ShapeError("toy net: descriptor dimension mismatch");
    const Eigen::VectorXd f = projection_ * descriptor;
    const Eigen::VectorXd h1 = lora_forward(query_, f).array().tanh();
    const Eigen::VectorXd h2 = lora_forward(value_, h1).array().tanh();
    const Eigen::VectorXd p = softmax(head_ * h2 + head_bias_);
    std::array<double, kLevelCount> probs{};
    for (std::size_t c = 0; c < kLevelCount; ++c) probs[c] = p(static_cast<Eigen::Index>(c));
    return LevelDistribution(probs);
}

std::size_t ToyComparatorNet::parameter_count() const noexcept {
    return static_cast<std::size_t>(query_.down.size() + query_.up.size() + value_.down.size() +
                                    value_.up.size() + head_.size() + head_bias_.size());
}

Eigen::VectorXd ToyComparatorNet::parameters() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index pos = 0;
    append(out, pos, query_.down);
    append(out, pos, query_.up);
    append(out, pos, value_.down);
    append(out, pos, value_.up);
    append(out, pos, head_);
    append(out, pos, head_bias_);
    return out;
}

void ToyComparatorNet::set_parameters(const Eigen::VectorXd& params) {
    if (static_cast<std::size_t>(params.size()) != parameter_count())
        throw ShapeError("toy net: parameter vector has wrong length");
    Eigen::Index pos = 0;
    extract(params, pos, query_.down);
    extract(params, pos, query_.up);
    extract(params, pos, value_.down);
    extract(params, pos, value_.up);
    extract(params, pos, head_);
    Eigen::MatrixXd bias = head_bias_;
    extract(params, pos, bias);
    head_bias_ = bias;
}

double ToyComparatorNet::loss_and_gradient(std::span<const ToyExample> pool, std::span<const std::size_t> batch,
                                           Eigen::VectorXd& gradient) const {
    if (batch.empty()) throw InvalidInput("toy net: empty batch");
    Eigen::MatrixXd g_aq = Eigen::MatrixXd::Zero(query_.down.rows(), query_.down.cols());
    Eigen::MatrixXd g_bq = Eigen::MatrixXd::Zero(query_.up.rows(), query_.up.cols());
    Eigen::MatrixXd g_av = Eigen::MatrixXd::Zero(value_.down.rows(), value_.down.cols());
    Eigen::MatrixXd g_bv = Eigen::MatrixXd::Zero(value_.up.rows(), value_.up.cols());
    Eigen::MatrixXd g_h = Eigen::MatrixXd::Zero(head_.rows(), head_.cols());
    Eigen::VectorXd g_b = Eigen::VectorXd::Zero(head_bias_.size());
    const double sq = query_.scale();
    const double sv = value_.scale();

    double loss = 0.0;
    for (std::size_t idx : batch) {
        const ToyExample& ex = pool[idx];
        if (static_cast<std::size_t>(ex.descriptor.size()) != shape_.descriptor_dim)
            throw ShapeError("toy net: descriptor dimension mismatch");
        const Eigen::VectorXd f = projection_ * ex.descriptor;
        const Eigen::VectorXd af = query_.down * f;
        const Eigen::VectorXd h1 = (query_.base * f + sq * (query_.up * af)).array().tanh();
        const Eigen::VectorXd ah = value_.down * h1;
        const Eigen::VectorXd h2 = (value_.base * h1 + sv * (value_.up * ah)).array().tanh();
        const Eigen::VectorXd p = softmax(head_ * h2 + head_bias_);
        const auto truth = static_cast<Eigen::Index>(level_index(ex.level));
        loss += -std::log(std::max(p(truth), kProbabilityFloor));

        Eigen::VectorXd d_logits = p;
        d_logits(truth) -= 1.0;
        g_h += d_logits * h2.transpose();
        g_b += d_logits;
        const Eigen::VectorXd d_a2 = ((head_.transpose() * d_logits).array() * (1.0 - h2.array().square())).matrix();
        g_bv += sv * d_a2 * ah.transpose();
        const Eigen::VectorXd up_v_t = value_.up.transpose() * d_a2;
        g_av += sv * up_v_t * h1.transpose();
        const Eigen::VectorXd d_h1 = value_.base.transpose() * d_a2 + sv * (value_.down.transpose() * up_v_t);
        const Eigen::VectorXd d_a1 = (d_h1.array() * (1.0 - h1.array().square())).matrix();
        g_bq += sq * d_a1 * af.transpose();
        g_aq += sq * (query_.up.transpose() * d_a1) * f.transpose();
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    gradient.resize(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index pos = 0;
    append(gradient, pos, g_aq * inv);
    append(gradient, pos, g_bq * inv);
    append(gradient, pos, g_av * inv);
    append(gradient, pos, g_bv * inv);
    append(gradient, pos, g_h * inv);
    append(gradient, pos, g_b * inv);
    return loss * inv;
}

double ToyComparatorNet::mean_loss(std::span<const ToyExample> pool) const {
    if (pool.empty()) throw InvalidInput("toy net: empty pool");
    double total = 0.0;
    for (const auto& ex : pool) total += cross_entropy(predict(ex.descriptor), ex.level);
    return total / static_cast<double>(pool.size());
}

std::string LossTrace::to_csv() const {
    std::string out = "step,loss,pool\n";
    for (const auto& e : entries) {
        out += std::to_string(e.step);
        out += ',';
        out += io::format_double(e.loss);
        out += ',';
        out += prompt_kind_name(e.pool);
        out += '\n';
    }
    return out;
}

LossTrace toy_train(ToyComparatorNet& net, std::span<const ToyExample> texture_pool,
                    std::span<const ToyExample> geometry_pool, const ToyTrainOptions& options) {
    if (!std::isfinite(options.learning_rate) || options.learning_rate < 0.0)
        throw InvalidInput("toy_train: learning rate must be finite and >= 0");
    const auto plan = plan_schedule_indices(texture_pool.size(), geometry_pool.size(), options.steps,
                                            options.batch_size, options.seed);
    LossTrace trace;
    trace.entries.reserve(plan.size());
    Eigen::VectorXd gradient;
    for (const auto& step : plan) {
        const auto pool = step.pool == PromptKind::texture ? texture_pool : geometry_pool;
        if (options.on_step) options.on_step(step.t, step.pool, step.batch);
        const double loss = net.loss_and_gradient(pool, step.batch, gradient);
        if (!std::isfinite(loss) || !gradient.allFinite()) throw DivergenceError(step.t);
        trace.entries.push_back({step.t, step.pool, loss});
        if (options.learning_rate > 0.0) net.set_parameters(net.parameters() - options.learning_rate * gradient);
    }
    return trace;
}

std::vector<ToyExample> synthetic_toy_pool(PromptKind kind, std::size_t count, std::size_t stimulus_dim,
                                           std::uint64_t seed) {
    if (stimulus_dim == 0) throw ShapeError("synthetic_toy_pool: stimulus_dim must be positive");
    Rng rng(mix_seed(seed, prompt_kind_name(kind)));
    // Pool-specific unit direction carrying the latent quality.
    Eigen::VectorXd direction(static_cast<Eigen::Index>(stimulus_dim));
    for (Eigen::Index i = 0; i < direction.size(); ++i) direction(i) = rng.normal();
    direction.normalize();

    constexpr double kStd = 0.5;
    constexpr double kFeatureScale = 0.1;
    const auto d = static_cast<Eigen::Index>(stimulus_dim);
    std::vector<ToyExample> pool;
    pool.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double qa = rng.uniform(0.0, 10.0);
        const double qb = rng.uniform(0.0, 10.0);
        ToyExample ex;
        ex.descriptor.resize(3 * d);
        const Eigen::VectorXd fa = kFeatureScale * qa * direction;
        const Eigen::VectorXd fb = kFeatureScale * qb * direction;
        ex.descriptor << fa, fb, fb - fa;
        ex.level = quantize_level(standardized_difference(qa, kStd, qb, kStd));
        pool.push_back(std::move(ex));
    }
    return pool;
}

}  // namespace pcqa
