#include "forestcs/operators.hpp"

#include "forestcs/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace forestcs {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

} // namespace

Vector MeasurementOperator::forward(const Vector& x) const
{
    require_size(x.size(), input_dim(), "apply_forward");
    Vector out(output_dim());
    forward_into(x, out);
    return out;
}

Vector MeasurementOperator::adjoint(const Vector& y) const
{
    require_size(y.size(), output_dim(), "apply_adjoint");
    Vector out(input_dim());
    adjoint_into(y, out);
    return out;
}

Vector apply_forward(const MeasurementOperator& op, const Vector& x) { return op.forward(x); }
Vector apply_adjoint(const MeasurementOperator& op, const Vector& y) { return op.adjoint(y); }

// ---------------------------------------------------------------------------

DenseOperator::DenseOperator(Eigen::MatrixXd matrix, std::uint64_t seed)
    : matrix_(std::move(matrix)), seed_(seed)
{
    if (matrix_.rows() < 1 || matrix_.cols() < 1) {
        throw std::invalid_argument("DenseOperator: empty matrix");
    }
    if (matrix_.size() > kMaxDenseEntries) {
        throw std::invalid_argument("DenseOperator: more than 2^24 entries");
    }
}

void DenseOperator::forward_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const
{
    out.noalias() = matrix_ * x;
}

void DenseOperator::adjoint_into(const Eigen::Ref<const Vector>& y, Eigen::Ref<Vector> out) const
{
    out.noalias() = matrix_.transpose() * y;
}

std::shared_ptr<DenseOperator> make_dense_subgaussian(Index rows, Index cols,
                                                      SubgaussianDistribution distribution,
                                                      std::uint64_t seed)
{
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("make_dense_subgaussian: rows and cols must be >= 1");
    }
    if (rows * cols > kMaxDenseEntries) {
        throw std::invalid_argument("make_dense_subgaussian: more than 2^24 entries");
    }
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    Eigen::MatrixXd m(rows, cols);
    if (distribution == SubgaussianDistribution::Gaussian) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                m(i, j) = scale * normal(rng);
            }
        }
    } else {
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                m(i, j) = (rng() >> 63) ? scale : -scale;
            }
        }
    }
    return std::make_shared<DenseOperator>(std::move(m), seed);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd dct_matrix(Index n)
{
    Eigen::MatrixXd d(n, n);
    const double pi = std::numbers::pi;
    for (Index k = 0; k < n; ++k) {
        const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
        for (Index j = 0; j < n; ++j) {
            d(k, j) = scale * std::cos(pi * (2.0 * j + 1.0) * k / (2.0 * n));
        }
    }
    return d;
}

SamplingMask SamplingMask::full(SignalShape shape)
{
    SamplingMask mask{shape, {}, 1.0};
    mask.selected.resize(static_cast<std::size_t>(shape.size()));
    for (Index i = 0; i < shape.size(); ++i) {
        mask.selected[static_cast<std::size_t>(i)] = i;
    }
    return mask;
}

PartialFrequencyOperator::PartialFrequencyOperator(SamplingMask mask) : mask_(std::move(mask))
{
    const Index total = mask_.shape.size();
    if (total < 1 || mask_.selected.empty()) {
        throw std::invalid_argument("PartialFrequencyOperator: empty mask");
    }
    if (!std::is_sorted(mask_.selected.begin(), mask_.selected.end()) ||
        std::adjacent_find(mask_.selected.begin(), mask_.selected.end()) != mask_.selected.end() ||
        mask_.selected.front() < 0 || mask_.selected.back() >= total) {
        throw std::invalid_argument("PartialFrequencyOperator: mask indices must be sorted, unique, in range");
    }
    rows_dct_ = dct_matrix(mask_.shape.height);
    cols_dct_ = dct_matrix(mask_.shape.width);
    if (mask_.shape.height == 1) {
        selected_1d_.resize(static_cast<Index>(mask_.selected.size()), total);
        for (std::size_t r = 0; r < mask_.selected.size(); ++r) {
            selected_1d_.row(static_cast<Index>(r)) = cols_dct_.row(mask_.selected[r]);
        }
    }
}

void PartialFrequencyOperator::forward_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const
{
    if (mask_.shape.height == 1) {
        out.noalias() = selected_1d_ * x;
        return;
    }
    const Index h = mask_.shape.height;
    const Index w = mask_.shape.width;
    Eigen::Map<const RowMajorMatrix> image(x.data(), h, w);
    RowMajorMatrix spectrum = rows_dct_ * image * cols_dct_.transpose();
    for (std::size_t r = 0; r < mask_.selected.size(); ++r) {
        out[static_cast<Index>(r)] = spectrum.data()[mask_.selected[r]];
    }
}

void PartialFrequencyOperator::adjoint_into(const Eigen::Ref<const Vector>& y, Eigen::Ref<Vector> out) const
{
    if (mask_.shape.height == 1) {
        out.noalias() = selected_1d_.transpose() * y;
        return;
    }
    const Index h = mask_.shape.height;
    const Index w = mask_.shape.width;
    RowMajorMatrix spectrum = RowMajorMatrix::Zero(h, w);
    for (std::size_t r = 0; r < mask_.selected.size(); ++r) {
        spectrum.data()[mask_.selected[r]] = y[static_cast<Index>(r)];
    }
    Eigen::Map<RowMajorMatrix> image(out.data(), h, w);
    image.noalias() = rows_dct_.transpose() * spectrum * cols_dct_;
}

std::shared_ptr<PartialFrequencyOperator> make_partial_frequency(SamplingMask mask)
{
    return std::make_shared<PartialFrequencyOperator>(std::move(mask));
}

SamplingMask make_variable_density_mask(SignalShape shape, double ratio, double decay_exponent,
                                        std::uint64_t seed)
{
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw std::invalid_argument("make_variable_density_mask: ratio must be in (0, 1]");
    }
    if (!(decay_exponent >= 0.0)) {
        throw std::invalid_argument("make_variable_density_mask: decay_exponent must be >= 0");
    }
    if (shape.height < 1 || shape.width < 1) {
        throw std::invalid_argument("make_variable_density_mask: empty shape");
    }
    const Index total = shape.size();
    const Index count = std::clamp<Index>(std::llround(ratio * static_cast<double>(total)), 1, total);

    std::vector<char> chosen(static_cast<std::size_t>(total), 0);
    Index n_forced = 1;
    chosen[0] = 1;
    if (shape.is_2d() && shape.height + shape.width - 1 <= count) {
        for (Index c = 0; c < shape.width; ++c) {
            chosen[static_cast<std::size_t>(c)] = 1;
        }
        for (Index r = 0; r < shape.height; ++r) {
            chosen[static_cast<std::size_t>(r * shape.width)] = 1;
        }
        n_forced = shape.height + shape.width - 1;
    }

    // Weighted sampling without replacement (Efraimidis-Spirakis): keep the
    // largest keys log(u) / w.
    const double fr_max = static_cast<double>(shape.height - 1);
    const double fc_max = static_cast<double>(shape.width - 1);
    const double f_max = std::max(std::hypot(fr_max, fc_max), 1.0);
    Rng rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<std::pair<double, Index>> keys;
    keys.reserve(static_cast<std::size_t>(total - n_forced));
    for (Index i = 0; i < total; ++i) {
        // Draw for every index so the stream does not depend on the forced set.
        const double u = std::max(uniform(rng), 1e-300);
        if (chosen[static_cast<std::size_t>(i)]) {
            continue;
        }
        const double f = std::hypot(static_cast<double>(i / shape.width), static_cast<double>(i % shape.width));
        const double weight = std::pow(1.0 + f / f_max, -decay_exponent);
        keys.emplace_back(std::log(u) / weight, i);
    }
    const auto need = static_cast<std::size_t>(count - n_forced);
    std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(need), keys.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; j < need; ++j) {
        chosen[static_cast<std::size_t>(keys[j].second)] = 1;
    }

    SamplingMask mask{shape, {}, static_cast<double>(count) / static_cast<double>(total)};
    mask.selected.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < total; ++i) {
        if (chosen[static_cast<std::size_t>(i)]) {
            mask.selected.push_back(i);
        }
    }
    return mask;
}

// ---------------------------------------------------------------------------

BlockDiagonalOperator::BlockDiagonalOperator(std::vector<OperatorPtr> blocks) : blocks_(std::move(blocks))
{
    if (blocks_.empty()) {
        throw std::invalid_argument("BlockDiagonalOperator: no blocks");
    }
    in_offsets_.push_back(0);
    out_offsets_.push_back(0);
    for (const auto& block : blocks_) {
        if (!block) {
            throw std::invalid_argument("BlockDiagonalOperator: null block");
        }
        in_offsets_.push_back(in_offsets_.back() + block->input_dim());
        out_offsets_.push_back(out_offsets_.back() + block->output_dim());
    }
}

void BlockDiagonalOperator::forward_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const
{
    for (std::size_t t = 0; t < blocks_.size(); ++t) {
        const Index n = in_offsets_[t + 1] - in_offsets_[t];
        const Index m = out_offsets_[t + 1] - out_offsets_[t];
        blocks_[t]->forward_into(x.segment(in_offsets_[t], n), out.segment(out_offsets_[t], m));
    }
}

void BlockDiagonalOperator::adjoint_into(const Eigen::Ref<const Vector>& y, Eigen::Ref<Vector> out) const
{
    for (std::size_t t = 0; t < blocks_.size(); ++t) {
        const Index n = in_offsets_[t + 1] - in_offsets_[t];
        const Index m = out_offsets_[t + 1] - out_offsets_[t];
        blocks_[t]->adjoint_into(y.segment(out_offsets_[t], m), out.segment(in_offsets_[t], n));
    }
}

std::shared_ptr<BlockDiagonalOperator> make_block_diagonal(std::vector<OperatorPtr> blocks)
{
    return std::make_shared<BlockDiagonalOperator>(std::move(blocks));
}

// ---------------------------------------------------------------------------

double estimate_spectral_norm(const MeasurementOperator& op, int iters, std::uint64_t seed)
{
    if (iters < 1) {
        throw std::invalid_argument("estimate_spectral_norm: iters must be >= 1");
    }
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(op.input_dim());
    for (Index i = 0; i < v.size(); ++i) {
        v[i] = normal(rng);
    }
    v.normalize();
    Vector av(op.output_dim());
    Vector w(op.input_dim());
    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
        op.forward_into(v, av);
        sigma = av.norm();
        op.adjoint_into(av, w);
        const double wn = w.norm();
        if (wn == 0.0) {
            return 0.0;
        }
        v = w / wn;
    }
    op.forward_into(v, av);
    return std::max(sigma, av.norm());
}

} // namespace forestcs
