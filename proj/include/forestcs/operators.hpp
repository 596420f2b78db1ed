#pragma once

#include "forestcs/signal.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace forestcs {

enum class OperatorKind { DenseSubgaussian, PartialFrequency, BlockDiagonal };

enum class SubgaussianDistribution { Gaussian, Bernoulli };

/// Largest dense operator we are willing to materialize (rows * cols).
inline constexpr Index kMaxDenseEntries = Index{1} << 24;

/// Linear map A : R^input_dim -> R^output_dim with its transpose.
///
/// Operators are immutable after construction, so a single instance may be
/// applied from several threads at once.
class MeasurementOperator {
public:
    virtual ~MeasurementOperator() = default;

    virtual OperatorKind kind() const = 0;
    virtual Index input_dim() const = 0;
    virtual Index output_dim() const = 0;

    /// y = A x. Throws DimensionError on a size mismatch.
    Vector forward(const Vector& x) const;
    /// x = A^T y. Throws DimensionError on a size mismatch.
    Vector adjoint(const Vector& y) const;

    // Unchecked versions; `out` must already have the right size.
    virtual void forward_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const = 0;
    virtual void adjoint_into(const Eigen::Ref<const Vector>& y, Eigen::Ref<Vector> out) const = 0;
};

using OperatorPtr = std::shared_ptr<const MeasurementOperator>;

class DenseOperator final : public MeasurementOperator {
public:
    explicit DenseOperator(Eigen::MatrixXd matrix, std::uint64_t seed = 0);

    OperatorKind kind() const override { return OperatorKind::DenseSubgaussian; }
    Index input_dim() const override { return matrix_.cols(); }
    Index output_dim() const override { return matrix_.rows(); }
    std::uint64_t seed() const { return seed_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }

    void forward_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
    void adjoint_into(const Eigen::Ref<const Vector>& y, Eigen::Ref<Vector> out) const override;

private:
    Eigen::MatrixXd matrix_;
    std::uint64_t seed_;
};

/// Selected frequency indices on a grid. `selected` is sorted ascending and
/// indexes the row-major flattened grid.
struct SamplingMask {
    SignalShape shape;
    std::vector<Index> selected;
    double ratio = 1.0;

    Index total() const { return shape.size(); }
    static SamplingMask full(SignalShape shape);
};

/// Row selection of the separable orthonormal DCT-II on one channel grid.
///
/// Low frequencies sit at index 0 along each axis, so "distance from the
/// spectrum center" means distance from the DC corner.
class PartialFrequencyOperator final : public MeasurementOperator {
public:
    explicit PartialFrequencyOperator(SamplingMask mask);

    OperatorKind kind() const override { return OperatorKind::PartialFrequency; }
    Index input_dim() const override { return mask_.shape.size(); }
    Index output_dim() const override { return static_cast<Index>(mask_.selected.size()); }
    const SamplingMask& mask() const { return mask_; }

    void forward_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
    void adjoint_into(const Eigen::Ref<const Vector>& y, Eigen::Ref<Vector> out) const override;

private:
    SamplingMask mask_;
    Eigen::MatrixXd rows_dct_;    // height x height
    Eigen::MatrixXd cols_dct_;    // width x width
    Eigen::MatrixXd selected_1d_; // M x N, 1D only
};

/// diag(A'_1, ..., A'_T); off-diagonal blocks are zero.
class BlockDiagonalOperator final : public MeasurementOperator {
public:
    explicit BlockDiagonalOperator(std::vector<OperatorPtr> blocks);

    OperatorKind kind() const override { return OperatorKind::BlockDiagonal; }
    Index input_dim() const override { return in_offsets_.back(); }
    Index output_dim() const override { return out_offsets_.back(); }
    const std::vector<OperatorPtr>& blocks() const { return blocks_; }

    void forward_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
    void adjoint_into(const Eigen::Ref<const Vector>& y, Eigen::Ref<Vector> out) const override;

private:
    std::vector<OperatorPtr> blocks_;
    std::vector<Index> in_offsets_;
    std::vector<Index> out_offsets_;
};

Vector apply_forward(const MeasurementOperator& op, const Vector& x);
Vector apply_adjoint(const MeasurementOperator& op, const Vector& y);

/// Power-iteration estimate of the largest singular value. Returns 0 for the zero operator.
double estimate_spectral_norm(const MeasurementOperator& op, int iters, std::uint64_t seed);

/// Variable-density sampling: indices are drawn without replacement with
/// probability proportional to (1 + |f| / f_max)^(-decay_exponent), where |f| is
/// the distance from DC. The DC index, and for 2D grids the whole DC row and
/// column when they fit in the budget, are always selected.
SamplingMask make_variable_density_mask(SignalShape shape, double ratio, double decay_exponent,
                                        std::uint64_t seed);

/// i.i.d. entries with variance 1/rows, so that E||Ax||^2 = ||x||^2.
std::shared_ptr<DenseOperator> make_dense_subgaussian(Index rows, Index cols,
                                                      SubgaussianDistribution distribution,
                                                      std::uint64_t seed);

std::shared_ptr<PartialFrequencyOperator> make_partial_frequency(SamplingMask mask);

std::shared_ptr<BlockDiagonalOperator> make_block_diagonal(std::vector<OperatorPtr> blocks);

/// Orthonormal DCT-II matrix of size n (row k is frequency k).
Eigen::MatrixXd dct_matrix(Index n);

} // namespace forestcs
