#pragma once

#include "forestcs/signal.hpp"

#include <vector>

namespace forestcs {

enum class WaveletFamily { Haar, Daubechies4 };

/// Orthonormal periodic multilevel DWT on one channel grid.
///
/// Coefficient layout (Mallat): the row-major flattening of the transformed
/// grid. For a 1D signal of length N and L levels this is
///
///     [ a_L | d_L | d_{L-1} | ... | d_1 ]
///
/// with |a_L| = |d_L| = N / 2^L and |d_l| = N / 2^l, so detail coefficient p of
/// level l sits at index N / 2^l + p. In 2D the approximation block occupies
/// the top-left (H / 2^L) x (W / 2^L) corner and each level's three
/// orientation subbands surround it.
class WaveletBasis {
public:
    WaveletBasis(SignalShape shape, int levels = 3, WaveletFamily family = WaveletFamily::Haar);

    const SignalShape& shape() const { return shape_; }
    int levels() const { return levels_; }
    WaveletFamily family() const { return family_; }
    Index size() const { return shape_.size(); }

    /// Analysis: theta = Phi x.
    Vector dwt(const Vector& x) const;
    /// Synthesis: x = Phi^-1 theta = Phi^T theta.
    Vector idwt(const Vector& theta) const;

    // Unchecked in-place variants for the solver loops.
    void dwt_inplace(Eigen::Ref<Vector> data, std::vector<double>& scratch) const;
    void idwt_inplace(Eigen::Ref<Vector> data, std::vector<double>& scratch) const;

    /// Channel-wise transforms of a stacked [x_1; ...; x_T] vector.
    Vector analyze(const Vector& stacked) const;
    Vector synthesize(const Vector& stacked) const;

private:
    void forward_step(const double* in, double* out, Index n, Index stride_in, Index stride_out) const;
    void inverse_step(const double* in, double* out, Index n, Index stride_in, Index stride_out) const;

    SignalShape shape_;
    int levels_;
    WaveletFamily family_;
    std::vector<double> low_;
    std::vector<double> high_;
};

/// Parent/children maps over one channel's coefficient layout.
///
/// Only detail coefficients belong to trees. Approximation coefficients are
/// listed separately and have neither parent nor children.
struct TreeLayout {
    static constexpr Index kNone = -1;

    Index n_coeffs = 0;
    int levels = 0;
    int arity = 2;
    std::vector<Index> parent;                // kNone for roots and approximation
    std::vector<std::vector<Index>> children; // empty for leaves and approximation
    std::vector<Index> roots;                 // coarsest-level detail coefficients
    std::vector<Index> approximation;

    std::vector<char> approximation_mask;     // 1 for approximation coefficients

    bool in_tree(Index i) const { return approximation_mask[static_cast<std::size_t>(i)] == 0; }
    bool is_root(Index i) const { return in_tree(i) && parent[static_cast<std::size_t>(i)] == kNone; }
};

TreeLayout build_tree_layout(const WaveletBasis& basis);

/// Full binary tree over a 1D Haar layout of length n with log2(n) levels:
/// one root (index 1) and children(i) = {2i, 2i+1}.
TreeLayout complete_binary_tree(Index n);

} // namespace forestcs
