#pragma once

#include "forestcs/groups.hpp"
#include "forestcs/operators.hpp"
#include "forestcs/random.hpp"
#include "forestcs/signal.hpp"
#include "forestcs/wavelet.hpp"

#include <cstdint>
#include <vector>

namespace forestcs {

/// Support of one channel's coefficients. `indices` is sorted.
struct SparseSupport {
    std::vector<Index> indices;
    bool connected = false;

    Index k() const { return static_cast<Index>(indices.size()); }
};

/// True when every member is a tree node, at least one member is a root and
/// every non-root member's parent is also a member.
bool is_rooted_connected(const std::vector<Index>& indices, const TreeLayout& tree);

/// Grow a connected support from one root chosen uniformly among the roots
/// whose subtree holds at least k nodes: repeatedly add a uniformly chosen
/// child of the current support. Not uniform over all size-k subtrees.
SparseSupport sample_rooted_subtree(const TreeLayout& tree, Index k, std::uint64_t seed);

/// Exactly uniform draw over enumerate_rooted_subtrees(tree, k).
SparseSupport sample_rooted_subtree_uniform(const TreeLayout& tree, Index k, std::uint64_t seed);

inline constexpr Index kMaxEnumerationNodes = 64;
inline constexpr Index kMaxEnumerationK = 8;

/// Every connected size-k support that contains a root, without duplicates.
/// Limited to trees with at most 64 coefficients and k <= 8.
std::vector<SparseSupport> enumerate_rooted_subtrees(const TreeLayout& tree, Index k);

enum class AmplitudeLaw { Gaussian, UniformMagnitude };

struct SynthesisSpec {
    Index channels = 3;
    Index k = 8;
    SparsityModel model = SparsityModel::Forest;
    AmplitudeLaw amplitude_law = AmplitudeLaw::Gaussian;
    /// Gaussian: standard deviation. Uniform-magnitude: magnitudes in [scale/2, scale].
    double amplitude_scale = 1.0;
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;
};

struct SyntheticInstance {
    MultiChannelSignal x;
    Vector theta;                         // stacked coefficients, exactly k nonzeros per channel
    std::vector<SparseSupport> supports;  // one per channel
    std::vector<Index> stacked_support;   // indices into theta
};

SyntheticInstance generate_instance(const SynthesisSpec& spec, const WaveletBasis& basis, const TreeLayout& tree);

/// b = A x + sigma * g with g standard normal.
Vector measure(const Vector& x, const MeasurementOperator& op, double noise_sigma, std::uint64_t seed);

/// Rescale channels so that channel t carries a fraction profile[t] / sum(profile)
/// of the total energy ||x||^2.
MultiChannelSignal shape_energy(const MultiChannelSignal& x, const std::vector<double>& profile);

} // namespace forestcs
