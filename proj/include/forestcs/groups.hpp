#pragma once

#include "forestcs/signal.hpp"
#include "forestcs/wavelet.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace forestcs {

enum class SparsityModel { Standard, Joint, Tree, Forest };

std::string_view to_string(SparsityModel model);
SparsityModel parse_model(std::string_view name);

/// Group set over the stacked coefficient vector of length T * N, where
/// coefficient n of channel t lives at index t * N + n.
///
/// Groups are stored flattened: group g is members[offsets[g] .. offsets[g+1]).
/// Ordering is canonical: groups by node index, then channel; inside a group,
/// channel-major with the node before its parent.
///
///   standard: singletons.
///   joint:    {(t, n) : t} for every position n.
///   tree:     {(t, n), (t, parent(n))} per channel for non-root tree nodes;
///             singletons for roots and approximation coefficients.
///   forest:   {(t, n), (t, parent(n)) : t} for non-root tree nodes;
///             {(t, n) : t} for roots and approximation coefficients.
struct GroupLayout {
    SparsityModel model = SparsityModel::Standard;
    Index channels = 0;
    Index coeffs_per_channel = 0;
    std::vector<Index> offsets{0};
    std::vector<Index> members;

    Index group_count() const { return static_cast<Index>(offsets.size()) - 1; }
    Index total_size() const { return static_cast<Index>(members.size()); }
    std::span<const Index> group(Index g) const
    {
        const auto b = static_cast<std::size_t>(offsets[static_cast<std::size_t>(g)]);
        const auto e = static_cast<std::size_t>(offsets[static_cast<std::size_t>(g) + 1]);
        return std::span<const Index>(members).subspan(b, e - b);
    }
};

GroupLayout build_group_layout(const TreeLayout& tree, Index channels, SparsityModel model);

/// The binary duplication matrix G in D x TN, stored as row -> coefficient.
/// Every row holds exactly one 1, so G^T G = diag(multiplicity).
struct DuplicationMap {
    Index rows = 0;
    Index cols = 0;
    std::vector<Index> row_to_coeff;
    std::vector<Index> multiplicity;

    Index max_multiplicity() const;
};

DuplicationMap build_duplication_map(const GroupLayout& layout);

/// out[r] = theta[row_to_coeff[r]]  (G theta)
Vector expand(const DuplicationMap& map, const Vector& theta);
/// out[c] = sum of w[r] over rows mapping to c  (G^T w)
Vector collapse(const DuplicationMap& map, const Vector& w);

void expand_into(const DuplicationMap& map, const Eigen::Ref<const Vector>& theta, Eigen::Ref<Vector> out);
void collapse_into(const DuplicationMap& map, const Eigen::Ref<const Vector>& w, Eigen::Ref<Vector> out);

/// Group soft-thresholding on consecutive blocks of w delimited by `offsets`:
/// z_g = max(||w_g|| - tau, 0) * w_g / ||w_g||. Zero groups stay zero.
Vector shrinkgroup(const Vector& w, std::span<const Index> offsets, double tau);
void shrinkgroup_inplace(Eigen::Ref<Vector> w, std::span<const Index> offsets, double tau);

/// sum_g ||w_g||_2 over consecutive blocks.
double group_l21_norm(const Vector& w, std::span<const Index> offsets);

} // namespace forestcs
