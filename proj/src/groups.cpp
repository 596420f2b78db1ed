#include "forestcs/groups.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace forestcs {

std::string_view to_string(SparsityModel model)
{
    switch (model) {
    case SparsityModel::Standard: return "standard";
    case SparsityModel::Joint: return "joint";
    case SparsityModel::Tree: return "tree";
    case SparsityModel::Forest: return "forest";
    }
    return "unknown";
}

SparsityModel parse_model(std::string_view name)
{
    if (name == "standard") return SparsityModel::Standard;
    if (name == "joint") return SparsityModel::Joint;
    if (name == "tree") return SparsityModel::Tree;
    if (name == "forest") return SparsityModel::Forest;
    throw std::invalid_argument("unknown sparsity model: " + std::string(name));
}

GroupLayout build_group_layout(const TreeLayout& tree, Index channels, SparsityModel model)
{
    if (channels < 1) {
        throw std::invalid_argument("build_group_layout: channel count must be >= 1");
    }
    const Index n = tree.n_coeffs;
    GroupLayout layout;
    layout.model = model;
    layout.channels = channels;
    layout.coeffs_per_channel = n;
    layout.members.reserve(static_cast<std::size_t>(2 * n * channels));

    auto close_group = [&layout] { layout.offsets.push_back(static_cast<Index>(layout.members.size())); };

    for (Index node = 0; node < n; ++node) {
        const Index parent = tree.parent[static_cast<std::size_t>(node)];
        const bool paired = parent != TreeLayout::kNone;
        switch (model) {
        case SparsityModel::Standard:
            for (Index t = 0; t < channels; ++t) {
                layout.members.push_back(t * n + node);
                close_group();
            }
            break;
        case SparsityModel::Joint:
            for (Index t = 0; t < channels; ++t) {
                layout.members.push_back(t * n + node);
            }
            close_group();
            break;
        case SparsityModel::Tree:
            for (Index t = 0; t < channels; ++t) {
                layout.members.push_back(t * n + node);
                if (paired) {
                    layout.members.push_back(t * n + parent);
                }
                close_group();
            }
            break;
        case SparsityModel::Forest:
            for (Index t = 0; t < channels; ++t) {
                layout.members.push_back(t * n + node);
                if (paired) {
                    layout.members.push_back(t * n + parent);
                }
            }
            close_group();
            break;
        }
    }
    return layout;
}

Index DuplicationMap::max_multiplicity() const
{
    return multiplicity.empty() ? 0 : *std::max_element(multiplicity.begin(), multiplicity.end());
}

DuplicationMap build_duplication_map(const GroupLayout& layout)
{
    DuplicationMap map;
    map.rows = layout.total_size();
    map.cols = layout.channels * layout.coeffs_per_channel;
    map.row_to_coeff = layout.members;
    map.multiplicity.assign(static_cast<std::size_t>(map.cols), 0);
    for (Index c : map.row_to_coeff) {
        if (c < 0 || c >= map.cols) {
            throw std::invalid_argument("build_duplication_map: member index out of range");
        }
        ++map.multiplicity[static_cast<std::size_t>(c)];
    }
    return map;
}

void expand_into(const DuplicationMap& map, const Eigen::Ref<const Vector>& theta, Eigen::Ref<Vector> out)
{
    for (Index r = 0; r < map.rows; ++r) {
        out[r] = theta[map.row_to_coeff[static_cast<std::size_t>(r)]];
    }
}

void collapse_into(const DuplicationMap& map, const Eigen::Ref<const Vector>& w, Eigen::Ref<Vector> out)
{
    out.setZero();
    for (Index r = 0; r < map.rows; ++r) {
        out[map.row_to_coeff[static_cast<std::size_t>(r)]] += w[r];
    }
}

Vector expand(const DuplicationMap& map, const Vector& theta)
{
    require_size(theta.size(), map.cols, "expand");
    Vector out(map.rows);
    expand_into(map, theta, out);
    return out;
}

Vector collapse(const DuplicationMap& map, const Vector& w)
{
    require_size(w.size(), map.rows, "collapse");
    Vector out(map.cols);
    collapse_into(map, w, out);
    return out;
}

void shrinkgroup_inplace(Eigen::Ref<Vector> w, std::span<const Index> offsets, double tau)
{
    if (!(tau >= 0.0)) {
        throw std::invalid_argument("shrinkgroup: threshold must be >= 0");
    }
    for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
        auto block = w.segment(offsets[g], offsets[g + 1] - offsets[g]);
        const double norm = block.norm();
        if (norm <= tau) {
            block.setZero();
        } else {
            block *= (norm - tau) / norm;
        }
    }
}

Vector shrinkgroup(const Vector& w, std::span<const Index> offsets, double tau)
{
    if (offsets.empty() || offsets.front() != 0 || offsets.back() != w.size()) {
        throw DimensionError("shrinkgroup: offsets do not cover the input");
    }
    Vector out = w;
    shrinkgroup_inplace(out, offsets, tau);
    return out;
}

double group_l21_norm(const Vector& w, std::span<const Index> offsets)
{
    double total = 0.0;
    for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
        total += w.segment(offsets[g], offsets[g + 1] - offsets[g]).norm();
    }
    return total;
}

} // namespace forestcs
