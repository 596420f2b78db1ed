#include "forestcs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace forestcs {

namespace {

Index subtree_size(const TreeLayout& tree, Index root)
{
    Index count = 0;
    std::vector<Index> stack{root};
    while (!stack.empty()) {
        const Index node = stack.back();
        stack.pop_back();
        ++count;
        for (Index c : tree.children[static_cast<std::size_t>(node)]) {
            stack.push_back(c);
        }
    }
    return count;
}

std::vector<Index> feasible_roots(const TreeLayout& tree, Index k)
{
    std::vector<Index> roots;
    for (Index root : tree.roots) {
        if (subtree_size(tree, root) >= k) {
            roots.push_back(root);
        }
    }
    return roots;
}

[[noreturn]] void infeasible(Index k)
{
    std::ostringstream msg;
    msg << "no rooted subtree of size " << k << " exists in this tree layout";
    throw std::invalid_argument(msg.str());
}

void enumerate_from(const TreeLayout& tree, Index k, std::vector<Index>& chosen, std::vector<Index> frontier,
                    std::vector<SparseSupport>& out)
{
    if (static_cast<Index>(chosen.size()) == k) {
        SparseSupport s{chosen, true};
        std::sort(s.indices.begin(), s.indices.end());
        out.push_back(std::move(s));
        return;
    }
    if (frontier.empty()) {
        return;
    }
    const Index next = frontier.back();
    frontier.pop_back();

    // Branch 1: take `next`, which exposes its children.
    std::vector<Index> grown = frontier;
    for (Index c : tree.children[static_cast<std::size_t>(next)]) {
        grown.push_back(c);
    }
    chosen.push_back(next);
    enumerate_from(tree, k, chosen, std::move(grown), out);
    chosen.pop_back();

    // Branch 2: exclude `next` for good.
    enumerate_from(tree, k, chosen, std::move(frontier), out);
}

std::vector<Index> uniform_subset(Index n, Index k, Rng& rng)
{
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    // Partial Fisher-Yates.
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
    }
    all.resize(static_cast<std::size_t>(k));
    std::sort(all.begin(), all.end());
    return all;
}

} // namespace

bool is_rooted_connected(const std::vector<Index>& indices, const TreeLayout& tree)
{
    if (indices.empty()) {
        return false;
    }
    std::vector<char> member(static_cast<std::size_t>(tree.n_coeffs), 0);
    for (Index i : indices) {
        if (i < 0 || i >= tree.n_coeffs || !tree.in_tree(i)) {
            return false;
        }
        member[static_cast<std::size_t>(i)] = 1;
    }
    bool has_root = false;
    for (Index i : indices) {
        const Index parent = tree.parent[static_cast<std::size_t>(i)];
        if (parent == TreeLayout::kNone) {
            has_root = true;
        } else if (!member[static_cast<std::size_t>(parent)]) {
            return false;
        }
    }
    return has_root;
}

SparseSupport sample_rooted_subtree(const TreeLayout& tree, Index k, std::uint64_t seed)
{
    if (k < 1) {
        throw std::invalid_argument("sample_rooted_subtree: k must be >= 1");
    }
    const auto roots = feasible_roots(tree, k);
    if (roots.empty()) {
        infeasible(k);
    }
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick_root(0, roots.size() - 1);
    const Index root = roots[pick_root(rng)];

    SparseSupport support;
    support.indices.push_back(root);
    std::vector<Index> frontier = tree.children[static_cast<std::size_t>(root)];
    while (support.k() < k) {
        std::uniform_int_distribution<std::size_t> pick(0, frontier.size() - 1);
        const std::size_t j = pick(rng);
        const Index node = frontier[j];
        frontier[j] = frontier.back();
        frontier.pop_back();
        support.indices.push_back(node);
        for (Index c : tree.children[static_cast<std::size_t>(node)]) {
            frontier.push_back(c);
        }
    }
    std::sort(support.indices.begin(), support.indices.end());
    support.connected = true;
    return support;
}

std::vector<SparseSupport> enumerate_rooted_subtrees(const TreeLayout& tree, Index k)
{
    if (k < 1) {
        throw std::invalid_argument("enumerate_rooted_subtrees: k must be >= 1");
    }
    if (tree.n_coeffs > kMaxEnumerationNodes || k > kMaxEnumerationK) {
        std::ostringstream msg;
        msg << "enumerate_rooted_subtrees: limited to " << kMaxEnumerationNodes << " coefficients and k <= "
            << kMaxEnumerationK << " (got " << tree.n_coeffs << ", k=" << k << ")";
        throw std::length_error(msg.str());
    }
    std::vector<SparseSupport> out;
    for (Index root : tree.roots) {
        std::vector<Index> chosen{root};
        enumerate_from(tree, k, chosen, tree.children[static_cast<std::size_t>(root)], out);
    }
    return out;
}

SparseSupport sample_rooted_subtree_uniform(const TreeLayout& tree, Index k, std::uint64_t seed)
{
    auto all = enumerate_rooted_subtrees(tree, k);
    if (all.empty()) {
        infeasible(k);
    }
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
    return all[pick(rng)];
}

SyntheticInstance generate_instance(const SynthesisSpec& spec, const WaveletBasis& basis, const TreeLayout& tree)
{
    const Index n = basis.size();
    const Index channels = spec.channels;
    if (channels < 1) {
        throw std::invalid_argument("generate_instance: channels must be >= 1");
    }
    if (spec.k < 1 || spec.k > n) {
        throw std::invalid_argument("generate_instance: k must be in [1, N]");
    }
    if (!(spec.noise_sigma >= 0.0)) {
        throw std::invalid_argument("generate_instance: noise_sigma must be >= 0");
    }
    require_size(tree.n_coeffs, n, "generate_instance tree");

    SyntheticInstance inst;
    Rng rng(derive_seed(spec.seed, {1}));
    const std::uint64_t support_seed = derive_seed(spec.seed, {2});

    auto make_support = [&](Index t) -> SparseSupport {
        switch (spec.model) {
        case SparsityModel::Forest:
            return sample_rooted_subtree(tree, spec.k, support_seed);
        case SparsityModel::Tree:
            return sample_rooted_subtree(tree, spec.k, derive_seed(support_seed, {static_cast<std::uint64_t>(t)}));
        case SparsityModel::Joint: {
            Rng local(support_seed);
            return {uniform_subset(n, spec.k, local), false};
        }
        case SparsityModel::Standard: {
            Rng local(derive_seed(support_seed, {static_cast<std::uint64_t>(t)}));
            return {uniform_subset(n, spec.k, local), false};
        }
        }
        throw std::invalid_argument("generate_instance: unknown model");
    };

    inst.theta = Vector::Zero(channels * n);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> magnitude(0.5, 1.0);
    for (Index t = 0; t < channels; ++t) {
        SparseSupport support = make_support(t);
        support.connected = is_rooted_connected(support.indices, tree);
        for (Index i : support.indices) {
            double value = 0.0;
            if (spec.amplitude_law == AmplitudeLaw::Gaussian) {
                do {
                    value = spec.amplitude_scale * normal(rng);
                } while (value == 0.0);
            } else {
                value = spec.amplitude_scale * magnitude(rng) * ((rng() >> 63) ? 1.0 : -1.0);
            }
            inst.theta[t * n + i] = value;
            inst.stacked_support.push_back(t * n + i);
        }
        inst.supports.push_back(std::move(support));
    }
    inst.x = MultiChannelSignal(channels, basis.shape(), basis.synthesize(inst.theta));
    return inst;
}

Vector measure(const Vector& x, const MeasurementOperator& op, double noise_sigma, std::uint64_t seed)
{
    if (!(noise_sigma >= 0.0)) {
        throw std::invalid_argument("measure: noise_sigma must be >= 0");
    }
    Vector b = op.forward(x);
    if (noise_sigma > 0.0) {
        Rng rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index i = 0; i < b.size(); ++i) {
            b[i] += noise_sigma * normal(rng);
        }
    }
    return b;
}

MultiChannelSignal shape_energy(const MultiChannelSignal& x, const std::vector<double>& profile)
{
    if (static_cast<Index>(profile.size()) != x.channels()) {
        throw DimensionError("shape_energy: profile length must equal the channel count");
    }
    double weight_sum = 0.0;
    for (double p : profile) {
        if (!(p >= 0.0)) {
            throw std::invalid_argument("shape_energy: profile entries must be >= 0");
        }
        weight_sum += p;
    }
    if (!(weight_sum > 0.0)) {
        throw std::invalid_argument("shape_energy: profile must not be all zero");
    }
    const double energy = x.data().squaredNorm();
    MultiChannelSignal out = x;
    for (Index t = 0; t < x.channels(); ++t) {
        const double target = energy * profile[static_cast<std::size_t>(t)] / weight_sum;
        const double current = x.channel(t).squaredNorm();
        if (target == 0.0) {
            out.channel(t).setZero();
        } else if (current == 0.0) {
            throw std::invalid_argument("shape_energy: an all-zero channel cannot carry energy");
        } else {
            out.channel(t) *= std::sqrt(target / current);
        }
    }
    return out;
}

} // namespace forestcs
