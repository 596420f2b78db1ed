#include "forestcs/theory.hpp"

#include "forestcs/random.hpp"
#include "forestcs/synth.hpp"
#include "forestcs/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace forestcs {

void BoundParams::validate() const
{
    if (N < 1 || k < 1 || T < 1) {
        throw std::invalid_argument("BoundParams: N, k and T must be >= 1");
    }
    if (k > N) {
        throw std::invalid_argument("BoundParams: k must not exceed N");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("BoundParams: delta must be in (0, 1)");
    }
    if (!(c1 > 0.0 && c2 > 0.0 && c3 > 0.0 && c4 > 0.0)) {
        throw std::invalid_argument("BoundParams: constants must be positive");
    }
}

std::uint64_t catalan(int k)
{
    if (k < 0) {
        throw std::invalid_argument("catalan: k must be >= 0");
    }
    if (k > kMaxCatalanIndex) {
        throw std::overflow_error("catalan: k > 30 is outside the exact 64-bit range used here");
    }
    // C_{n+1} = C_n * 2(2n+1) / (n+2). The product stays below 2^64 for n < 30.
    std::uint64_t c = 1;
    for (int n = 0; n < k; ++n) {
        c = c * (2 * (2 * static_cast<std::uint64_t>(n) + 1)) / static_cast<std::uint64_t>(n + 2);
    }
    return c;
}

int floor_log2(Index n)
{
    if (n < 1) {
        throw std::invalid_argument("floor_log2: n must be >= 1");
    }
    int l = 0;
    while ((n >> 1) > 0) {
        n >>= 1;
        ++l;
    }
    return l;
}

SubtreeCount subtree_count_bound(Index N, Index k, double c4)
{
    if (N < 1 || k < 1) {
        throw std::invalid_argument("subtree_count_bound: N and k must be >= 1");
    }
    const double n = static_cast<double>(N);
    const double kk = static_cast<double>(k);
    SubtreeCount out;
    if (k <= floor_log2(N)) {
        out.bound = std::exp(kk) * n / (kk + 1.0);
    } else {
        out.bound = std::pow(4.0, kk) * c4 * n / kk;
    }
    if (k <= kMaxCatalanIndex) {
        out.catalan = catalan(static_cast<int>(k));
    }
    return out;
}

namespace {

// ln L_tree with the large-k constant passed in (c2 for dense, c3 for block-diagonal).
double log_tree_count(Index N, Index k, double c)
{
    const double n = static_cast<double>(N);
    const double kk = static_cast<double>(k);
    if (k <= floor_log2(N)) {
        return kk + std::log(n / (kk + 1.0));
    }
    return kk * std::log(4.0) + std::log(c * n / kk);
}

double log_combinations_approx(Index N, Index k)
{
    const double kk = static_cast<double>(k);
    return kk * std::log(std::exp(1.0) * static_cast<double>(N) / kk);
}

} // namespace

BoundTerms measurement_bound_terms(SparsityModel model, const BoundParams& p)
{
    p.validate();
    const double T = static_cast<double>(p.T);
    BoundTerms terms;
    switch (model) {
    case SparsityModel::Standard:
        terms.log_subspaces = T * log_combinations_approx(p.N, p.k);
        break;
    case SparsityModel::Joint:
        terms.log_subspaces = log_combinations_approx(p.N, p.k);
        break;
    case SparsityModel::Tree:
        terms.log_subspaces = T * log_tree_count(p.N, p.k, p.c2);
        break;
    case SparsityModel::Forest:
        terms.log_subspaces = log_tree_count(p.N, p.k, p.c2);
        break;
    }
    terms.dimension_term = T * static_cast<double>(p.k) * std::log(12.0 / p.delta);
    terms.log_two = std::log(2.0);
    terms.t = p.t;
    terms.prefactor = 2.0 / (p.c1 * p.delta);
    return terms;
}

double measurement_bound(SparsityModel model, const BoundParams& p)
{
    return measurement_bound_terms(model, p).total();
}

EnergyFactors energy_factors(const std::vector<double>& e)
{
    if (e.empty()) {
        throw std::domain_error("energy_factors: no channels");
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    double peak = 0.0;
    for (double v : e) {
        if (!(v >= 0.0)) {
            throw std::domain_error("energy_factors: channel energies must be >= 0");
        }
        sum += v;
        sum_sq += v * v;
        peak = std::max(peak, v);
    }
    if (!(sum > 0.0)) {
        throw std::domain_error("energy_factors: signal is identically zero");
    }
    return {sum * sum / sum_sq, sum / peak};
}

EnergyFactors energy_factors(const MultiChannelSignal& x)
{
    std::vector<double> e(static_cast<std::size_t>(x.channels()));
    for (Index t = 0; t < x.channels(); ++t) {
        e[static_cast<std::size_t>(t)] = x.channel(t).squaredNorm();
    }
    return energy_factors(e);
}

double blockdiag_bound(const BoundParams& p, const EnergyFactors& f)
{
    p.validate();
    if (!(f.gamma_2 > 0.0 && f.gamma_inf > 0.0)) {
        throw std::invalid_argument("blockdiag_bound: energy factors must be positive");
    }
    const double T = static_cast<double>(p.T);
    const double W = std::min(p.c2 * p.c2 * p.delta * p.delta * f.gamma_2, p.c2 * p.delta * f.gamma_inf);
    const double inner = std::log(2.0) + log_tree_count(p.N, p.k, p.c3) +
                         T * static_cast<double>(p.k) * std::log(12.0 / p.delta) + p.t;
    return 2.0 * T / (p.c1 * W) * inner;
}

ConcentrationStats rip_concentration_experiment(const ConcentrationSpec& spec)
{
    const Index T = spec.T;
    const Index N = spec.N;
    if (T < 1 || N < 2 || spec.k < 1 || spec.M < 1 || spec.trials < 2) {
        throw std::invalid_argument("rip_concentration_experiment: need T, k, M >= 1, N >= 2, trials >= 2");
    }
    if (T * N > 4096) {
        throw std::invalid_argument("rip_concentration_experiment: T*N must be <= 4096");
    }
    std::vector<double> profile = spec.energy_profile;
    if (profile.empty()) {
        profile.assign(static_cast<std::size_t>(T), 1.0);
    }
    if (static_cast<Index>(profile.size()) != T) {
        throw DimensionError("rip_concentration_experiment: energy profile length must equal T");
    }
    const double profile_sum = std::accumulate(profile.begin(), profile.end(), 0.0);
    if (!(profile_sum > 0.0) || std::any_of(profile.begin(), profile.end(), [](double v) { return v < 0.0; })) {
        throw std::invalid_argument("rip_concentration_experiment: profile must be nonnegative and not all zero");
    }

    const TreeLayout tree = complete_binary_tree(N);
    ConcentrationStats stats;
    stats.samples.reserve(static_cast<std::size_t>(spec.trials));
    Vector x(T * N);
    for (Index trial = 0; trial < spec.trials; ++trial) {
        const auto trial_seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(trial)});
        const SparseSupport support = sample_rooted_subtree(tree, spec.k, derive_seed(trial_seed, {1}));
        Rng rng(derive_seed(trial_seed, {2}));
        std::normal_distribution<double> normal(0.0, 1.0);
        x.setZero();
        for (Index t = 0; t < T; ++t) {
            auto xt = x.segment(t * N, N);
            for (Index i : support.indices) {
                xt[i] = normal(rng);
            }
            const double norm = xt.norm();
            const double share = profile[static_cast<std::size_t>(t)] / profile_sum;
            if (norm > 0.0) {
                xt *= std::sqrt(share) / norm;
            }
        }

        OperatorPtr op;
        const auto op_seed = derive_seed(trial_seed, {3});
        if (spec.block_diagonal) {
            std::vector<OperatorPtr> blocks;
            for (Index t = 0; t < T; ++t) {
                blocks.push_back(make_dense_subgaussian(spec.M, N, SubgaussianDistribution::Gaussian,
                                                        derive_seed(op_seed, {static_cast<std::uint64_t>(t)})));
            }
            op = make_block_diagonal(std::move(blocks));
        } else {
            op = make_dense_subgaussian(T * spec.M, T * N, SubgaussianDistribution::Gaussian, op_seed);
        }
        stats.samples.push_back(op->forward(x).squaredNorm() - 1.0);
    }

    const double n = static_cast<double>(stats.samples.size());
    double mean_dev = 0.0;
    for (double s : stats.samples) {
        mean_dev += s;
    }
    mean_dev /= n;
    double var = 0.0;
    Index tail = 0;
    for (double s : stats.samples) {
        var += (s - mean_dev) * (s - mean_dev);
        if (std::abs(s) > spec.delta) {
            ++tail;
        }
    }
    stats.mean = 1.0 + mean_dev;
    stats.std = std::sqrt(var / (n - 1.0));
    stats.tail_fraction = static_cast<double>(tail) / n;
    return stats;
}

} // namespace forestcs
