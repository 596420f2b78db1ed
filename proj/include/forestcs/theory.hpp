#pragma once

#include "forestcs/groups.hpp"
#include "forestcs/operators.hpp"
#include "forestcs/signal.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace forestcs {

/// Parameters shared by the measurement-bound calculators. The absolute
/// constants are unknown and default to 1; only compare bounds evaluated with
/// the same constants.
struct BoundParams {
    Index N = 1024;
    Index k = 8;
    Index T = 1;
    double delta = 0.5; // RIP constant, in (0, 1)
    double t = 1.0;     // failure probability e^-t
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
    double c4 = 1.0;

    void validate() const;
};

inline constexpr int kMaxCatalanIndex = 30;

/// Exact Catalan number C_k for 0 <= k <= 30.
std::uint64_t catalan(int k);

struct SubtreeCount {
    double bound = 0.0;
    std::optional<std::uint64_t> catalan; // set when k <= 30
};

/// Upper bound on the number of rooted size-k subtrees of a binary tree with N
/// nodes: e^k N / (k+1) for k <= floor(log2 N), 4^k c4 N / k above that.
SubtreeCount subtree_count_bound(Index N, Index k, double c4 = 1.0);

/// floor(log2 n) for n >= 1.
int floor_log2(Index n);

/// The pieces of TM = 2 / (c1 delta) * (ln 2 + ln L + dim * ln(12/delta) + t).
struct BoundTerms {
    double log_subspaces = 0.0; // ln L
    double dimension_term = 0.0; // Tk ln(12/delta)
    double log_two = 0.0;
    double t = 0.0;
    double prefactor = 0.0;

    double total() const { return prefactor * (log_subspaces + dimension_term + log_two + t); }
};

/// Explicit union-bound evaluation for a dense sub-Gaussian operator.
///
///   standard: L = C(N,k)^T, ln L taken as T k ln(eN/k)
///   joint:    L = C(N,k),   ln L taken as k ln(eN/k)
///   tree:     L = L_tree^T (independent subtrees per channel)
///   forest:   L = L_tree   (one subtree shared by all channels)
///
/// with ln L_tree = k + ln(N/(k+1)) for small k and k ln 4 + ln(c2 N/k) above
/// floor(log2 N). Returns total measurements TM.
BoundTerms measurement_bound_terms(SparsityModel model, const BoundParams& p);
double measurement_bound(SparsityModel model, const BoundParams& p);

struct EnergyFactors {
    double gamma_2 = 1.0;
    double gamma_inf = 1.0;
};

/// Gamma_2 = (sum e_t)^2 / sum e_t^2 and Gamma_inf = sum e_t / max e_t with
/// e_t = ||x_t||^2. Throws std::domain_error for an all-zero signal.
EnergyFactors energy_factors(const MultiChannelSignal& x);
EnergyFactors energy_factors(const std::vector<double>& channel_energies);

/// Forest bound for a block-diagonal operator:
/// TM = 2T / (c1 W) * (ln 2 + ln L_tree' + Tk ln(12/delta) + t), with
/// W = min(c2^2 delta^2 Gamma_2, c2 delta Gamma_inf) and the large-k branch
/// using ln(c3 N/k).
double blockdiag_bound(const BoundParams& p, const EnergyFactors& f);

struct ConcentrationSpec {
    Index T = 4;
    Index N = 64;
    Index k = 4;
    Index M = 16;                     // measurements per channel
    std::vector<double> energy_profile; // length T; empty means equal energy
    Index trials = 500;
    bool block_diagonal = true;       // false: one dense TM x TN operator
    double delta = 0.3;               // tail threshold for |  ||Ax||^2 - 1 |
    std::uint64_t seed = 0;
};

struct ConcentrationStats {
    double mean = 0.0; // of ||Ax||^2
    double std = 0.0;  // sample standard deviation of ||Ax||^2
    double tail_fraction = 0.0;
    std::vector<double> samples; // ||Ax||^2 - 1 per trial
};

/// Monte-Carlo distribution of ||Ax||^2 for unit-norm forest-sparse
/// coefficient vectors whose channel energies follow the profile. Each trial
/// draws a fresh Gaussian operator and a fresh signal.
ConcentrationStats rip_concentration_experiment(const ConcentrationSpec& spec);

} // namespace forestcs
