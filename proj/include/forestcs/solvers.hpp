#pragma once

#include "forestcs/groups.hpp"
#include "forestcs/operators.hpp"
#include "forestcs/signal.hpp"
#include "forestcs/wavelet.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace forestcs {

struct SolverConfig {
    double lambda = 0.035;
    /// Coupling weight of the duplicated variable; 0.5 * lambda when unset.
    std::optional<double> gamma;
    /// TV weight; 0 disables TV.
    double mu = 0.0;
    /// Step size 1/L_f; estimated from the operator when unset.
    std::optional<double> rho;
    int max_iters = 400;
    /// Stop when ||u - x|| / max(||x||, 1) < tol. 0 runs the full budget.
    double tol = 1e-6;
    int tv_inner_iters = 10;
    /// Seed of the power iteration used for the spectral norm.
    std::uint64_t seed = 0;
    int norm_iters = 100;
    /// Keep the previous iterate when a momentum step would raise the objective.
    bool monotone = true;

    double gamma_value() const { return gamma.value_or(0.5 * lambda); }
};

/// Everything a solve needs besides its configuration.
struct Problem {
    OperatorPtr op;
    Vector b;
    WaveletBasis basis;
    Index channels = 1;
    /// When present, the solvers record an SNR trace against it.
    std::optional<Vector> ground_truth;

    Index signal_size() const { return channels * basis.size(); }
};

struct SolverResult {
    MultiChannelSignal x_hat;
    std::vector<double> objective_trace;
    std::vector<double> snr_trace;
    std::vector<double> momentum_trace; // t^n used at iteration n
    int iters_run = 0;
    int rejected_steps = 0;
    double step_size = 0.0;
    double wall_time = 0.0;
};

// --- proximal maps -------------------------------------------------------

/// sign(v) * max(|v| - tau, 0), elementwise.
Vector soft_threshold(const Vector& v, double tau);

/// Proximal map of tau * ||Phi x||_1 for a stacked multi-channel signal:
/// analysis, soft threshold, synthesis.
Vector prox_l1(const WaveletBasis& basis, const Vector& v, double tau);

/// Cross-channel group soft threshold on a stacked coefficient vector
/// [theta_1; ...; theta_T]: position n of every channel forms one group.
Vector prox_l21_joint(const Vector& v, double tau, Index channels, Index coeffs_per_channel);

/// Isotropic total variation with forward differences and zero flux at the
/// far boundary.
double total_variation(const Eigen::Ref<const Vector>& image, SignalShape shape);

/// Approximate argmin_x tau * TV(x) + 1/2 ||x - v||^2 by `inner_iters` steps of
/// fast projected gradient on the dual.
Vector prox_tv(const Vector& image, SignalShape shape, double tau, int inner_iters);

// --- smooth part ---------------------------------------------------------

/// A^T (A x - b) + gamma * Phi^T G^T (G Phi x - z). With gamma = 0, z and the
/// map are ignored.
Vector smooth_gradient(const MeasurementOperator& op, const Vector& b, const Vector& x, double gamma,
                       const Vector& z, const DuplicationMap& map, const WaveletBasis& basis);

/// Objective at x. Without z:
///     1/2 ||Ax - b||^2 + lambda * sum_g ||(Phi x)_g|| + mu * TV(x)
/// With the duplicated variable z:
///     1/2 ||Ax - b||^2 + lambda * sum_g ||z_g|| + gamma/2 ||z - G Phi x||^2 + mu * TV(x)
double evaluate_objective(const Problem& problem, const Vector& x, const SolverConfig& config,
                          const GroupLayout& layout, const Vector* z = nullptr);

/// Step-size bound L_f = 1.05 * ||A||^2 + gamma * max multiplicity.
double lipschitz_bound(const MeasurementOperator& op, const SolverConfig& config, Index max_multiplicity);

// --- solvers -------------------------------------------------------------

/// Accelerated proximal gradient on 1/2||Ax-b||^2 + lambda ||Phi x||_{1 or 2,1}.
/// With mu > 0 the sparsity and TV proximal results are averaged (composite
/// splitting). `model` must be Standard or Joint.
SolverResult fista(const Problem& problem, const SolverConfig& config, SparsityModel model);

/// Overlapping group sparsity through the duplicated variable z:
/// z = shrinkgroup(G Phi x, lambda / gamma) followed by one accelerated
/// gradient step on 1/2||Ax-b||^2 + gamma/2 ||z - G Phi x||^2. With mu > 0 the
/// x-step is followed by the TV proximal map.
SolverResult fista_structured(const Problem& problem, const SolverConfig& config, const GroupLayout& layout);

/// FCSA form of the structured solver (TV weight mu). With mu = 0 it is
/// exactly fista_structured.
SolverResult fcsa_structured(const Problem& problem, const SolverConfig& config, const GroupLayout& layout);

/// Dispatch on the model: standard/joint use fista, tree/forest use the
/// structured solver with the matching layout built from `tree`.
SolverResult solve(const Problem& problem, const SolverConfig& config, SparsityModel model,
                   const TreeLayout& tree);

/// t^{n+1} = (1 + sqrt(1 + 4 (t^n)^2)) / 2
inline double next_momentum(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

} // namespace forestcs
