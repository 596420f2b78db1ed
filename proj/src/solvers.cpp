#include "forestcs/solvers.hpp"

#include "forestcs/metrics.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace forestcs {

// --- proximal maps -------------------------------------------------------

Vector soft_threshold(const Vector& v, double tau)
{
    if (!(tau >= 0.0)) {
        throw std::invalid_argument("soft_threshold: threshold must be >= 0");
    }
    Vector out(v.size());
    for (Index i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v[i]) - tau;
        out[i] = mag > 0.0 ? std::copysign(mag, v[i]) : 0.0;
    }
    return out;
}

Vector prox_l1(const WaveletBasis& basis, const Vector& v, double tau)
{
    return basis.synthesize(soft_threshold(basis.analyze(v), tau));
}

namespace {

void joint_shrink_inplace(Eigen::Ref<Vector> theta, double tau, Index channels, Index n)
{
    for (Index i = 0; i < n; ++i) {
        double sq = 0.0;
        for (Index t = 0; t < channels; ++t) {
            sq += theta[t * n + i] * theta[t * n + i];
        }
        const double norm = std::sqrt(sq);
        const double scale = norm <= tau ? 0.0 : (norm - tau) / norm;
        for (Index t = 0; t < channels; ++t) {
            theta[t * n + i] *= scale;
        }
    }
}

double joint_norm(const Eigen::Ref<const Vector>& theta, Index channels, Index n)
{
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        double sq = 0.0;
        for (Index t = 0; t < channels; ++t) {
            sq += theta[t * n + i] * theta[t * n + i];
        }
        total += std::sqrt(sq);
    }
    return total;
}

} // namespace

Vector prox_l21_joint(const Vector& v, double tau, Index channels, Index coeffs_per_channel)
{
    if (!(tau >= 0.0)) {
        throw std::invalid_argument("prox_l21_joint: threshold must be >= 0");
    }
    require_size(v.size(), channels * coeffs_per_channel, "prox_l21_joint");
    Vector out = v;
    joint_shrink_inplace(out, tau, channels, coeffs_per_channel);
    return out;
}

// --- total variation -----------------------------------------------------

double total_variation(const Eigen::Ref<const Vector>& image, SignalShape shape)
{
    require_size(image.size(), shape.size(), "total_variation");
    const Index h = shape.height;
    const Index w = shape.width;
    double tv = 0.0;
    for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) {
            const double x = image[i * w + j];
            const double d1 = i + 1 < h ? image[(i + 1) * w + j] - x : 0.0;
            const double d2 = j + 1 < w ? image[i * w + j + 1] - x : 0.0;
            tv += std::sqrt(d1 * d1 + d2 * d2);
        }
    }
    return tv;
}

namespace {

// out = grad^T (g1, g2), the negative discrete divergence.
void gradient_transpose(const Vector& g1, const Vector& g2, Index h, Index w, Vector& out)
{
    for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) {
            const Index k = i * w + j;
            double v = -g1[k] - g2[k];
            if (i > 0) v += g1[k - w];
            if (j > 0) v += g2[k - 1];
            out[k] = v;
        }
    }
}

double multichannel_tv(const Vector& x, const WaveletBasis& basis, Index channels)
{
    const Index n = basis.size();
    double tv = 0.0;
    for (Index t = 0; t < channels; ++t) {
        tv += total_variation(x.segment(t * n, n), basis.shape());
    }
    return tv;
}

Vector multichannel_prox_tv(const Vector& x, const WaveletBasis& basis, Index channels, double tau, int iters)
{
    const Index n = basis.size();
    Vector out(x.size());
    for (Index t = 0; t < channels; ++t) {
        out.segment(t * n, n) = prox_tv(x.segment(t * n, n), basis.shape(), tau, iters);
    }
    return out;
}

} // namespace

Vector prox_tv(const Vector& image, SignalShape shape, double tau, int inner_iters)
{
    require_size(image.size(), shape.size(), "prox_tv");
    if (!(tau >= 0.0)) {
        throw std::invalid_argument("prox_tv: threshold must be >= 0");
    }
    if (tau == 0.0 || inner_iters <= 0) {
        return image;
    }
    const Index h = shape.height;
    const Index w = shape.width;
    const Index n = shape.size();
    Vector p1 = Vector::Zero(n), p2 = Vector::Zero(n);
    Vector r1 = p1, r2 = p2;
    Vector prev1(n), prev2(n), x(n), gt(n);
    const double step = 1.0 / (8.0 * tau);
    double t = 1.0;
    for (int it = 0; it < inner_iters; ++it) {
        gradient_transpose(r1, r2, h, w, gt);
        x = image - tau * gt;
        prev1 = p1;
        prev2 = p2;
        for (Index i = 0; i < h; ++i) {
            for (Index j = 0; j < w; ++j) {
                const Index k = i * w + j;
                const double d1 = i + 1 < h ? x[k + w] - x[k] : 0.0;
                const double d2 = j + 1 < w ? x[k + 1] - x[k] : 0.0;
                const double q1 = r1[k] + step * d1;
                const double q2 = r2[k] + step * d2;
                const double scale = std::max(1.0, std::sqrt(q1 * q1 + q2 * q2));
                p1[k] = q1 / scale;
                p2[k] = q2 / scale;
            }
        }
        const double t_next = next_momentum(t);
        const double beta = (t - 1.0) / t_next;
        r1 = p1 + beta * (p1 - prev1);
        r2 = p2 + beta * (p2 - prev2);
        t = t_next;
    }
    gradient_transpose(p1, p2, h, w, gt);
    return image - tau * gt;
}

// --- smooth part and objective ---------------------------------------------

Vector smooth_gradient(const MeasurementOperator& op, const Vector& b, const Vector& x, double gamma,
                       const Vector& z, const DuplicationMap& map, const WaveletBasis& basis)
{
    require_size(x.size(), op.input_dim(), "smooth_gradient");
    require_size(b.size(), op.output_dim(), "smooth_gradient");
    Vector grad = op.adjoint(op.forward(x) - b);
    if (gamma != 0.0) {
        require_size(x.size(), map.cols, "smooth_gradient");
        require_size(z.size(), map.rows, "smooth_gradient");
        const Vector dup = expand(map, basis.analyze(x)) - z;
        grad += gamma * basis.synthesize(collapse(map, dup));
    }
    return grad;
}

double evaluate_objective(const Problem& problem, const Vector& x, const SolverConfig& config,
                          const GroupLayout& layout, const Vector* z)
{
    require_size(x.size(), problem.op->input_dim(), "evaluate_objective");
    const double fidelity = 0.5 * (problem.op->forward(x) - problem.b).squaredNorm();
    const Vector theta = problem.basis.analyze(x);
    double value = fidelity;
    if (z == nullptr) {
        require_size(theta.size(), layout.channels * layout.coeffs_per_channel, "evaluate_objective");
        value += config.lambda * group_l21_norm(expand(build_duplication_map(layout), theta), layout.offsets);
    } else {
        const DuplicationMap map = build_duplication_map(layout);
        require_size(z->size(), map.rows, "evaluate_objective");
        value += config.lambda * group_l21_norm(*z, layout.offsets);
        value += 0.5 * config.gamma_value() * (*z - expand(map, theta)).squaredNorm();
    }
    if (config.mu > 0.0) {
        value += config.mu * multichannel_tv(x, problem.basis, problem.channels);
    }
    return value;
}

double lipschitz_bound(const MeasurementOperator& op, const SolverConfig& config, Index max_multiplicity)
{
    const double norm = estimate_spectral_norm(op, config.norm_iters, config.seed);
    return 1.05 * norm * norm + config.gamma_value() * static_cast<double>(max_multiplicity);
}

// --- solvers -------------------------------------------------------------

namespace {

void validate(const Problem& problem, const SolverConfig& config)
{
    if (!problem.op) {
        throw std::invalid_argument("solver: missing measurement operator");
    }
    if (problem.channels < 1) {
        throw std::invalid_argument("solver: channel count must be >= 1");
    }
    require_size(problem.op->input_dim(), problem.signal_size(), "solver operator input");
    require_size(problem.b.size(), problem.op->output_dim(), "solver measurements");
    if (problem.ground_truth) {
        require_size(problem.ground_truth->size(), problem.signal_size(), "solver ground truth");
    }
    if (!(config.lambda > 0.0)) {
        throw std::invalid_argument("solver: lambda must be > 0");
    }
    if (!(config.mu >= 0.0)) {
        throw std::invalid_argument("solver: mu must be >= 0");
    }
    if (config.max_iters < 1) {
        throw std::invalid_argument("solver: max_iters must be >= 1");
    }
    if (config.rho && !(*config.rho > 0.0)) {
        throw std::invalid_argument("solver: rho must be > 0");
    }
}

// A signal with its images under A and Phi, kept in sync so extrapolated
// points can be formed without extra operator applications.
struct Tracked {
    Vector x;
    Vector ax;
    Vector theta;

    void combine(const Tracked& base, double c1, const Tracked& d1a, const Tracked& d1b, double c2,
                 const Tracked& d2a, const Tracked& d2b)
    {
        x = base.x + c1 * (d1a.x - d1b.x) + c2 * (d2a.x - d2b.x);
        ax = base.ax + c1 * (d1a.ax - d1b.ax) + c2 * (d2a.ax - d2b.ax);
        theta = base.theta + c1 * (d1a.theta - d1b.theta) + c2 * (d2a.theta - d2b.theta);
    }
};

std::string divergence_message(int iter, double step)
{
    std::ostringstream msg;
    msg << "objective became non-finite at iteration " << iter << " (step size " << step
        << " is probably too large)";
    return msg.str();
}

double relative_change(const Vector& next, const Vector& prev)
{
    return (next - prev).norm() / std::max(prev.norm(), 1.0);
}

} // namespace

SolverResult fista(const Problem& problem, const SolverConfig& config, SparsityModel model)
{
    validate(problem, config);
    if (model != SparsityModel::Standard && model != SparsityModel::Joint) {
        throw std::invalid_argument("fista: model must be standard or joint");
    }
    const auto start = std::chrono::steady_clock::now();
    const MeasurementOperator& op = *problem.op;
    const WaveletBasis& basis = problem.basis;
    const Index channels = problem.channels;
    const Index n = basis.size();
    const bool joint = model == SparsityModel::Joint;
    const bool use_tv = config.mu > 0.0;

    double rho = 0.0;
    if (config.rho) {
        rho = *config.rho;
    } else {
        const double norm = estimate_spectral_norm(op, config.norm_iters, config.seed);
        rho = 1.0 / std::max(1.05 * norm * norm, std::numeric_limits<double>::min());
    }

    auto sparsity_norm = [&](const Vector& theta) {
        return joint ? joint_norm(theta, channels, n) : theta.lpNorm<1>();
    };
    auto shrink = [&](Vector& theta, double tau) {
        if (joint) {
            joint_shrink_inplace(theta, tau, channels, n);
        } else {
            theta = soft_threshold(theta, tau);
        }
    };
    auto objective = [&](const Tracked& s) {
        double value = 0.5 * (s.ax - problem.b).squaredNorm() + config.lambda * sparsity_norm(s.theta);
        if (use_tv) {
            value += config.mu * multichannel_tv(s.x, basis, channels);
        }
        return value;
    };

    SolverResult result;
    result.step_size = rho;

    Tracked x;
    x.x = op.adjoint(problem.b);
    x.ax = op.forward(x.x);
    x.theta = basis.analyze(x.x);
    Tracked x_old = x;
    Tracked u = x;
    Tracked r = x;
    double f_x = objective(x);
    double t = 1.0;

    Vector residual(op.output_dim());
    Vector grad(op.input_dim());
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        residual = r.ax - problem.b;
        op.adjoint_into(residual, grad);
        const Vector y = r.x - rho * grad;

        if (use_tv) {
            Vector theta = basis.analyze(y);
            shrink(theta, 2.0 * rho * config.lambda);
            u.x = 0.5 * (basis.synthesize(theta) +
                         multichannel_prox_tv(y, basis, channels, 2.0 * rho * config.mu, config.tv_inner_iters));
            u.theta = basis.analyze(u.x);
        } else {
            u.theta = basis.analyze(y);
            shrink(u.theta, rho * config.lambda);
            u.x = basis.synthesize(u.theta);
        }
        u.ax.resize(op.output_dim());
        op.forward_into(u.x, u.ax);
        const double f_u = objective(u);
        if (!std::isfinite(f_u)) {
            throw DivergenceError(divergence_message(iter, rho));
        }

        const double change = relative_change(u.x, x.x);
        x_old = x;
        if (!config.monotone || f_u <= f_x) {
            x = u;
            f_x = f_u;
        } else {
            ++result.rejected_steps;
        }
        result.objective_trace.push_back(f_x);
        result.momentum_trace.push_back(t);
        if (problem.ground_truth) {
            result.snr_trace.push_back(snr_db(*problem.ground_truth, x.x));
        }
        result.iters_run = iter;

        const double t_next = next_momentum(t);
        // r = x + (t / t_next)(u - x) + ((t - 1) / t_next)(x - x_old)
        r.combine(x, t / t_next, u, x, (t - 1.0) / t_next, x, x_old);
        t = t_next;
        if (change < config.tol) {
            break;
        }
    }

    result.x_hat = MultiChannelSignal(channels, basis.shape(), std::move(x.x));
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

SolverResult fista_structured(const Problem& problem, const SolverConfig& config, const GroupLayout& layout)
{
    validate(problem, config);
    const double gamma = config.gamma_value();
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("fista_structured: gamma must be > 0");
    }
    require_size(layout.channels * layout.coeffs_per_channel, problem.signal_size(), "fista_structured layout");
    const auto start = std::chrono::steady_clock::now();
    const MeasurementOperator& op = *problem.op;
    const WaveletBasis& basis = problem.basis;
    const Index channels = problem.channels;
    const bool use_tv = config.mu > 0.0;
    const DuplicationMap map = build_duplication_map(layout);
    const std::span<const Index> offsets(layout.offsets);

    Vector multiplicity(map.cols);
    for (Index c = 0; c < map.cols; ++c) {
        multiplicity[c] = static_cast<double>(map.multiplicity[static_cast<std::size_t>(c)]);
    }

    const double rho = config.rho ? *config.rho : 1.0 / lipschitz_bound(op, config, map.max_multiplicity());
    const double threshold = config.lambda / gamma;

    Vector z(map.rows);
    Vector dup(map.rows);
    auto objective = [&](const Tracked& s, const Vector& zz) {
        expand_into(map, s.theta, dup);
        double value = 0.5 * (s.ax - problem.b).squaredNorm() + config.lambda * group_l21_norm(zz, offsets) +
                       0.5 * gamma * (zz - dup).squaredNorm();
        if (use_tv) {
            value += config.mu * multichannel_tv(s.x, basis, channels);
        }
        return value;
    };

    SolverResult result;
    result.step_size = rho;

    Tracked x;
    x.x = op.adjoint(problem.b);
    x.ax = op.forward(x.x);
    x.theta = basis.analyze(x.x);
    Tracked x_old = x;
    Tracked u = x;
    Tracked r = x;
    double t = 1.0;

    Vector residual(op.output_dim());
    Vector grad(op.input_dim());
    Vector coupling(map.cols);
    std::vector<double> scratch;
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        // z-step: exact minimization over z with x fixed.
        expand_into(map, x.theta, z);
        shrinkgroup_inplace(z, offsets, threshold);
        const double f_x = objective(x, z);

        // x-step: one gradient step from the extrapolated point.
        residual = r.ax - problem.b;
        op.adjoint_into(residual, grad);
        collapse_into(map, z, coupling);
        coupling = gamma * (multiplicity.cwiseProduct(r.theta) - coupling);
        for (Index off = 0; off < coupling.size(); off += basis.size()) {
            basis.idwt_inplace(coupling.segment(off, basis.size()), scratch);
        }
        grad += coupling;
        u.x = r.x - rho * grad;
        if (use_tv) {
            u.x = multichannel_prox_tv(u.x, basis, channels, rho * config.mu, config.tv_inner_iters);
        }
        u.ax.resize(op.output_dim());
        op.forward_into(u.x, u.ax);
        u.theta = u.x;
        for (Index off = 0; off < u.theta.size(); off += basis.size()) {
            basis.dwt_inplace(u.theta.segment(off, basis.size()), scratch);
        }
        const double f_u = objective(u, z);
        if (!std::isfinite(f_u)) {
            throw DivergenceError(divergence_message(iter, rho));
        }

        const double change = relative_change(u.x, x.x);
        x_old = x;
        double f_new = f_x;
        if (!config.monotone || f_u <= f_x) {
            x = u;
            f_new = f_u;
        } else {
            ++result.rejected_steps;
        }
        result.objective_trace.push_back(f_new);
        result.momentum_trace.push_back(t);
        if (problem.ground_truth) {
            result.snr_trace.push_back(snr_db(*problem.ground_truth, x.x));
        }
        result.iters_run = iter;

        const double t_next = next_momentum(t);
        r.combine(x, t / t_next, u, x, (t - 1.0) / t_next, x, x_old);
        t = t_next;
        if (change < config.tol) {
            break;
        }
    }

    result.x_hat = MultiChannelSignal(channels, basis.shape(), std::move(x.x));
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

SolverResult fcsa_structured(const Problem& problem, const SolverConfig& config, const GroupLayout& layout)
{
    // The TV prox is part of the shared iteration and switches off at mu = 0.
    return fista_structured(problem, config, layout);
}

SolverResult solve(const Problem& problem, const SolverConfig& config, SparsityModel model, const TreeLayout& tree)
{
    switch (model) {
    case SparsityModel::Standard:
    case SparsityModel::Joint:
        return fista(problem, config, model);
    case SparsityModel::Tree:
    case SparsityModel::Forest:
        return fista_structured(problem, config, build_group_layout(tree, problem.channels, model));
    }
    throw std::invalid_argument("solve: unknown model");
}

} // namespace forestcs
