#include "forestcs/bench.hpp"

#include "forestcs/metrics.hpp"
#include "forestcs/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace forestcs {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kDataTag = 1;
constexpr std::uint64_t kOperatorTag = 2;
constexpr std::uint64_t kNoiseTag = 3;

constexpr double kInf = std::numeric_limits<double>::infinity();

Index rows_for_ratio(double ratio, Index n)
{
    return std::clamp<Index>(static_cast<Index>(std::llround(ratio * static_cast<double>(n))), 1, n);
}

OperatorPtr frequency_operator(const ExperimentSpec& spec, SignalShape shape, Index channels, double ratio,
                               std::uint64_t seed)
{
    std::vector<OperatorPtr> blocks;
    for (Index t = 0; t < channels; ++t) {
        blocks.push_back(make_partial_frequency(make_variable_density_mask(
            shape, ratio, spec.mask_decay, derive_seed(seed, {static_cast<std::uint64_t>(t)}))));
    }
    return make_block_diagonal(std::move(blocks));
}

OperatorPtr gaussian_operator(Index channels, Index rows, Index n, std::uint64_t seed)
{
    std::vector<OperatorPtr> blocks;
    for (Index t = 0; t < channels; ++t) {
        blocks.push_back(make_dense_subgaussian(rows, n, SubgaussianDistribution::Gaussian,
                                                derive_seed(seed, {static_cast<std::uint64_t>(t)})));
    }
    return make_block_diagonal(std::move(blocks));
}

SyntheticInstance make_instance(const ExperimentSpec& spec, const WaveletBasis& basis, const TreeLayout& tree,
                                Index trial)
{
    SynthesisSpec data = spec.data;
    data.seed = derive_seed(spec.seed, {kDataTag, static_cast<std::uint64_t>(trial)});
    return generate_instance(data, basis, tree);
}

struct Scored {
    double snr = -kInf;
    double f1 = 0.0;
    int iters = 0;
    double seconds = 0.0;
};

Scored solve_and_score(const Problem& problem, const SolverConfig& config, SparsityModel model,
                       const TreeLayout& tree, const Vector& truth, const std::vector<Index>& support,
                       double f1_threshold, MultiChannelSignal* keep = nullptr)
{
    Scored s;
    const auto start = std::chrono::steady_clock::now();
    try {
        SolverResult r = solve(problem, config, model, tree);
        s.snr = snr_db(truth, r.x_hat.data());
        s.f1 = support.empty() ? 0.0 : support_f1(support, problem.basis.analyze(r.x_hat.data()), f1_threshold);
        s.iters = r.iters_run;
        if (keep != nullptr) {
            *keep = std::move(r.x_hat);
        }
    } catch (const DivergenceError&) {
        // Recorded as a failed row with SNR -inf.
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

ResultRow make_row(SparsityModel model, double ratio, Index trial, const Scored& s, bool timing)
{
    return {std::string(to_string(model)), ratio, trial, s.snr, s.f1, s.iters, timing ? s.seconds : 0.0};
}

std::vector<ResultRow> run_ratios(const ExperimentSpec& spec, const std::vector<double>& ratios)
{
    spec.validate();
    const WaveletBasis basis(spec.shape(), spec.levels);
    const TreeLayout tree = build_tree_layout(basis);
    const Index channels = spec.data.channels;
    const Index n = basis.size();
    const auto n_models = static_cast<Index>(spec.models.size());
    const auto n_ratios = static_cast<Index>(ratios.size());

    std::vector<ResultRow> rows(static_cast<std::size_t>(n_ratios * n_models * spec.trials));
    parallel_for(n_ratios * spec.trials, spec.workers, [&](Index unit) {
        const Index ri = unit / spec.trials;
        const Index trial = unit % spec.trials;
        const double ratio = ratios[static_cast<std::size_t>(ri)];
        const SyntheticInstance inst = make_instance(spec, basis, tree, trial);
        const auto op_seed = derive_seed(spec.seed, {kOperatorTag, static_cast<std::uint64_t>(trial)});
        OperatorPtr op = spec.operator_family == OperatorFamily::Frequency
                             ? frequency_operator(spec, basis.shape(), channels, ratio, op_seed)
                             : gaussian_operator(channels, rows_for_ratio(ratio, n), n, op_seed);
        const auto noise_seed = derive_seed(spec.seed, {kNoiseTag, static_cast<std::uint64_t>(trial)});
        Vector b = measure(inst.x.data(), *op, spec.data.noise_sigma, noise_seed);
        const Problem problem{std::move(op), std::move(b), basis, channels, std::nullopt};
        for (Index mi = 0; mi < n_models; ++mi) {
            const SparsityModel model = spec.models[static_cast<std::size_t>(mi)];
            const Scored s = solve_and_score(problem, spec.solver, model, tree, inst.x.data(), inst.stacked_support,
                                             spec.f1_threshold);
            rows[static_cast<std::size_t>((ri * n_models + mi) * spec.trials + trial)] =
                make_row(model, ratio, trial, s, spec.timing);
        }
    });
    return rows;
}

} // namespace

void ExperimentSpec::validate() const
{
    if (trials < 1) {
        throw std::invalid_argument("experiment: trials must be >= 1");
    }
    if (sampling_ratios.empty()) {
        throw std::invalid_argument("experiment: at least one sampling ratio is required");
    }
    for (double r : sampling_ratios) {
        if (!(r > 0.0 && r <= 1.0)) {
            throw std::invalid_argument("experiment: sampling ratios must lie in (0, 1]");
        }
    }
    if (models.empty()) {
        throw std::invalid_argument("experiment: at least one model is required");
    }
    if (workers < 1) {
        throw std::invalid_argument("experiment: workers must be >= 1");
    }
    if (height < 1 || width < 1 || levels < 1) {
        throw std::invalid_argument("experiment: height, width and levels must be >= 1");
    }
    if (!(f1_threshold > 0.0 && f1_threshold < 1.0)) {
        throw std::invalid_argument("experiment: f1_threshold must lie in (0, 1)");
    }
}

std::vector<ResultRow> run_compare(const ExperimentSpec& spec)
{
    spec.validate();
    return run_ratios(spec, {spec.sampling_ratios.front()});
}

std::vector<ResultRow> run_sweep(const ExperimentSpec& spec)
{
    spec.validate();
    std::vector<double> ratios = spec.sampling_ratios;
    std::sort(ratios.begin(), ratios.end());
    ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());
    return run_ratios(spec, ratios);
}

PhaseResult run_phase(const ExperimentSpec& spec)
{
    spec.validate();
    if (spec.phase_m.empty()) {
        throw std::invalid_argument("phase: phase_m must not be empty");
    }
    std::vector<Index> ms = spec.phase_m;
    std::sort(ms.begin(), ms.end());
    ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
    const WaveletBasis basis(spec.shape(), spec.levels);
    const TreeLayout tree = build_tree_layout(basis);
    const Index channels = spec.data.channels;
    const Index n = basis.size();
    if (ms.front() < 1 || ms.back() > n) {
        throw std::invalid_argument("phase: measurement counts must lie in [1, N]");
    }
    const auto n_models = static_cast<Index>(spec.models.size());
    const auto n_m = static_cast<Index>(ms.size());

    PhaseResult result;
    result.rows.resize(static_cast<std::size_t>(n_m * n_models * spec.trials));
    parallel_for(n_m * spec.trials, spec.workers, [&](Index unit) {
        const Index mi_idx = unit / spec.trials;
        const Index trial = unit % spec.trials;
        const Index m = ms[static_cast<std::size_t>(mi_idx)];
        const SyntheticInstance inst = make_instance(spec, basis, tree, trial);
        const auto op_seed =
            derive_seed(spec.seed, {kOperatorTag, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(m)});
        OperatorPtr op = gaussian_operator(channels, m, n, op_seed);
        Vector b = op->forward(inst.x.data());
        const Problem problem{std::move(op), std::move(b), basis, channels, std::nullopt};
        const double ratio = static_cast<double>(m) / static_cast<double>(n);
        for (Index k = 0; k < n_models; ++k) {
            const SparsityModel model = spec.models[static_cast<std::size_t>(k)];
            const Scored s = solve_and_score(problem, spec.solver, model, tree, inst.x.data(), inst.stacked_support,
                                             spec.f1_threshold);
            result.rows[static_cast<std::size_t>((mi_idx * n_models + k) * spec.trials + trial)] =
                make_row(model, ratio, trial, s, spec.timing);
        }
    });

    for (Index k = 0; k < n_models; ++k) {
        const std::string name(to_string(spec.models[static_cast<std::size_t>(k)]));
        std::vector<PhasePoint> points;
        for (Index mi = 0; mi < n_m; ++mi) {
            Index hits = 0;
            for (Index trial = 0; trial < spec.trials; ++trial) {
                const ResultRow& row = result.rows[static_cast<std::size_t>((mi * n_models + k) * spec.trials + trial)];
                hits += row.support_f1 >= spec.success_f1;
            }
            points.push_back({name, ms[static_cast<std::size_t>(mi)],
                              static_cast<double>(hits) / static_cast<double>(spec.trials), 0.0});
        }
        double running = 1.0;
        for (auto it = points.rbegin(); it != points.rend(); ++it) {
            running = std::min(running, it->success_raw);
            it->success_monotone = running;
        }
        double m90 = kInf;
        for (const PhasePoint& p : points) {
            if (p.success_monotone >= spec.success_rate) {
                m90 = static_cast<double>(p.m);
                break;
            }
        }
        result.m90[name] = m90;
        result.grid.insert(result.grid.end(), points.begin(), points.end());
    }
    return result;
}

MultiChannelSignal piecewise_constant_image(Index channels, SignalShape shape, int rectangles, std::uint64_t seed)
{
    if (channels < 1 || rectangles < 0) {
        throw std::invalid_argument("piecewise_constant_image: need channels >= 1 and rectangles >= 0");
    }
    Rng rng(seed);
    std::uniform_int_distribution<Index> row(0, shape.height - 1);
    std::uniform_int_distribution<Index> col(0, shape.width - 1);
    std::uniform_real_distribution<double> level(0.2, 1.0);
    MultiChannelSignal image(channels, shape);
    for (int r = 0; r < rectangles; ++r) {
        Index r0 = row(rng), r1 = row(rng), c0 = col(rng), c1 = col(rng);
        if (r0 > r1) std::swap(r0, r1);
        if (c0 > c1) std::swap(c0, c1);
        for (Index t = 0; t < channels; ++t) {
            const double v = level(rng);
            auto ch = image.channel(t);
            for (Index i = r0; i <= r1; ++i) {
                for (Index j = c0; j <= c1; ++j) {
                    ch[i * shape.width + j] = v;
                }
            }
        }
    }
    return image;
}

ImageResult run_image(const ExperimentSpec& spec)
{
    spec.validate();
    ImageResult result;
    if (spec.image_path.empty()) {
        result.truth = piecewise_constant_image(3, spec.shape(), 8, derive_seed(spec.seed, {kDataTag}));
    } else {
        result.truth = read_pnm(spec.image_path);
        if (spec.crop) {
            result.truth = center_crop_dyadic(result.truth);
        }
    }
    const WaveletBasis basis(result.truth.shape(), spec.levels);
    const TreeLayout tree = build_tree_layout(basis);
    const Index channels = result.truth.channels();
    const Vector& truth = result.truth.data();
    const std::vector<Index> support = detected_support(basis.analyze(truth), spec.f1_threshold);

    const auto n_models = static_cast<Index>(spec.models.size());
    const auto n_ratios = static_cast<Index>(spec.sampling_ratios.size());
    result.rows.resize(static_cast<std::size_t>(n_ratios * n_models * spec.trials));
    std::vector<MultiChannelSignal> kept(static_cast<std::size_t>(n_models));
    parallel_for(n_ratios * spec.trials, spec.workers, [&](Index unit) {
        const Index ri = unit / spec.trials;
        const Index trial = unit % spec.trials;
        const double ratio = spec.sampling_ratios[static_cast<std::size_t>(ri)];
        const auto op_seed = derive_seed(spec.seed, {kOperatorTag, static_cast<std::uint64_t>(trial)});
        OperatorPtr op = frequency_operator(spec, basis.shape(), channels, ratio, op_seed);
        const auto noise_seed = derive_seed(spec.seed, {kNoiseTag, static_cast<std::uint64_t>(trial)});
        Vector b = measure(truth, *op, spec.data.noise_sigma, noise_seed);
        const Problem problem{std::move(op), std::move(b), basis, channels, std::nullopt};
        for (Index mi = 0; mi < n_models; ++mi) {
            const SparsityModel model = spec.models[static_cast<std::size_t>(mi)];
            MultiChannelSignal* keep = unit == 0 ? &kept[static_cast<std::size_t>(mi)] : nullptr;
            const Scored s =
                solve_and_score(problem, spec.solver, model, tree, truth, support, spec.f1_threshold, keep);
            result.rows[static_cast<std::size_t>((ri * n_models + mi) * spec.trials + trial)] =
                make_row(model, ratio, trial, s, spec.timing);
        }
    });
    for (Index mi = 0; mi < n_models; ++mi) {
        if (kept[static_cast<std::size_t>(mi)].channels() > 0) {
            result.reconstructions.emplace(std::string(to_string(spec.models[static_cast<std::size_t>(mi)])),
                                           std::move(kept[static_cast<std::size_t>(mi)]));
        }
    }
    return result;
}

double median(std::vector<double> values)
{
    if (values.empty()) {
        throw std::invalid_argument("median: no values");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[mid];
    }
    const double lo = values[mid - 1];
    const double hi = values[mid];
    if (lo == hi) {
        return lo; // also covers two equal infinities
    }
    return 0.5 * (lo + hi);
}

std::map<std::string, std::vector<std::pair<double, double>>> median_snr(const std::vector<ResultRow>& rows)
{
    std::map<std::string, std::map<double, std::vector<double>>> grouped;
    for (const ResultRow& r : rows) {
        grouped[r.model][r.ratio].push_back(r.snr_db);
    }
    std::map<std::string, std::vector<std::pair<double, double>>> out;
    for (auto& [model, by_ratio] : grouped) {
        for (auto& [ratio, snrs] : by_ratio) {
            out[model].emplace_back(ratio, median(std::move(snrs)));
        }
    }
    return out;
}

std::map<std::string, double> minimal_ratio(const std::vector<ResultRow>& rows, double target)
{
    std::map<std::string, double> out;
    for (const auto& [model, curve] : median_snr(rows)) {
        double best = kInf;
        for (const auto& [ratio, snr] : curve) {
            if (snr >= target) {
                best = ratio;
                break;
            }
        }
        out[model] = best;
    }
    return out;
}

void parallel_for(Index n, int workers, const std::function<void(Index)>& fn)
{
    if (workers <= 1 || n <= 1) {
        for (Index i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<Index> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        while (!failed.load()) {
            const Index i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed.store(true);
            }
        }
    };
    const auto count = static_cast<Index>(std::min<Index>(workers, n));
    std::vector<std::thread> threads;
    for (Index w = 0; w < count; ++w) {
        threads.emplace_back(work);
    }
    for (auto& t : threads) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

} // namespace forestcs
