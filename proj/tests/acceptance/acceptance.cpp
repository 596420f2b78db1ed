// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails. CSV artifacts go to --out.

#include "forestcs/bench.hpp"
#include "forestcs/metrics.hpp"
#include "forestcs/random.hpp"
#include "forestcs/solvers.hpp"
#include "forestcs/synth.hpp"
#include "forestcs/theory.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace forestcs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string out_dir;
int workers = 1;

std::string num(double v, int digits = 2)
{
    if (!std::isfinite(v)) {
        return format_double(v);
    }
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

Vector random_vector(Index n, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        v[i] = normal(rng);
    }
    return v;
}

// The synthetic family shared by criteria 1 and 2.
ExperimentSpec ordering_spec()
{
    ExperimentSpec spec;
    spec.width = 1024;
    spec.levels = 6;
    spec.data.channels = 3;
    spec.data.k = 50;
    spec.data.model = SparsityModel::Forest;
    spec.data.noise_sigma = 0.01;
    spec.operator_family = OperatorFamily::Frequency;
    spec.solver.lambda = 0.035;
    spec.solver.gamma = 0.5 * 0.035;
    spec.solver.max_iters = 400;
    spec.solver.tol = 0.0;
    spec.trials = 20;
    spec.seed = 2024;
    spec.workers = workers;
    return spec;
}

double elapsed_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome criterion1()
{
    const auto start = std::chrono::steady_clock::now();
    ExperimentSpec spec = ordering_spec();
    spec.sampling_ratios = {0.3};
    const auto rows = run_compare(spec);
    write_text(out_dir + "/criterion1.csv", format_csv(rows));
    std::map<std::string, double> med;
    for (const auto& [model, curve] : median_snr(rows)) {
        med[model] = curve.front().second;
    }
    const double seconds = elapsed_since(start);
    const double f = med.at("forest");
    const bool ok = f - med.at("joint") >= 0.5 && f - med.at("tree") >= 0.5 && f - med.at("standard") >= 0.5 &&
                    seconds <= 600.0;
    return {ok, "median SNR dB: forest " + num(f) + ", joint " + num(med.at("joint")) + ", tree " +
                    num(med.at("tree")) + ", standard " + num(med.at("standard")) + "; " + num(seconds, 0) + " s"};
}

Outcome criterion2()
{
    const auto start = std::chrono::steady_clock::now();
    ExperimentSpec spec = ordering_spec();
    spec.sampling_ratios = {0.16, 0.18, 0.20, 0.22, 0.24, 0.26, 0.28, 0.30};
    spec.target_snr_db = 15.0;
    const auto rows = run_sweep(spec);
    write_text(out_dir + "/criterion2.csv", format_csv(rows));
    write_text(out_dir + "/criterion2.svg", render_svg(rows, "median SNR vs sampling ratio"));
    const auto mins = minimal_ratio(rows, spec.target_snr_db);
    bool monotone = true;
    std::string dips;
    for (const auto& [model, curve] : median_snr(rows)) {
        for (std::size_t i = 1; i < curve.size(); ++i) {
            if (curve[i].second < curve[i - 1].second) {
                monotone = false;
                dips += " " + model + "@" + num(curve[i].first);
            }
        }
    }
    const double forest = mins.at("forest");
    bool smallest = std::isfinite(forest);
    for (const auto& [model, r] : mins) {
        if (model != "forest") {
            smallest = smallest && forest < r;
        }
    }
    const double seconds = elapsed_since(start);
    std::string detail = "ratio reaching " + num(spec.target_snr_db, 0) + " dB:";
    for (const auto& [model, r] : mins) {
        detail += " " + model + " " + num(r);
    }
    detail += monotone ? "; medians monotone" : "; median dips at" + dips;
    detail += "; " + num(seconds, 0) + " s";
    return {smallest && monotone && seconds <= 1200.0, detail};
}

Outcome criterion3()
{
    const auto start = std::chrono::steady_clock::now();
    ExperimentSpec spec;
    spec.width = 256;
    spec.levels = 4;
    spec.data.channels = 4;
    spec.data.k = 8;
    spec.data.model = SparsityModel::Forest;
    spec.data.amplitude_law = AmplitudeLaw::UniformMagnitude;
    spec.data.noise_sigma = 0.0;
    spec.solver.tol = 0.0;
    spec.trials = 50;
    spec.phase_m = {16, 24, 32, 40, 48, 56, 64, 80, 96, 128};
    spec.f1_threshold = 0.1;
    spec.success_f1 = 0.99;
    spec.success_rate = 0.9;
    spec.seed = 77;
    spec.workers = workers;
    const PhaseResult result = run_phase(spec);
    write_text(out_dir + "/criterion3.csv", format_csv(result.rows));
    write_text(out_dir + "/criterion3_grid.csv", format_phase_csv(result));
    const double f = result.m90.at("forest");
    const double j = result.m90.at("joint");
    const double s = result.m90.at("standard");
    const double t = result.m90.at("tree");
    const double seconds = elapsed_since(start);
    // An unreached forest threshold cannot demonstrate the ordering.
    const bool ok = std::isfinite(f) && f <= j && j <= s && f <= t && f <= 0.9 * s && seconds <= 1800.0;
    return {ok, "M*90: forest " + num(f, 0) + ", joint " + num(j, 0) + ", tree " + num(t, 0) + ", standard " +
                    num(s, 0) + "; " + num(seconds, 0) + " s"};
}

Outcome criterion4()
{
    const TreeLayout tree = complete_binary_tree(64);
    const std::vector<std::size_t> expected{1, 2, 5, 14, 42};
    bool ok = true;
    std::string counts;
    for (int k = 1; k <= 5; ++k) {
        const std::size_t n = enumerate_rooted_subtrees(tree, k).size();
        ok = ok && n == expected[static_cast<std::size_t>(k - 1)] && n == catalan(k);
        counts += (k > 1 ? "," : "") + std::to_string(n);
    }
    return {ok, "enumerated counts " + counts};
}

Outcome criterion5()
{
    Rng rng(5);
    // shrinkgroup against a refined grid search.
    double group_err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Vector2d v = 1.5 * Eigen::Vector2d(random_vector(2, rng));
        const double tau = 0.1 * (trial % 10 + 1);
        auto f = [&](const Eigen::Vector2d& z) { return tau * z.norm() + 0.5 * (z - v).squaredNorm(); };
        Eigen::Vector2d best = Eigen::Vector2d::Zero(), center = best;
        double best_f = f(best), half = v.cwiseAbs().maxCoeff() + 1.0;
        for (double step : {1e-2, 1e-4}) {
            const int n = static_cast<int>(std::ceil(half / step));
            for (int a = -n; a <= n; ++a) {
                for (int b = -n; b <= n; ++b) {
                    const Eigen::Vector2d z = center + Eigen::Vector2d(a * step, b * step);
                    if (f(z) < best_f) {
                        best_f = f(z);
                        best = z;
                    }
                }
            }
            center = best;
            half = 2e-2;
        }
        const Vector z = shrinkgroup(Vector(v), std::vector<Index>{0, 2}, tau);
        group_err = std::max(group_err, (Eigen::Vector2d(z) - best).cwiseAbs().maxCoeff());
    }

    // prox_l1: exact closed form.
    bool l1_exact = soft_threshold(Vector{{2.0, 0.5, -3.0}}, 1.0) == Vector{{1.0, 0.0, -2.0}};
    const WaveletBasis basis(SignalShape::line(32), 3);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector v = random_vector(64, rng);
        l1_exact = l1_exact && prox_l1(basis, v, 0.25) == basis.synthesize(soft_threshold(basis.analyze(v), 0.25));
    }

    // prox_tv against weighted-average subgradient descent with 1e5 steps.
    auto oracle = [](const Vector& v, double tau) {
        const Index h = 4, w = 4;
        Vector x = v, avg = Vector::Zero(16), g(16);
        double weight = 0.0;
        for (int s = 1; s <= 100000; ++s) {
            g = x - v;
            for (Index i = 0; i < h; ++i) {
                for (Index j = 0; j < w; ++j) {
                    const Index k = i * w + j;
                    const double d1 = i + 1 < h ? x[k + w] - x[k] : 0.0;
                    const double d2 = j + 1 < w ? x[k + 1] - x[k] : 0.0;
                    const double n = std::sqrt(d1 * d1 + d2 * d2);
                    if (n > 0.0) {
                        if (i + 1 < h) {
                            g[k + w] += tau * d1 / n;
                            g[k] -= tau * d1 / n;
                        }
                        if (j + 1 < w) {
                            g[k + 1] += tau * d2 / n;
                            g[k] -= tau * d2 / n;
                        }
                    }
                }
            }
            x -= (2.0 / (s + 1.0)) * g;
            avg += static_cast<double>(s) * x;
            weight += static_cast<double>(s);
        }
        return Vector(avg / weight);
    };
    std::vector<Vector> images;
    Vector step = Vector::Zero(16);
    for (Index i = 0; i < 4; ++i) {
        step[i * 4 + 2] = step[i * 4 + 3] = 1.0;
    }
    images.push_back(step);
    for (int i = 0; i < 4; ++i) {
        images.push_back(random_vector(16, rng));
    }
    double tv_err = 0.0;
    for (const Vector& img : images) {
        for (double tau : {0.1, 0.5}) {
            const Vector p = prox_tv(img, SignalShape::grid(4, 4), tau, 5000);
            tv_err = std::max(tv_err, (p - oracle(img, tau)).cwiseAbs().maxCoeff());
        }
    }
    const bool ok = group_err <= 1e-3 && l1_exact && tv_err <= 1e-3;
    return {ok, "shrinkgroup max err " + format_double(group_err) + ", prox_l1 exact " + (l1_exact ? "yes" : "no") +
                    ", prox_tv max err " + format_double(tv_err)};
}

Outcome criterion6()
{
    Rng rng(6);
    const WaveletBasis basis(SignalShape::line(16), 2);
    const TreeLayout tree = build_tree_layout(basis);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const SparsityModel model = trial % 2 ? SparsityModel::Forest : SparsityModel::Tree;
        const DuplicationMap map = build_duplication_map(build_group_layout(tree, 2, model));
        const double gamma = trial < 10 ? 0.0 : 0.05 + 0.1 * trial;
        const auto a = make_dense_subgaussian(12, 32, SubgaussianDistribution::Gaussian, 600 + trial);
        const Vector b = random_vector(12, rng);
        const Vector x = random_vector(32, rng);
        const Vector z = random_vector(map.rows, rng);
        auto f = [&](const Vector& v) {
            double value = 0.5 * (a->forward(v) - b).squaredNorm();
            if (gamma != 0.0) {
                value += 0.5 * gamma * (z - expand(map, basis.analyze(v))).squaredNorm();
            }
            return value;
        };
        const Vector g = smooth_gradient(*a, b, x, gamma, z, map, basis);
        Vector fd(32);
        for (Index i = 0; i < 32; ++i) {
            Vector xp = x, xm = x;
            xp[i] += 1e-5;
            xm[i] -= 1e-5;
            fd[i] = (f(xp) - f(xm)) / 2e-5;
        }
        worst = std::max(worst, (g - fd).norm() / g.norm());
    }
    return {worst <= 1e-5, "worst relative error " + format_double(worst)};
}

Outcome criterion7()
{
    Rng rng(7);
    double worst_pr = 0.0, worst_parseval = 0.0;
    int signals = 0;
    for (WaveletFamily family : {WaveletFamily::Haar, WaveletFamily::Daubechies4}) {
        for (auto [shape, levels] : {std::pair{SignalShape::line(256), 5}, std::pair{SignalShape::grid(32, 32), 3}}) {
            const WaveletBasis basis(shape, levels, family);
            for (int i = 0; i < 100; ++i) {
                const Vector x = random_vector(shape.size(), rng);
                const Vector theta = basis.dwt(x);
                worst_pr = std::max(worst_pr, (basis.idwt(theta) - x).cwiseAbs().maxCoeff());
                worst_parseval = std::max(worst_parseval, std::abs(theta.norm() - x.norm()));
                ++signals;
            }
        }
    }
    const Vector haar = WaveletBasis(SignalShape::line(4), 2).dwt(Vector::Ones(4));
    const bool haar_ok = (haar - Vector{{2.0, 0.0, 0.0, 0.0}}).cwiseAbs().maxCoeff() <= 1e-14;
    return {worst_pr <= 1e-10 && worst_parseval <= 1e-10 && haar_ok,
            std::to_string(signals) + " signals, reconstruction err " + format_double(worst_pr) +
                ", Parseval err " + format_double(worst_parseval) + ", Haar example " + (haar_ok ? "ok" : "wrong")};
}

Outcome criterion8()
{
    int runs = 0;
    int violations = 0;
    auto check = [&](const std::vector<double>& trace) {
        ++runs;
        for (std::size_t i = 1; i < trace.size(); ++i) {
            if (trace[i] > trace[i - 1] + 1e-12 * std::max(1.0, std::abs(trace[i - 1]))) {
                ++violations;
            }
        }
    };
    // 1D forest-sparse instances, every model.
    const WaveletBasis basis(SignalShape::line(256), 4);
    const TreeLayout tree = build_tree_layout(basis);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        SynthesisSpec data;
        data.channels = 3;
        data.k = 10;
        data.seed = seed;
        const SyntheticInstance inst = generate_instance(data, basis, tree);
        std::vector<OperatorPtr> blocks;
        for (std::uint64_t t = 0; t < 3; ++t) {
            blocks.push_back(make_partial_frequency(
                make_variable_density_mask(basis.shape(), 0.3, 3.0, derive_seed(seed, {t}))));
        }
        const OperatorPtr op = make_block_diagonal(std::move(blocks));
        const Problem problem{op, measure(inst.x.data(), *op, 0.01, seed), basis, 3, std::nullopt};
        SolverConfig cfg;
        cfg.tol = 0.0;
        for (SparsityModel m : {SparsityModel::Standard, SparsityModel::Joint, SparsityModel::Tree,
                                SparsityModel::Forest}) {
            check(solve(problem, cfg, m, tree).objective_trace);
        }
    }
    // 2D images with TV.
    const WaveletBasis image_basis(SignalShape::grid(32, 32), 3);
    const GroupLayout layout = build_group_layout(build_tree_layout(image_basis), 3, SparsityModel::Forest);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const MultiChannelSignal x = piecewise_constant_image(3, image_basis.shape(), 6, seed);
        std::vector<OperatorPtr> blocks;
        for (std::uint64_t t = 0; t < 3; ++t) {
            blocks.push_back(make_partial_frequency(
                make_variable_density_mask(image_basis.shape(), 0.25, 3.0, derive_seed(seed, {t}))));
        }
        const OperatorPtr op = make_block_diagonal(std::move(blocks));
        const Problem problem{op, measure(x.data(), *op, 0.01, seed), image_basis, 3, std::nullopt};
        SolverConfig cfg;
        cfg.tol = 0.0;
        cfg.mu = 0.02;
        check(fcsa_structured(problem, cfg, layout).objective_trace);
        check(fista(problem, cfg, SparsityModel::Joint).objective_trace);
    }
    return {violations == 0, std::to_string(runs) + " runs, " + std::to_string(violations) + " increases"};
}

Outcome criterion9()
{
    const auto start = std::chrono::steady_clock::now();
    ConcentrationSpec spec;
    spec.T = 4;
    spec.N = 64;
    spec.k = 4;
    spec.M = 16;
    spec.trials = 200;
    int wider = 0;
    const int batches = 20;
    for (int batch = 0; batch < batches; ++batch) {
        spec.seed = derive_seed(900, {static_cast<std::uint64_t>(batch)});
        spec.energy_profile = {};
        const double equal = rip_concentration_experiment(spec).std;
        spec.energy_profile = {1, 0, 0, 0};
        const double one_hot = rip_concentration_experiment(spec).std;
        wider += one_hot > equal;
    }

    // Dense operator: the two profiles should agree within twice the standard
    // error of the difference of sample standard deviations.
    spec.block_diagonal = false;
    spec.trials = 1000;
    spec.seed = 901;
    spec.energy_profile = {};
    const ConcentrationStats dense_equal = rip_concentration_experiment(spec);
    spec.energy_profile = {1, 0, 0, 0};
    spec.seed = 902;
    const ConcentrationStats dense_one_hot = rip_concentration_experiment(spec);
    const double n = static_cast<double>(spec.trials);
    const double se = std::sqrt((dense_equal.std * dense_equal.std + dense_one_hot.std * dense_one_hot.std) /
                                (2.0 * (n - 1.0)));
    const double gap = std::abs(dense_equal.std - dense_one_hot.std);
    const double seconds = elapsed_since(start);
    const bool ok = wider >= 19 && gap <= 2.0 * se && seconds <= 600.0;
    return {ok, "block-diagonal one-hot wider in " + std::to_string(wider) + "/20 batches; dense std gap " +
                    num(gap, 4) + " vs 2*SE " + num(2.0 * se, 4) + "; " + num(seconds, 0) + " s"};
}

Outcome criterion10()
{
    const std::vector<Index> ns{64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384, 32768};
    const std::vector<Index> ks{2, 3, 4, 6, 8, 12, 16, 24, 32, 48};
    const std::vector<Index> ts{2, 4, 8};
    int checked = 0;
    int broken = 0;
    for (Index n : ns) {
        for (Index k : ks) {
            if (n / k < 4) {
                continue;
            }
            for (Index t : ts) {
                BoundParams p;
                p.N = n;
                p.k = k;
                p.T = t;
                const double f = measurement_bound(SparsityModel::Forest, p);
                const double j = measurement_bound(SparsityModel::Joint, p);
                const double tr = measurement_bound(SparsityModel::Tree, p);
                const double s = measurement_bound(SparsityModel::Standard, p);
                ++checked;
                broken += !(f <= j && f <= tr && j <= s && tr <= s);
            }
        }
    }

    bool termwise = true;
    for (Index n : ns) {
        for (Index k : ks) {
            BoundParams p;
            p.N = n;
            p.k = k;
            p.T = 1;
            const BoundTerms f = measurement_bound_terms(SparsityModel::Forest, p);
            const BoundTerms t = measurement_bound_terms(SparsityModel::Tree, p);
            termwise = termwise && f.log_subspaces == t.log_subspaces && f.dimension_term == t.dimension_term &&
                       f.log_two == t.log_two && f.t == t.t && f.prefactor == t.prefactor;
        }
    }

    Rng rng(10);
    std::uniform_int_distribution<Index> pick_t(1, 8);
    int gamma_bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Index t = pick_t(rng);
        MultiChannelSignal x(t, SignalShape::line(16));
        x.data() = random_vector(t * 16, rng);
        if (trial % 4 == 0) {
            x.channel(0) *= 50.0;
        }
        const EnergyFactors f = energy_factors(x);
        const double T = static_cast<double>(t);
        gamma_bad += !(f.gamma_2 >= 1.0 - 1e-12 && f.gamma_2 <= T + 1e-12 && f.gamma_inf >= 1.0 - 1e-12 &&
                       f.gamma_inf <= T + 1e-12);
    }
    return {broken == 0 && termwise && gamma_bad == 0,
            std::to_string(checked) + " grid points, " + std::to_string(broken) + " ordering violations; T=1 termwise " +
                (termwise ? "equal" : "different") + "; " + std::to_string(gamma_bad) + "/1000 Gamma violations"};
}

Outcome criterion11()
{
    ExperimentSpec spec;
    spec.width = 256;
    spec.levels = 4;
    spec.data.channels = 3;
    spec.data.k = 10;
    spec.trials = 6;
    spec.sampling_ratios = {0.25, 0.35};
    spec.solver.max_iters = 100;
    spec.seed = 11;
    spec.workers = 1;
    const std::string a = format_csv(run_sweep(spec));
    const std::string b = format_csv(run_sweep(spec));
    spec.workers = std::max(3, workers);
    const std::string c = format_csv(run_sweep(spec));

    ExperimentSpec phase = spec;
    phase.data.k = 6;
    phase.data.noise_sigma = 0.0;
    phase.trials = 4;
    phase.phase_m = {32, 64};
    phase.workers = 1;
    const std::string p1 = format_phase_csv(run_phase(phase)) + format_csv(run_phase(phase).rows);
    phase.workers = std::max(3, workers);
    const std::string p2 = format_phase_csv(run_phase(phase)) + format_csv(run_phase(phase).rows);
    write_text(out_dir + "/criterion11.csv", a);
    const bool ok = a == b && a == c && p1 == p2;
    return {ok, std::string("sweep CSV ") + (a == b && a == c ? "identical" : "differs") +
                    " across reruns and worker counts; phase CSV " + (p1 == p2 ? "identical" : "differs")};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    out_dir = "acceptance_out";
    std::vector<int> only;
    workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--out", out_dir, "directory for CSV artifacts");
    app.add_option("--only", only, "run only these criteria");
    app.add_option("--workers", workers, "worker threads for the Monte-Carlo criteria");
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(out_dir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"model ordering on synthetic forest-sparse data", criterion1},
        {"forest needs the smallest sampling ratio", criterion2},
        {"phase-transition ordering", criterion3},
        {"Catalan counts match enumeration", criterion4},
        {"proximal operators match oracles", criterion5},
        {"smooth gradient matches finite differences", criterion6},
        {"wavelet reconstruction and Parseval", criterion7},
        {"objective never increases", criterion8},
        {"block-diagonal energy dependence", criterion9},
        {"bound formulas", criterion10},
        {"byte-identical reruns", criterion11},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) {
            continue;
        }
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("threw: ") + e.what()};
        }
        failures += !outcome.pass;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " ("
                  << outcome.detail << ")" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
