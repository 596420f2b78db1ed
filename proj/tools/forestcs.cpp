#include "forestcs/bench.hpp"
#include "forestcs/theory.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace forestcs;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
};

ExperimentSpec load_spec(const CommonArgs& args, const std::vector<std::string>& extras, const std::string& name)
{
    ExperimentSpec spec;
    std::map<std::string, std::string> values;
    if (!args.config.empty()) {
        std::ifstream in(args.config);
        if (!in) {
            throw std::runtime_error("cannot read config " + args.config);
        }
        std::stringstream text;
        text << in.rdbuf();
        values = parse_config(text.str());
    }
    // Remaining flags are --key value or --key=value overrides.
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& arg = extras[i];
        if (arg.rfind("--", 0) != 0) {
            throw std::invalid_argument("unexpected argument '" + arg + "'");
        }
        const auto eq = arg.find('=');
        if (eq != std::string::npos) {
            values[arg.substr(2, eq - 2)] = arg.substr(eq + 1);
        } else if (i + 1 < extras.size()) {
            values[arg.substr(2)] = extras[++i];
        } else {
            throw std::invalid_argument("missing value for " + arg);
        }
    }
    apply_config(values, spec);
    if (args.seed) {
        spec.seed = *args.seed;
    }
    spec.experiment = name;
    fs::create_directories(args.out);
    return spec;
}

std::string path_in(const CommonArgs& args, const std::string& file)
{
    return (fs::path(args.out) / file).string();
}

void print_medians(const std::vector<ResultRow>& rows)
{
    for (const auto& [model, curve] : median_snr(rows)) {
        std::cout << model << ':';
        for (const auto& [ratio, snr] : curve) {
            std::cout << "  " << ratio << " -> " << format_double(snr) << " dB";
        }
        std::cout << '\n';
    }
}

int run(const std::string& name, const CommonArgs& args, const std::vector<std::string>& extras)
{
    const ExperimentSpec spec = load_spec(args, extras, name);
    if (name == "compare") {
        const auto rows = run_compare(spec);
        write_text(path_in(args, "results.csv"), format_csv(rows));
        write_text(path_in(args, "results.svg"), render_svg(rows, "median SNR"));
        print_medians(rows);
    } else if (name == "sweep") {
        const auto rows = run_sweep(spec);
        write_text(path_in(args, "results.csv"), format_csv(rows));
        write_text(path_in(args, "sweep.svg"), render_svg(rows, "median SNR vs sampling ratio"));
        print_medians(rows);
        std::ostringstream summary;
        summary << "model,min_ratio,monotone\n";
        const auto curves = median_snr(rows);
        for (const auto& [model, ratio] : minimal_ratio(rows, spec.target_snr_db)) {
            const auto& curve = curves.at(model);
            bool monotone = true;
            for (std::size_t i = 1; i < curve.size(); ++i) {
                monotone = monotone && curve[i].second >= curve[i - 1].second;
            }
            summary << model << ',' << format_double(ratio) << ',' << (monotone ? "true" : "false") << '\n';
            std::cout << model << ": reaches " << spec.target_snr_db << " dB at ratio " << format_double(ratio)
                      << (monotone ? "" : " (median curve dips)") << '\n';
        }
        write_text(path_in(args, "summary.csv"), summary.str());
    } else if (name == "phase") {
        const PhaseResult result = run_phase(spec);
        write_text(path_in(args, "results.csv"), format_csv(result.rows));
        write_text(path_in(args, "phase_grid.csv"), format_phase_csv(result));
        std::ostringstream m90;
        m90 << "model,m90\n";
        for (const auto& [model, m] : result.m90) {
            m90 << model << ',' << format_double(m) << '\n';
            std::cout << model << ": M*90 = " << format_double(m) << '\n';
        }
        write_text(path_in(args, "m90.csv"), m90.str());
    } else if (name == "bounds") {
        std::ostringstream csv;
        csv << "N,k,T,model,bound\n";
        for (Index n : spec.bound_n) {
            for (Index k : spec.bound_k) {
                for (Index t : spec.bound_t) {
                    if (k > n) {
                        continue;
                    }
                    BoundParams p;
                    p.N = n;
                    p.k = k;
                    p.T = t;
                    p.delta = spec.bound_delta;
                    for (SparsityModel m : spec.models) {
                        csv << n << ',' << k << ',' << t << ',' << to_string(m) << ','
                            << format_double(measurement_bound(m, p)) << '\n';
                    }
                }
            }
        }
        write_text(path_in(args, "bounds.csv"), csv.str());
        std::cout << csv.str();
    } else if (name == "image") {
        const ImageResult result = run_image(spec);
        write_text(path_in(args, "results.csv"), format_csv(result.rows));
        const std::string ext = result.truth.channels() == 1 ? ".pgm" : ".ppm";
        if (result.truth.channels() == 1 || result.truth.channels() == 3) {
            write_pnm(path_in(args, "truth" + ext), result.truth);
            for (const auto& [model, image] : result.reconstructions) {
                write_pnm(path_in(args, "recon_" + model + ext), image);
            }
        }
        print_medians(result.rows);
    } else if (name == "synth") {
        const WaveletBasis basis(spec.shape(), spec.levels);
        const TreeLayout tree = build_tree_layout(basis);
        SynthesisSpec data = spec.data;
        data.seed = spec.seed;
        const SyntheticInstance inst = generate_instance(data, basis, tree);
        std::ostringstream csv;
        csv << "channel,index,x,theta,in_support\n";
        const Index n = basis.size();
        for (Index t = 0; t < data.channels; ++t) {
            const auto& support = inst.supports[static_cast<std::size_t>(t)].indices;
            for (Index i = 0; i < n; ++i) {
                const bool in = std::binary_search(support.begin(), support.end(), i);
                csv << t << ',' << i << ',' << format_double(inst.x.data()[t * n + i]) << ','
                    << format_double(inst.theta[t * n + i]) << ',' << (in ? 1 : 0) << '\n';
            }
        }
        write_text(path_in(args, "synth.csv"), csv.str());
        std::cout << "wrote " << data.channels << " channels of " << n << " samples, k = " << data.k << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Structured-sparsity compressive sensing experiments"};
    app.require_subcommand(1);
    CommonArgs args;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"compare", "reconstruct synthetic data with every model at one sampling ratio"},
        {"sweep", "compare across several sampling ratios"},
        {"phase", "support-recovery success against the number of measurements"},
        {"bounds", "tabulate the measurement bounds"},
        {"image", "reconstruct a PGM/PPM image from frequency samples"},
        {"synth", "write one synthetic instance"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", args.config, "key = value configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output directory")->capture_default_str();
        sub->add_option("--seed", args.seed, "seed for every random stream");
        sub->allow_extras();
        sub->footer("Any configuration key can also be given as --key value.");
    }
    CLI11_PARSE(app, argc, argv);

    for (CLI::App* sub : app.get_subcommands()) {
        try {
            return run(sub->get_name(), args, sub->remaining());
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 1;
}
