#pragma once

#include "forestcs/groups.hpp"
#include "forestcs/signal.hpp"
#include "forestcs/solvers.hpp"
#include "forestcs/synth.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace forestcs {

enum class OperatorFamily { Frequency, Gaussian };

struct ExperimentSpec {
    std::string experiment = "compare"; // compare | sweep | phase | bounds | image | synth

    // Synthetic data. `data.model` is the model the data is drawn from,
    // independent of the models used for reconstruction.
    SynthesisSpec data;
    Index height = 1;
    Index width = 1024;
    int levels = 6;
    OperatorFamily operator_family = OperatorFamily::Frequency;
    double mask_decay = 3.0;

    // Image experiment.
    std::string image_path;
    bool crop = true;

    std::vector<SparsityModel> models{SparsityModel::Standard, SparsityModel::Joint, SparsityModel::Tree,
                                      SparsityModel::Forest};
    std::vector<double> sampling_ratios{0.3};
    Index trials = 20;
    SolverConfig solver;
    double f1_threshold = 0.1;

    // Sweep: the SNR a model has to reach.
    double target_snr_db = 15.0;
    // Phase: measurements per channel and the per-trial success rule.
    std::vector<Index> phase_m{16, 24, 32, 40, 48, 56, 64, 80, 96};
    double success_f1 = 0.99;
    double success_rate = 0.9;

    // Bounds table: every (N, k, T) combination with k <= N.
    std::vector<Index> bound_n{256, 1024, 4096};
    std::vector<Index> bound_k{4, 8, 16, 32};
    std::vector<Index> bound_t{1, 2, 4};
    double bound_delta = 0.5;

    std::uint64_t seed = 0;
    int workers = 1;
    bool timing = false; // write wall-clock seconds into the CSV

    SignalShape shape() const { return {height, width}; }
    void validate() const;
};

struct ResultRow {
    std::string model;
    double ratio = 0.0;
    Index trial = 0;
    double snr_db = 0.0;
    double support_f1 = 0.0;
    int iters = 0;
    double wall_time_s = 0.0;
};

// --- experiments ------------------------------------------------------------

/// One row per (ratio, model, trial), in that order. Uses the first ratio.
std::vector<ResultRow> run_compare(const ExperimentSpec& spec);

/// run_compare for every ratio; each trial reuses its signal and mask seed across
/// ratios, so masks grow with the ratio.
std::vector<ResultRow> run_sweep(const ExperimentSpec& spec);

struct PhasePoint {
    std::string model;
    Index m = 0;
    double success_raw = 0.0;
    double success_monotone = 0.0; // min over all M' >= M of the raw rate
};

struct PhaseResult {
    std::vector<ResultRow> rows; // ratio column holds M / N
    std::vector<PhasePoint> grid;
    std::map<std::string, double> m90; // +inf when never reached
};

/// Noiseless Gaussian-block measurements for every M in spec.phase_m.
PhaseResult run_phase(const ExperimentSpec& spec);

struct ImageResult {
    std::vector<ResultRow> rows;
    MultiChannelSignal truth;
    std::map<std::string, MultiChannelSignal> reconstructions;
};

/// Reconstruct an image (or a built-in piecewise-constant test image when no
/// path is given) from variable-density frequency samples at each ratio. The
/// F1 column compares against the ground truth's own coefficients above the
/// same threshold fraction.
ImageResult run_image(const ExperimentSpec& spec);

// --- summaries ----------------------------------------------------------------

/// Median SNR per model and ratio, ratios ascending.
std::map<std::string, std::vector<std::pair<double, double>>> median_snr(const std::vector<ResultRow>& rows);

/// Smallest ratio whose median SNR reaches `target`; +inf if none does.
std::map<std::string, double> minimal_ratio(const std::vector<ResultRow>& rows, double target);

double median(std::vector<double> values);

// --- synthetic images ------------------------------------------------------

/// Rectangles shared by all channels, with independent intensities per channel.
MultiChannelSignal piecewise_constant_image(Index channels, SignalShape shape, int rectangles, std::uint64_t seed);

// --- output -------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "model,ratio,trial,snr_db,support_f1,iters,wall_time_s";

/// RFC 4180 field quoting.
std::string csv_escape(const std::string& field);
/// Shortest decimal form that reads back to the same double; inf / -inf / nan for specials.
std::string format_double(double v);
std::string format_csv(const std::vector<ResultRow>& rows);
std::string format_phase_csv(const PhaseResult& result);
/// Line chart of median SNR against ratio, one polyline per model.
std::string render_svg(const std::vector<ResultRow>& rows, const std::string& title);
/// Writes the file; throws std::runtime_error when it cannot.
void write_text(const std::string& path, const std::string& content);

// --- images -----------------------------------------------------------------

/// Binary P5 (one channel) or P6 (three channels), maxval 255; samples scaled to [0, 1].
MultiChannelSignal read_pnm(const std::string& path);
MultiChannelSignal parse_pnm(const std::string& bytes);
void write_pnm(const std::string& path, const MultiChannelSignal& image);
std::string encode_pnm(const MultiChannelSignal& image);
/// Center crop each axis to the largest power of two that fits.
MultiChannelSignal center_crop_dyadic(const MultiChannelSignal& image);

// --- configuration ------------------------------------------------------------

/// Flat `key = value` lines; `#` starts a comment. Later keys override earlier ones.
std::map<std::string, std::string> parse_config(const std::string& text);
/// Applies known keys to the spec; throws std::invalid_argument on unknown keys or bad values.
void apply_config(const std::map<std::string, std::string>& values, ExperimentSpec& spec);
/// The keys apply_config understands.
std::vector<std::string> config_keys();

// --- work pool ----------------------------------------------------------------

/// Calls fn(i) for i in [0, n) on up to `workers` threads. Callers write results
/// into slot i, so output order never depends on scheduling. The first
/// exception thrown by fn is rethrown after all threads stop.
void parallel_for(Index n, int workers, const std::function<void(Index)>& fn);

} // namespace forestcs
