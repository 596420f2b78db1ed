#include "forestcs/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <stdexcept>

namespace forestcs {

// --- CSV / SVG ------------------------------------------------------------------

std::string csv_escape(const std::string& field)
{
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_csv(const std::vector<ResultRow>& rows)
{
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const ResultRow& r : rows) {
        out << csv_escape(r.model) << ',' << format_double(r.ratio) << ',' << r.trial << ','
            << format_double(r.snr_db) << ',' << format_double(r.support_f1) << ',' << r.iters << ','
            << format_double(r.wall_time_s) << '\n';
    }
    return out.str();
}

std::string format_phase_csv(const PhaseResult& result)
{
    std::ostringstream out;
    out << "model,m,success_raw,success_monotone\n";
    for (const PhasePoint& p : result.grid) {
        out << csv_escape(p.model) << ',' << p.m << ',' << format_double(p.success_raw) << ','
            << format_double(p.success_monotone) << '\n';
    }
    return out.str();
}

namespace {

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits)
{
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

} // namespace

std::string render_svg(const std::vector<ResultRow>& rows, const std::string& title)
{
    const auto curves = median_snr(rows);
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& [model, curve] : curves) {
        for (const auto& [ratio, snr] : curve) {
            x0 = std::min(x0, ratio);
            x1 = std::max(x1, ratio);
            if (std::isfinite(snr)) {
                y0 = std::min(y0, snr);
                y1 = std::max(y1, snr);
            }
        }
    }
    if (!std::isfinite(x0)) {
        x0 = 0.0;
        x1 = 1.0;
    }
    if (!std::isfinite(y0)) {
        y0 = 0.0;
        y1 = 1.0;
    }
    if (x1 - x0 < 1e-9) {
        x0 -= 0.05;
        x1 += 0.05;
    }
    if (y1 - y0 < 1e-9) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    constexpr double W = 640, H = 400, L = 60, R = 120, T = 40, B = 50;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
        << W << ' ' << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << xml_escape(title) << "</text>\n"
        << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">sampling ratio</text>\n"
        << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">median SNR (dB)</text>\n";
    for (double v : {x0, x1}) {
        svg << "<text x=\"" << fixed(px(v), 1) << "\" y=\"" << H - B + 16
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fixed(v, 3) << "</text>\n";
    }
    for (double v : {y0, y1}) {
        svg << "<text x=\"" << L - 6 << "\" y=\"" << fixed(py(v) + 4, 1)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fixed(v, 1) << "</text>\n";
    }
    std::size_t index = 0;
    for (const auto& [model, curve] : curves) {
        const char* color = colors[index % std::size(colors)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        bool first = true;
        for (const auto& [ratio, snr] : curve) {
            if (!std::isfinite(snr)) {
                continue;
            }
            svg << (first ? "" : " ") << fixed(px(ratio), 2) << ',' << fixed(py(snr), 2);
            first = false;
        }
        svg << "\"/>\n";
        const double ly = T + 16.0 * static_cast<double>(index);
        svg << "<text x=\"" << W - R + 10 << "\" y=\"" << fixed(ly + 4, 1) << "\" fill=\"" << color
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(model) << "</text>\n";
        ++index;
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_text(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << content;
    if (!out.flush()) {
        throw std::runtime_error("failed writing " + path);
    }
}

// --- PNM --------------------------------------------------------------------------

MultiChannelSignal parse_pnm(const std::string& bytes)
{
    std::size_t pos = 0;
    auto fail = [](const std::string& why) -> MultiChannelSignal { throw std::runtime_error("pnm: " + why); };
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        }
        if (start == pos || pos - start > 9) {
            throw std::runtime_error("pnm: malformed header");
        }
        return std::stol(bytes.substr(start, pos - start));
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        return fail("expected a binary P5 or P6 header");
    }
    const Index channels = bytes[1] == '5' ? 1 : 3;
    pos = 2;
    const long width = read_int();
    const long height = read_int();
    const long maxval = read_int();
    if (width < 1 || height < 1) {
        return fail("image dimensions must be positive");
    }
    if (maxval != 255) {
        return fail("unsupported maxval " + std::to_string(maxval) + " (only 255)");
    }
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        return fail("malformed header");
    }
    ++pos; // single whitespace before the raster
    const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - pos != pixels * static_cast<std::size_t>(channels)) {
        return fail("raster size does not match the header");
    }
    MultiChannelSignal image(channels, SignalShape::grid(height, width));
    for (std::size_t p = 0; p < pixels; ++p) {
        for (Index t = 0; t < channels; ++t) {
            const auto byte = static_cast<unsigned char>(bytes[pos + p * static_cast<std::size_t>(channels) +
                                                               static_cast<std::size_t>(t)]);
            image.channel(t)[static_cast<Index>(p)] = static_cast<double>(byte) / 255.0;
        }
    }
    return image;
}

MultiChannelSignal read_pnm(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_pnm(bytes);
}

std::string encode_pnm(const MultiChannelSignal& image)
{
    const Index channels = image.channels();
    if (channels != 1 && channels != 3) {
        throw std::invalid_argument("pnm: only 1 or 3 channels can be written");
    }
    const SignalShape shape = image.shape();
    std::string out = (channels == 1 ? "P5\n" : "P6\n") + std::to_string(shape.width) + " " +
                      std::to_string(shape.height) + "\n255\n";
    const Index pixels = shape.size();
    out.reserve(out.size() + static_cast<std::size_t>(pixels * channels));
    for (Index p = 0; p < pixels; ++p) {
        for (Index t = 0; t < channels; ++t) {
            const double v = std::clamp(image.channel(t)[p], 0.0, 1.0);
            out += static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
        }
    }
    return out;
}

void write_pnm(const std::string& path, const MultiChannelSignal& image)
{
    write_text(path, encode_pnm(image));
}

MultiChannelSignal center_crop_dyadic(const MultiChannelSignal& image)
{
    auto pow2_floor = [](Index n) {
        Index p = 1;
        while (p * 2 <= n) {
            p *= 2;
        }
        return p;
    };
    const SignalShape in = image.shape();
    const SignalShape out = SignalShape::grid(pow2_floor(in.height), pow2_floor(in.width));
    const Index r0 = (in.height - out.height) / 2;
    const Index c0 = (in.width - out.width) / 2;
    MultiChannelSignal cropped(image.channels(), out);
    for (Index t = 0; t < image.channels(); ++t) {
        for (Index i = 0; i < out.height; ++i) {
            cropped.channel(t).segment(i * out.width, out.width) =
                image.channel(t).segment((r0 + i) * in.width + c0, out.width);
        }
    }
    return cropped;
}

// --- configuration ----------------------------------------------------------------

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
    }
    return out;
}

long long to_int(const std::string& key, const std::string& v)
{
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw std::invalid_argument("config: " + key + " expects an unsigned integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw std::invalid_argument("config: " + key + " expects true or false, got '" + v + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F convert)
{
    std::vector<T> out;
    for (const auto& item : split_list(v)) {
        out.push_back(static_cast<T>(convert(key, item)));
    }
    if (out.empty()) {
        throw std::invalid_argument("config: " + key + " expects a comma-separated list");
    }
    return out;
}

using Setter = void (*)(ExperimentSpec&, const std::string&, const std::string&);

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"experiment", [](ExperimentSpec& s, const std::string&, const std::string& v) { s.experiment = v; }},
        {"channels", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.data.channels = to_int(k, v); }},
        {"k", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.data.k = to_int(k, v); }},
        {"data_model", [](ExperimentSpec& s, const std::string&, const std::string& v) { s.data.model = parse_model(v); }},
        {"amplitude",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) {
             if (v == "gaussian") {
                 s.data.amplitude_law = AmplitudeLaw::Gaussian;
             } else if (v == "uniform") {
                 s.data.amplitude_law = AmplitudeLaw::UniformMagnitude;
             } else {
                 throw std::invalid_argument("config: " + k + " must be gaussian or uniform");
             }
         }},
        {"amplitude_scale",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.data.amplitude_scale = to_double(k, v); }},
        {"noise_sigma",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.data.noise_sigma = to_double(k, v); }},
        {"height", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.height = to_int(k, v); }},
        {"width", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.width = to_int(k, v); }},
        {"levels",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.levels = static_cast<int>(to_int(k, v)); }},
        {"operator",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) {
             if (v == "frequency") {
                 s.operator_family = OperatorFamily::Frequency;
             } else if (v == "gaussian") {
                 s.operator_family = OperatorFamily::Gaussian;
             } else {
                 throw std::invalid_argument("config: " + k + " must be frequency or gaussian");
             }
         }},
        {"mask_decay", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.mask_decay = to_double(k, v); }},
        {"image", [](ExperimentSpec& s, const std::string&, const std::string& v) { s.image_path = v; }},
        {"crop", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.crop = to_bool(k, v); }},
        {"models",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) {
             s.models.clear();
             for (const auto& m : split_list(v)) {
                 s.models.push_back(parse_model(m));
             }
             if (s.models.empty()) {
                 throw std::invalid_argument("config: " + k + " expects a comma-separated list");
             }
         }},
        {"ratios",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) {
             s.sampling_ratios = to_list<double>(k, v, to_double);
         }},
        {"trials", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.trials = to_int(k, v); }},
        {"lambda", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.solver.lambda = to_double(k, v); }},
        {"gamma", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.solver.gamma = to_double(k, v); }},
        {"mu", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.solver.mu = to_double(k, v); }},
        {"rho", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.solver.rho = to_double(k, v); }},
        {"max_iters",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) {
             s.solver.max_iters = static_cast<int>(to_int(k, v));
         }},
        {"tol", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.solver.tol = to_double(k, v); }},
        {"tv_inner_iters",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) {
             s.solver.tv_inner_iters = static_cast<int>(to_int(k, v));
         }},
        {"norm_iters",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) {
             s.solver.norm_iters = static_cast<int>(to_int(k, v));
         }},
        {"monotone",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.solver.monotone = to_bool(k, v); }},
        {"f1_threshold",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.f1_threshold = to_double(k, v); }},
        {"target_snr_db",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.target_snr_db = to_double(k, v); }},
        {"phase_m",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.phase_m = to_list<Index>(k, v, to_int); }},
        {"success_f1",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.success_f1 = to_double(k, v); }},
        {"success_rate",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.success_rate = to_double(k, v); }},
        {"bound_n",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.bound_n = to_list<Index>(k, v, to_int); }},
        {"bound_k",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.bound_k = to_list<Index>(k, v, to_int); }},
        {"bound_t",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.bound_t = to_list<Index>(k, v, to_int); }},
        {"bound_delta",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.bound_delta = to_double(k, v); }},
        {"seed", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.seed = to_u64(k, v); }},
        {"workers",
         [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.workers = static_cast<int>(to_int(k, v)); }},
        {"timing", [](ExperimentSpec& s, const std::string& k, const std::string& v) { s.timing = to_bool(k, v); }},
    };
    return table;
}

} // namespace

std::map<std::string, std::string> parse_config(const std::string& text)
{
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(number) + ": empty key");
        }
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_config(const std::map<std::string, std::string>& values, ExperimentSpec& spec)
{
    const auto& table = setters();
    for (const auto& [key, value] : values) {
        const auto it = table.find(key);
        if (it == table.end()) {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
        it->second(spec, key, value);
    }
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> keys;
    for (const auto& [key, setter] : setters()) {
        keys.push_back(key);
    }
    return keys;
}

} // namespace forestcs
