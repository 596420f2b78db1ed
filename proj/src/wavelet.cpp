#include "forestcs/wavelet.hpp"

#include <cmath>
#include <sstream>

namespace forestcs {

namespace {

bool divisible(Index n, int levels) { return n % (Index{1} << levels) == 0; }

} // namespace

WaveletBasis::WaveletBasis(SignalShape shape, int levels, WaveletFamily family)
    : shape_(shape), levels_(levels), family_(family)
{
    if (levels < 1) {
        throw std::invalid_argument("WaveletBasis: levels must be >= 1");
    }
    if (shape.height < 1 || shape.width < 2) {
        throw std::invalid_argument("WaveletBasis: empty shape");
    }
    const bool ok = divisible(shape.width, levels) && (shape.height == 1 || divisible(shape.height, levels));
    if (!ok) {
        std::ostringstream msg;
        msg << "WaveletBasis: shape " << to_string(shape) << " is not divisible by 2^" << levels;
        throw std::invalid_argument(msg.str());
    }

    if (family == WaveletFamily::Haar) {
        const double s = 1.0 / std::sqrt(2.0);
        low_ = {s, s};
    } else {
        const double r3 = std::sqrt(3.0);
        const double d = 4.0 * std::sqrt(2.0);
        low_ = {(1 + r3) / d, (3 + r3) / d, (3 - r3) / d, (1 - r3) / d};
    }
    const auto taps = low_.size();
    high_.resize(taps);
    for (std::size_t k = 0; k < taps; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        high_[k] = sign * low_[taps - 1 - k];
    }
}

void WaveletBasis::forward_step(const double* in, double* out, Index n, Index stride_in, Index stride_out) const
{
    const Index half = n / 2;
    const auto taps = static_cast<Index>(low_.size());
    for (Index i = 0; i < half; ++i) {
        double a = 0.0;
        double d = 0.0;
        for (Index k = 0; k < taps; ++k) {
            const double v = in[((2 * i + k) % n) * stride_in];
            a += low_[static_cast<std::size_t>(k)] * v;
            d += high_[static_cast<std::size_t>(k)] * v;
        }
        out[i * stride_out] = a;
        out[(half + i) * stride_out] = d;
    }
}

void WaveletBasis::inverse_step(const double* in, double* out, Index n, Index stride_in, Index stride_out) const
{
    const Index half = n / 2;
    const auto taps = static_cast<Index>(low_.size());
    for (Index j = 0; j < n; ++j) {
        out[j * stride_out] = 0.0;
    }
    for (Index i = 0; i < half; ++i) {
        const double a = in[i * stride_in];
        const double d = in[(half + i) * stride_in];
        for (Index k = 0; k < taps; ++k) {
            out[((2 * i + k) % n) * stride_out] +=
                low_[static_cast<std::size_t>(k)] * a + high_[static_cast<std::size_t>(k)] * d;
        }
    }
}

void WaveletBasis::dwt_inplace(Eigen::Ref<Vector> data, std::vector<double>& scratch) const
{
    const Index width = shape_.width;
    const Index height = shape_.height;
    scratch.resize(static_cast<std::size_t>(std::max(width, height)));
    double* base = data.data();
    Index ww = width;
    Index hh = height;
    for (int level = 0; level < levels_; ++level) {
        for (Index r = 0; r < hh; ++r) {
            double* row = base + r * width;
            std::copy(row, row + ww, scratch.begin());
            forward_step(scratch.data(), row, ww, 1, 1);
        }
        if (height > 1) {
            for (Index c = 0; c < ww; ++c) {
                double* col = base + c;
                for (Index r = 0; r < hh; ++r) {
                    scratch[static_cast<std::size_t>(r)] = col[r * width];
                }
                forward_step(scratch.data(), col, hh, 1, width);
            }
            hh /= 2;
        }
        ww /= 2;
    }
}

void WaveletBasis::idwt_inplace(Eigen::Ref<Vector> data, std::vector<double>& scratch) const
{
    const Index width = shape_.width;
    const Index height = shape_.height;
    scratch.resize(static_cast<std::size_t>(std::max(width, height)));
    double* base = data.data();
    for (int level = levels_ - 1; level >= 0; --level) {
        const Index ww = width >> level;
        const Index hh = height > 1 ? (height >> level) : 1;
        if (height > 1) {
            for (Index c = 0; c < ww; ++c) {
                double* col = base + c;
                for (Index r = 0; r < hh; ++r) {
                    scratch[static_cast<std::size_t>(r)] = col[r * width];
                }
                inverse_step(scratch.data(), col, hh, 1, width);
            }
        }
        for (Index r = 0; r < hh; ++r) {
            double* row = base + r * width;
            std::copy(row, row + ww, scratch.begin());
            inverse_step(scratch.data(), row, ww, 1, 1);
        }
    }
}

Vector WaveletBasis::dwt(const Vector& x) const
{
    require_size(x.size(), size(), "dwt");
    Vector theta = x;
    std::vector<double> scratch;
    dwt_inplace(theta, scratch);
    return theta;
}

Vector WaveletBasis::idwt(const Vector& theta) const
{
    require_size(theta.size(), size(), "idwt");
    Vector x = theta;
    std::vector<double> scratch;
    idwt_inplace(x, scratch);
    return x;
}

Vector WaveletBasis::analyze(const Vector& stacked) const
{
    const Index n = size();
    if (stacked.size() == 0 || stacked.size() % n != 0) {
        throw DimensionError("analyze: stacked length is not a multiple of the channel size");
    }
    Vector out = stacked;
    std::vector<double> scratch;
    for (Index off = 0; off < out.size(); off += n) {
        dwt_inplace(out.segment(off, n), scratch);
    }
    return out;
}

Vector WaveletBasis::synthesize(const Vector& stacked) const
{
    const Index n = size();
    if (stacked.size() == 0 || stacked.size() % n != 0) {
        throw DimensionError("synthesize: stacked length is not a multiple of the channel size");
    }
    Vector out = stacked;
    std::vector<double> scratch;
    for (Index off = 0; off < out.size(); off += n) {
        idwt_inplace(out.segment(off, n), scratch);
    }
    return out;
}

// ---------------------------------------------------------------------------

TreeLayout build_tree_layout(const WaveletBasis& basis)
{
    const SignalShape shape = basis.shape();
    const int levels = basis.levels();
    TreeLayout tree;
    tree.n_coeffs = shape.size();
    tree.levels = levels;
    tree.parent.assign(static_cast<std::size_t>(tree.n_coeffs), TreeLayout::kNone);
    tree.children.assign(static_cast<std::size_t>(tree.n_coeffs), {});
    tree.approximation_mask.assign(static_cast<std::size_t>(tree.n_coeffs), 0);

    if (shape.height == 1) {
        tree.arity = 2;
        const Index n = shape.width;
        const Index n_approx = n >> levels;
        for (Index i = 0; i < n; ++i) {
            if (i < n_approx) {
                tree.approximation.push_back(i);
                tree.approximation_mask[static_cast<std::size_t>(i)] = 1;
                continue;
            }
            if (i < 2 * n_approx) {
                tree.roots.push_back(i);
            }
            if (i < n / 2) {
                for (Index c : {2 * i, 2 * i + 1}) {
                    tree.children[static_cast<std::size_t>(i)].push_back(c);
                    tree.parent[static_cast<std::size_t>(c)] = i;
                }
            }
        }
        return tree;
    }

    tree.arity = 4;
    const Index h = shape.height;
    const Index w = shape.width;
    const Index ha = h >> levels;
    const Index wa = w >> levels;
    for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < w; ++c) {
            const Index i = r * w + c;
            if (r < ha && c < wa) {
                tree.approximation.push_back(i);
                tree.approximation_mask[static_cast<std::size_t>(i)] = 1;
                continue;
            }
            if (r < 2 * ha && c < 2 * wa) {
                tree.roots.push_back(i);
            }
            if (r < h / 2 && c < w / 2) {
                for (Index dr = 0; dr < 2; ++dr) {
                    for (Index dc = 0; dc < 2; ++dc) {
                        const Index child = (2 * r + dr) * w + (2 * c + dc);
                        tree.children[static_cast<std::size_t>(i)].push_back(child);
                        tree.parent[static_cast<std::size_t>(child)] = i;
                    }
                }
            }
        }
    }
    return tree;
}

TreeLayout complete_binary_tree(Index n)
{
    int levels = 0;
    while ((Index{1} << (levels + 1)) <= n) {
        ++levels;
    }
    if ((Index{1} << levels) != n || levels < 1) {
        throw std::invalid_argument("complete_binary_tree: n must be a power of two >= 2");
    }
    return build_tree_layout(WaveletBasis(SignalShape::line(n), levels));
}

} // namespace forestcs
