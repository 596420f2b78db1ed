#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace forestcs {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;

/// Thrown when an input vector or signal does not have the size an operation expects.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown by the solvers when the objective stops being finite.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require_size(Index actual, Index expected, const char* what);

/// Grid dimensions of one channel. A 1D signal of length N is {1, N}.
struct SignalShape {
    Index height = 1;
    Index width = 1;

    Index size() const { return height * width; }
    bool is_2d() const { return height > 1 && width > 1; }

    static SignalShape line(Index n) { return {1, n}; }
    static SignalShape grid(Index h, Index w) { return {h, w}; }

    friend bool operator==(const SignalShape&, const SignalShape&) = default;
};

std::string to_string(const SignalShape& shape);

/// T channels of equal shape, stored stacked as [x_1; x_2; ...; x_T].
/// 2D channels are flattened row-major.
class MultiChannelSignal {
public:
    MultiChannelSignal() = default;
    MultiChannelSignal(Index channels, SignalShape shape);
    MultiChannelSignal(Index channels, SignalShape shape, Vector data);

    Index channels() const { return channels_; }
    const SignalShape& shape() const { return shape_; }
    Index channel_size() const { return shape_.size(); }
    Index size() const { return data_.size(); }

    const Vector& data() const { return data_; }
    Vector& data() { return data_; }

    auto channel(Index t) { return data_.segment(t * channel_size(), channel_size()); }
    auto channel(Index t) const { return data_.segment(t * channel_size(), channel_size()); }

private:
    Index channels_ = 0;
    SignalShape shape_;
    Vector data_;
};

} // namespace forestcs
