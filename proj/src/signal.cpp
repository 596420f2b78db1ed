#include "forestcs/signal.hpp"

#include <sstream>

namespace forestcs {

void require_size(Index actual, Index expected, const char* what)
{
    if (actual != expected) {
        std::ostringstream msg;
        msg << what << ": expected length " << expected << ", got " << actual;
        throw DimensionError(msg.str());
    }
}

std::string to_string(const SignalShape& shape)
{
    std::ostringstream s;
    if (shape.height == 1) {
        s << shape.width;
    } else {
        s << shape.height << "x" << shape.width;
    }
    return s.str();
}

MultiChannelSignal::MultiChannelSignal(Index channels, SignalShape shape)
    : channels_(channels), shape_(shape), data_(Vector::Zero(channels * shape.size()))
{
    if (channels < 1 || shape.height < 1 || shape.width < 1) {
        throw std::invalid_argument("MultiChannelSignal: channels and dims must be positive");
    }
}

MultiChannelSignal::MultiChannelSignal(Index channels, SignalShape shape, Vector data)
    : MultiChannelSignal(channels, shape)
{
    require_size(data.size(), channels * shape.size(), "MultiChannelSignal");
    data_ = std::move(data);
}

} // namespace forestcs
