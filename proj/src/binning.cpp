#include "toolcal/binning.hpp"

#include <cmath>
#include <string>

#include "toolcal/error.hpp"

namespace toolcal {

BinLayout::BinLayout(double stepsize) : stepsize_(stepsize), count_(0)
{
    if (!(stepsize > 0.0 && stepsize <= 1.0)) {
        throw InvalidArgument("stepsize must be in (0,1], got " + std::to_string(stepsize));
    }
    double bins = 1.0 / stepsize;
    double rounded = std::round(bins);
    if (std::fabs(bins - rounded) > 1e-9 * rounded) {
        throw InvalidArgument("1/stepsize must be an integer, got stepsize " + std::to_string(stepsize));
    }
    count_ = static_cast<std::size_t>(rounded);
}

double BinLayout::lower(std::size_t i) const noexcept
{
    return static_cast<double>(i) / static_cast<double>(count_);
}

double BinLayout::upper(std::size_t i) const noexcept
{
    return i + 1 >= count_ ? 1.0 : static_cast<double>(i + 1) / static_cast<double>(count_);
}

std::size_t BinLayout::index_of(double value) const noexcept
{
    if (!(value > 0.0)) {
        return 0;
    }
    if (value >= 1.0) {
        return count_ - 1;
    }
    auto i = static_cast<std::size_t>(std::floor(value * static_cast<double>(count_)));
    if (i >= count_) {
        i = count_ - 1;
    }
    // Settle rounding at the edges against the same i/n bounds used above.
    while (i + 1 < count_ && value >= lower(i + 1)) {
        ++i;
    }
    while (i > 0 && value < lower(i)) {
        --i;
    }
    return i;
}

} // namespace toolcal
