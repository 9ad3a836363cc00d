#pragma once

#include <cstddef>

namespace toolcal {

// Equal-width partition of [0,1]: bin i is [i/n, (i+1)/n), the last bin is
// closed at 1.0. Edges are computed as i/n so decimal stepsizes land on the
// expected boundaries (0.3 belongs to [0.3, 0.4) when the stepsize is 0.1).
class BinLayout {
public:
    // Throws InvalidArgument unless stepsize is in (0,1] and 1/stepsize is an
    // integer.
    explicit BinLayout(double stepsize);

    std::size_t count() const noexcept { return count_; }
    double stepsize() const noexcept { return stepsize_; }
    double lower(std::size_t i) const noexcept;
    double upper(std::size_t i) const noexcept;

    // Values outside [0,1] are clamped onto the first or last bin.
    std::size_t index_of(double value) const noexcept;

private:
    double stepsize_;
    std::size_t count_;
};

} // namespace toolcal
