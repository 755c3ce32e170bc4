#pragma once

#include <stdexcept>
#include <string>

namespace n2i {

// Shape mismatches and out-of-range parameters throw std::invalid_argument.
// Calling backward without a recorded forward pass throws std::logic_error.

/// Bubble placement ran out of attempts.
class CapacityError : public std::runtime_error {
public:
    CapacityError(const std::string& what, int placed)
        : std::runtime_error(what), placed_(placed) {}
    int placed() const { return placed_; }

private:
    int placed_;
};

/// A root-finding bracket does not contain a solution.
class NoSolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace n2i
