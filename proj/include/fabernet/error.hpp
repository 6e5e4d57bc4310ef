#pragma once

#include <stdexcept>
#include <string>

namespace fabernet {

/// A precondition on a user-supplied parameter was violated.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The requested accuracy is outside the range where the network compiler applies.
class EpsilonTooLarge : public InvalidParameter {
public:
    EpsilonTooLarge(double eps, double eps0)
        : InvalidParameter("epsilon " + std::to_string(eps) + " must be below eps0 = " + std::to_string(eps0)),
          eps_(eps), eps0_(eps0) {}

    double epsilon() const noexcept { return eps_; }
    double eps0() const noexcept { return eps0_; }

private:
    double eps_;
    double eps0_;
};

} // namespace fabernet
