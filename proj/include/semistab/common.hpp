#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace semistab {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kEulerGamma = std::numbers::egamma;

// Raised for inputs outside an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Raised when an iterative or adaptive procedure misses its target accuracy.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const { return achieved_; }

private:
    double achieved_;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

struct CQuadResult {
    cplx value{};
    double error = 0.0;
};

}  // namespace semistab
