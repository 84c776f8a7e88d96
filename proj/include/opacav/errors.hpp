#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace opacav {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter set or option violates its invariants.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Newton iteration did not reach the residual tolerance. Carries the last
/// iterate so callers can inspect where it stalled.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double delta, std::complex<double> a,
                   std::complex<double> b, double residual)
        : Error(what), delta_(delta), a_(a), b_(b), residual_(residual) {}

    double delta() const noexcept { return delta_; }
    std::complex<double> a() const noexcept { return a_; }
    std::complex<double> b() const noexcept { return b_; }
    double residual() const noexcept { return residual_; }

private:
    double delta_;
    std::complex<double> a_, b_;
    double residual_;
};

/// Seedless request at or above threshold on resonance: the trivial state is
/// unstable and no oscillation amplitude is modeled.
class AboveThresholdUnstableSeedless : public Error {
public:
    using Error::Error;
};

/// Cold and warm-started solves landed on different branches.
class MultiStability : public Error {
public:
    using Error::Error;
};

/// Sideband response matrix is singular (threshold-degenerate point).
class SingularResponse : public Error {
public:
    using Error::Error;
};

class FeatureAbsent : public Error {
public:
    using Error::Error;
};

class PeakNotFound : public Error {
public:
    using Error::Error;
};

} // namespace opacav
