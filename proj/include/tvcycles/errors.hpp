#pragma once

#include <stdexcept>
#include <string>

namespace tvcycles {

/// An iterative solver stopped before reaching its tolerance.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double residual, long iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations)
    {
    }

    double residual() const { return residual_; }
    long iterations() const { return iterations_; }

private:
    double residual_;
    long iterations_;
};

} // namespace tvcycles
