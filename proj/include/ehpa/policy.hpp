#pragma once

#include <cstddef>
#include <string>

#include "ehpa/pwl.hpp"

namespace ehpa {

/// What the transmitter sees at the start of slot k (1-based).
struct Observation {
    double b = 0.0;
    double h = 0.0;
    Access access = Access::granted;
    std::size_t k = 1;
};

/// Online power-allocation rule. Implementations must be safe to call concurrently.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual double power(const Observation& obs) const = 0;
};

}  // namespace ehpa
