#pragma once

#include <stdexcept>
#include <string>

namespace dsac {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IndexError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };
class ScopeError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class EstimatorError : public Error { public: using Error::Error; };
class OracleError : public Error { public: using Error::Error; };
class AggregateError : public Error { public: using Error::Error; };
class TopologyError : public Error { public: using Error::Error; };
class BoundError : public Error { public: using Error::Error; };
class CheckpointError : public Error { public: using Error::Error; };

/// Raised by the trainer; carries the iteration at which a phase failed.
class IterationError : public Error {
public:
    IterationError(long iteration, const std::string& phase, const std::string& what)
        : Error("iteration " + std::to_string(iteration) + " [" + phase + "]: " + what),
          iteration_(iteration), phase_(phase) {}

    long iteration() const noexcept { return iteration_; }
    const std::string& phase() const noexcept { return phase_; }

private:
    long iteration_;
    std::string phase_;
};

} // namespace dsac
