#pragma once

#include <stdexcept>
#include <string>

namespace ahsse {

// Exit codes used by the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitNumericalFailure = 3,
    kExitIoError = 4,
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientQuadrature : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KernelNotPSD : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidKernel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridTooCoarse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HorizonNotConverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalBlowup : std::runtime_error {
    NumericalBlowup(const std::string& what, long step)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_index(step) {}
    long step_index;
};

}  // namespace ahsse
