#include "eps/error.hpp"

namespace eps {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::DegenerateTiming: return "degenerate timing";
    case ErrorKind::WindowUnavailable: return "window unavailable";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::DegenerateBatch: return "degenerate batch";
    case ErrorKind::TrainingDivergence: return "training divergence";
    case ErrorKind::Calibration: return "calibration error";
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::ModelCorruption: return "model corruption";
    case ErrorKind::MethodUnavailable: return "method unavailable";
    case ErrorKind::Stream: return "stream error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::CorruptFile: return "corrupt file";
    case ErrorKind::VersionMismatch: return "version mismatch";
    case ErrorKind::ShapeMismatch: return "shape mismatch";
    }
    return "unknown error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
{
}

int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::MethodUnavailable:
        return 1;
    case ErrorKind::TrainingDivergence:
    case ErrorKind::ModelCorruption:
    case ErrorKind::DegenerateBatch:
        return 3;
    default:
        return 2;
    }
}

}  // namespace eps
