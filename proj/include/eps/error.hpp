#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eps {

enum class ErrorKind {
    InvalidInput,
    DegenerateTiming,
    WindowUnavailable,
    Shape,
    DegenerateBatch,
    TrainingDivergence,
    Calibration,
    Usage,
    ModelCorruption,
    MethodUnavailable,
    Stream,
    Io,
    CorruptFile,
    VersionMismatch,
    ShapeMismatch,
};

std::string_view to_string(ErrorKind kind);

// Exception carrying a machine-readable kind; every library failure goes through this type.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Process exit code for the CLI: 1 usage, 2 data error, 3 numeric failure.
int exit_code_for(ErrorKind kind);

}  // namespace eps
