#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace virtcam {

enum class ErrorCode {
    InvalidArgument,
    OutOfMemory,
    NotTopOfStack,
    WrongFormat,
    OutOfBounds,
    UnsupportedFormat,
    MalformedHeader,
    TruncatedData,
    DimensionMismatch,
    BadKernelSize,
    ImageSmallerThanWindow,
    DegenerateRoi,
    MissingDescriptors,
    BadRoi,
    TemplateTooLarge,
    ImageTooSmall,
    BadThresholds,
    BadValue,
    SourceExhausted,
    FileError,
    CascadeSyntax,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure reported by the vision stack carries
/// one of the codes above so callers (the interpreter, the protocol server,
/// the CLI) can map it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace virtcam
