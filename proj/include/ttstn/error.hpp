#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttstn {

enum class ErrorCode {
    Range,
    MalformedAddress,
    Address,
    Size,
    NotExecutable,
    FileImmutable,
    SlotConflict,
    DanglingReference,
    Validation,
    Overflow,
    StaleFault,
    Capacity,
    Assignment,
    UnknownSeries,
    Parse,
    NotSubscribed,
    Configuration,
    PartialConfig,
    Timeout,
    DataPhase,
    DeadlineMissed,
    Io,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` lets callers
// and tests distinguish the cases without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ttstn
