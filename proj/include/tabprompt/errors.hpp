#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace tabprompt {

// Exit codes surfaced by the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Base of every error raised by the toolkit. Each error knows whether it is a
/// validation problem (bad input or configuration) or a runtime failure.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int exit_code)
        : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

#define TABPROMPT_DEFINE_ERROR(Name, code)                                   \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name ": " + what, code) {} \
    };

TABPROMPT_DEFINE_ERROR(SchemaError, kExitValidation)
TABPROMPT_DEFINE_ERROR(SplitError, kExitValidation)
TABPROMPT_DEFINE_ERROR(CodecError, kExitValidation)
TABPROMPT_DEFINE_ERROR(ProtocolError, kExitValidation)
TABPROMPT_DEFINE_ERROR(ConfigError, kExitValidation)
TABPROMPT_DEFINE_ERROR(TrainError, kExitRuntime)
TABPROMPT_DEFINE_ERROR(StateError, kExitRuntime)
TABPROMPT_DEFINE_ERROR(MetricError, kExitRuntime)
TABPROMPT_DEFINE_ERROR(FitError, kExitRuntime)
TABPROMPT_DEFINE_ERROR(PredictError, kExitRuntime)
TABPROMPT_DEFINE_ERROR(CvError, kExitValidation)
TABPROMPT_DEFINE_ERROR(EvalError, kExitValidation)

#undef TABPROMPT_DEFINE_ERROR

/// Malformed CSV input. Carries the 1-based record index when the problem is
/// tied to a particular record (0 otherwise).
class IngestError : public Error {
public:
    IngestError(const std::string& what, std::size_t row = 0)
        : Error("IngestError: " + what, kExitValidation), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Transport or HTTP-level failure talking to a remote service. status() is the
/// HTTP status when one was received, 0 for transport failures.
class EndpointError : public Error {
public:
    EndpointError(const std::string& what, int status = 0, std::string body = {})
        : Error("EndpointError: " + what, kExitRuntime), status_(status), body_(std::move(body)) {}
    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

}  // namespace tabprompt
