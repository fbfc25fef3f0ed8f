#ifndef MUSICKING_ERROR_HPP
#define MUSICKING_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace musicking {

enum class ErrorKind {
    MalformedDocument,
    SchemaError,
    InvariantError,
    IoError,
    TooFewValues,
    AllMissing,
    TooFewRecords,
    MissingChorusIds,
    TooFewBeats,
    OutOfTrack,
    UnknownColumn,
    UnknownPart,
    EmptySeries,
    DegenerateSeries,
    TooFewPairs,
    LengthMismatch,
    NoValidPoints,
    TooFewGroups,
    DegenerateVariance,
    TooFewRows,
    NonFinite,
    InvalidK,
    InvalidRange,
    InvalidArgument,
    UnknownSession,
    TooFewSessions,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::MalformedDocument: return "MalformedDocument";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InvariantError: return "InvariantError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::TooFewValues: return "TooFewValues";
    case ErrorKind::AllMissing: return "AllMissing";
    case ErrorKind::TooFewRecords: return "TooFewRecords";
    case ErrorKind::MissingChorusIds: return "MissingChorusIds";
    case ErrorKind::TooFewBeats: return "TooFewBeats";
    case ErrorKind::OutOfTrack: return "OutOfTrack";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::UnknownPart: return "UnknownPart";
    case ErrorKind::EmptySeries: return "EmptySeries";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::TooFewPairs: return "TooFewPairs";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NoValidPoints: return "NoValidPoints";
    case ErrorKind::TooFewGroups: return "TooFewGroups";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InvalidK: return "InvalidK";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::UnknownSession: return "UnknownSession";
    case ErrorKind::TooFewSessions: return "TooFewSessions";
    }
    return "Unknown";
}

/// Every failure raised by the library. `kind()` identifies the failure class;
/// `row()` is set by the parsers when the failure is tied to a record.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> row = std::nullopt)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), row_(row) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::size_t> row() const noexcept { return row_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> row_;
};

} // namespace musicking

#endif
