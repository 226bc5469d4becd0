#pragma once

#include <stdexcept>
#include <string>

namespace fdi {

// Error taxonomy shared by all modules. The CLI maps categories to exit
// codes: config/parse -> 1, I/O -> 2, domain -> 3.
enum class Errc {
    // configuration / parsing
    ConfigError,
    ParseError,
    // I/O
    IoError,
    // domain
    EmptyTrace,
    UnknownFault,
    ShapeError,
    NotValid,
    InsufficientCalibration,
    NoActiveWindow,
    DegenerateWindow,
    LogDomainError,
    InvalidWindow,
    MissingLabel,
    NoTransition,
    EmptyNode,
    SingleClass,
    InsufficientData,
    MissingBaseline,
    UnknownNode,
    InvalidDag,
    InvalidProfile,
    InvalidArgument,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::ConfigError: return "ConfigError";
        case Errc::ParseError: return "ParseError";
        case Errc::IoError: return "IoError";
        case Errc::EmptyTrace: return "EmptyTrace";
        case Errc::UnknownFault: return "UnknownFault";
        case Errc::ShapeError: return "ShapeError";
        case Errc::NotValid: return "NotValid";
        case Errc::InsufficientCalibration: return "InsufficientCalibration";
        case Errc::NoActiveWindow: return "NoActiveWindow";
        case Errc::DegenerateWindow: return "DegenerateWindow";
        case Errc::LogDomainError: return "LogDomainError";
        case Errc::InvalidWindow: return "InvalidWindow";
        case Errc::MissingLabel: return "MissingLabel";
        case Errc::NoTransition: return "NoTransition";
        case Errc::EmptyNode: return "EmptyNode";
        case Errc::SingleClass: return "SingleClass";
        case Errc::InsufficientData: return "InsufficientData";
        case Errc::MissingBaseline: return "MissingBaseline";
        case Errc::UnknownNode: return "UnknownNode";
        case Errc::InvalidDag: return "InvalidDag";
        case Errc::InvalidProfile: return "InvalidProfile";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

// Exit code convention used by the CLI (and asserted by black-box tests).
inline int exit_code(Errc c) {
    switch (c) {
        case Errc::ConfigError:
        case Errc::ParseError:
            return 1;
        case Errc::IoError:
            return 2;
        default:
            return 3;
    }
}

}  // namespace fdi
