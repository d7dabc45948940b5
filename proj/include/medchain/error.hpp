#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medchain {

enum class Errc {
    Ok = 0,
    // crypto
    SecretTooShort,
    MalformedKey,
    DecryptionFailure,
    WrongPassword,
    CorruptKeyfile,
    // cas
    UnknownNode,
    NodeOffline,
    NoOnlineProvider,
    UnknownHash,
    MalformedHash,
    NotAProvider,
    InsufficientNodes,
    BadSignature,
    StaleSequence,
    UnknownName,
    // chain
    BadNonce,
    NotYourTurn,
    NotAnAuthority,
    EmptyPool,
    MalformedTransaction,
    MalformedBlock,
    // contracts
    BadHashLength,
    NonBase58Character,
    MalformedPart,
    InvalidPatientSignature,
    UnregisteredHospital,
    NoSuchEntry,
    BatchTooSmall,
    EmptyPointer,
    StaleMap,
    // protocol
    DuplicateFingerprint,
    NotApproved,
    UnknownPatient,
    UnknownHospital,
    NoSuchRecord,
    NoSuchGrant,
    MalformedRecord,
    DuplicateHospital,
    // simulator
    ParseError,
    InvalidConfig,
};

std::string_view to_string(Errc code) noexcept;

/// Parses the names produced by to_string; returns Errc::Ok for unknown text.
Errc errc_from_string(std::string_view name) noexcept;

class Error : public std::runtime_error {
public:
    explicit Error(Errc code)
        : std::runtime_error(std::string(to_string(code))), code_(code) {}
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace medchain
