#include "medchain/error.hpp"

#include <array>
#include <utility>

namespace medchain {

namespace {

constexpr std::array<std::pair<Errc, std::string_view>, 41> kNames{{
    {Errc::Ok, "Ok"},
    {Errc::SecretTooShort, "SecretTooShort"},
    {Errc::MalformedKey, "MalformedKey"},
    {Errc::DecryptionFailure, "DecryptionFailure"},
    {Errc::WrongPassword, "WrongPassword"},
    {Errc::CorruptKeyfile, "CorruptKeyfile"},
    {Errc::UnknownNode, "UnknownNode"},
    {Errc::NodeOffline, "NodeOffline"},
    {Errc::NoOnlineProvider, "NoOnlineProvider"},
    {Errc::UnknownHash, "UnknownHash"},
    {Errc::MalformedHash, "MalformedHash"},
    {Errc::NotAProvider, "NotAProvider"},
    {Errc::InsufficientNodes, "InsufficientNodes"},
    {Errc::BadSignature, "BadSignature"},
    {Errc::StaleSequence, "StaleSequence"},
    {Errc::UnknownName, "UnknownName"},
    {Errc::BadNonce, "BadNonce"},
    {Errc::NotYourTurn, "NotYourTurn"},
    {Errc::NotAnAuthority, "NotAnAuthority"},
    {Errc::EmptyPool, "EmptyPool"},
    {Errc::MalformedTransaction, "MalformedTransaction"},
    {Errc::MalformedBlock, "MalformedBlock"},
    {Errc::BadHashLength, "BadHashLength"},
    {Errc::NonBase58Character, "NonBase58Character"},
    {Errc::MalformedPart, "MalformedPart"},
    {Errc::InvalidPatientSignature, "InvalidPatientSignature"},
    {Errc::UnregisteredHospital, "UnregisteredHospital"},
    {Errc::NoSuchEntry, "NoSuchEntry"},
    {Errc::BatchTooSmall, "BatchTooSmall"},
    {Errc::EmptyPointer, "EmptyPointer"},
    {Errc::StaleMap, "StaleMap"},
    {Errc::DuplicateFingerprint, "DuplicateFingerprint"},
    {Errc::NotApproved, "NotApproved"},
    {Errc::UnknownPatient, "UnknownPatient"},
    {Errc::UnknownHospital, "UnknownHospital"},
    {Errc::NoSuchRecord, "NoSuchRecord"},
    {Errc::NoSuchGrant, "NoSuchGrant"},
    {Errc::MalformedRecord, "MalformedRecord"},
    {Errc::DuplicateHospital, "DuplicateHospital"},
    {Errc::ParseError, "ParseError"},
    {Errc::InvalidConfig, "InvalidConfig"},
}};

}  // namespace

std::string_view to_string(Errc code) noexcept {
    for (const auto& [c, name] : kNames) {
        if (c == code) return name;
    }
    return "Unknown";
}

Errc errc_from_string(std::string_view name) noexcept {
    for (const auto& [c, n] : kNames) {
        if (n == name) return c;
    }
    return Errc::Ok;
}

}  // namespace medchain
