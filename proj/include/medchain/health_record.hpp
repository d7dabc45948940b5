#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "medchain/bytes.hpp"

namespace medchain::protocol {

enum class Gender : std::uint8_t { Female, Male, Other, Unspecified };

std::string_view to_string(Gender g) noexcept;
/// Throws MalformedRecord.
Gender gender_from_string(std::string_view text);

using Date = std::chrono::year_month_day;

/// YYYY-MM-DD.
std::string to_iso(Date d);
/// Throws MalformedRecord unless a valid YYYY-MM-DD date.
Date parse_iso(std::string_view text);

struct HealthRecord {
    std::string patient_id;
    Gender gender = Gender::Unspecified;
    std::uint32_t age = 0;
    std::string disease;
    std::string diagnosis;
    std::string location;
    std::string medication;
    std::string suggestion;
    Date next_review{};
    std::string notes;
    Date date{};
    std::string doctor_name;
    std::string hospital_id;

    /// Canonical form: version byte, then every field in the order above as a
    /// u32-length-prefixed UTF-8 string (age in decimal, dates ISO-8601).
    Bytes serialize() const;
    /// Throws MalformedRecord.
    static HealthRecord parse(ByteView bytes);

    bool operator==(const HealthRecord&) const = default;
};

/// Plausible random record with free-text fields drawn from printable ASCII and a
/// few multibyte characters.
HealthRecord random_health_record(std::mt19937_64& gen, std::string patient_id, std::string hospital_id);

}  // namespace medchain::protocol
