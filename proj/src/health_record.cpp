#include "medchain/health_record.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace medchain::protocol {

namespace {

constexpr std::uint8_t kRecordVersion = 1;

constexpr std::array<std::pair<Gender, std::string_view>, 4> kGenders{{
    {Gender::Female, "female"},
    {Gender::Male, "male"},
    {Gender::Other, "other"},
    {Gender::Unspecified, "unspecified"},
}};

constexpr std::array<std::string_view, 10> kDiseases{
    "influenza", "diabetes", "malaria", "dengue", "tuberculosis",
    "asthma", "hypertension", "typhoid", "migraine", "pregnancy",
};

constexpr std::array<std::string_view, 6> kLocations{"pune", "mumbai", "delhi", "chennai", "kolkata", "nagpur"};

constexpr std::array<std::string_view, 6> kFragments{"\xc3\xa9", "\xe2\x82\xb9", "\xce\xbc", " ", ", ", "\n"};

std::uint32_t parse_number(std::string_view text, std::string_view what) {
    std::uint32_t v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
        throw Error(Errc::MalformedRecord, std::string(what) + ": " + std::string(text));
    }
    return v;
}

std::string random_text(std::mt19937_64& gen, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<int> ascii(0x21, 0x7e);
    std::uniform_int_distribution<int> kind(0, 9);
    std::string out;
    for (auto n = len(gen); out.size() < n;) {
        if (kind(gen) == 0) {
            out += kFragments[gen() % kFragments.size()];
        } else {
            out += static_cast<char>(ascii(gen));
        }
    }
    return out;
}

Date random_date(std::mt19937_64& gen) {
    using namespace std::chrono;
    std::uniform_int_distribution<int> day(0, 365 * 30);
    return year_month_day{sys_days{year{2000} / January / 1} + days{day(gen)}};
}

}  // namespace

std::string_view to_string(Gender g) noexcept {
    for (const auto& [k, n] : kGenders) {
        if (k == g) return n;
    }
    return "unspecified";
}

Gender gender_from_string(std::string_view text) {
    for (const auto& [k, n] : kGenders) {
        if (n == text) return k;
    }
    throw Error(Errc::MalformedRecord, "gender: " + std::string(text));
}

std::string to_iso(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

Date parse_iso(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw Error(Errc::MalformedRecord, "date: " + std::string(text));
    }
    auto y = parse_number(text.substr(0, 4), "year");
    auto m = parse_number(text.substr(5, 2), "month");
    auto d = parse_number(text.substr(8, 2), "day");
    Date date{std::chrono::year{static_cast<int>(y)}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) throw Error(Errc::MalformedRecord, "date: " + std::string(text));
    return date;
}

Bytes HealthRecord::serialize() const {
    ByteWriter w;
    w.u8(kRecordVersion)
        .str(patient_id)
        .str(to_string(gender))
        .str(std::to_string(age))
        .str(disease)
        .str(diagnosis)
        .str(location)
        .str(medication)
        .str(suggestion)
        .str(to_iso(next_review))
        .str(notes)
        .str(to_iso(date))
        .str(doctor_name)
        .str(hospital_id);
    return std::move(w).take();
}

HealthRecord HealthRecord::parse(ByteView bytes) {
    ByteReader r(bytes, Errc::MalformedRecord);
    if (r.u8() != kRecordVersion) throw Error(Errc::MalformedRecord, "version");
    HealthRecord rec;
    rec.patient_id = r.str();
    rec.gender = gender_from_string(r.str());
    rec.age = parse_number(r.str(), "age");
    rec.disease = r.str();
    rec.diagnosis = r.str();
    rec.location = r.str();
    rec.medication = r.str();
    rec.suggestion = r.str();
    rec.next_review = parse_iso(r.str());
    rec.notes = r.str();
    rec.date = parse_iso(r.str());
    rec.doctor_name = r.str();
    rec.hospital_id = r.str();
    r.expect_done();
    return rec;
}

HealthRecord random_health_record(std::mt19937_64& gen, std::string patient_id, std::string hospital_id) {
    HealthRecord rec;
    rec.patient_id = std::move(patient_id);
    rec.gender = kGenders[gen() % kGenders.size()].first;
    rec.age = static_cast<std::uint32_t>(gen() % 110);
    rec.disease = kDiseases[gen() % kDiseases.size()];
    rec.diagnosis = random_text(gen, 80);
    rec.location = kLocations[gen() % kLocations.size()];
    rec.medication = random_text(gen, 40);
    rec.suggestion = random_text(gen, 60);
    rec.date = random_date(gen);
    rec.next_review = random_date(gen);
    rec.notes = random_text(gen, 200);
    rec.doctor_name = "Dr. " + random_text(gen, 16);
    rec.hospital_id = std::move(hospital_id);
    return rec;
}

}  // namespace medchain::protocol
