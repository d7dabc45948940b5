#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "medchain/bytes.hpp"
#include "medchain/digest.hpp"
#include "medchain/random.hpp"

namespace medchain::crypto {

inline constexpr std::size_t kMinSecretLength = 16;
inline constexpr std::size_t kPublicKeySize = 64;
inline constexpr std::size_t kPrivateKeySize = 64;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::uint8_t kKeyfileFormat = 0x01;
inline constexpr std::uint32_t kDefaultKdfIterations = 20000;
inline constexpr std::uint32_t kMaxKdfIterations = 1u << 20;

/// Simulated biometric. Only ever fed to a KDF, never stored.
struct Fingerprint {
    Bytes secret;

    static Fingerprint from_text(std::string_view text) { return {to_bytes(text)}; }
};

/// Ed25519 verification key followed by an X25519 encryption key.
class PublicKey {
public:
    using Storage = std::array<std::uint8_t, kPublicKeySize>;

    PublicKey() = default;
    explicit PublicKey(const Storage& bytes) noexcept : bytes_(bytes) {}

    /// Throws Error(Errc::MalformedKey) unless exactly 64 bytes.
    static PublicKey from_bytes(ByteView bytes);

    ByteView bytes() const noexcept { return bytes_; }
    ByteView signing_key() const noexcept { return ByteView(bytes_).first<32>(); }
    ByteView encryption_key() const noexcept { return ByteView(bytes_).last<32>(); }
    std::string hex() const { return to_hex(bytes_); }

    auto operator<=>(const PublicKey&) const = default;

private:
    Storage bytes_{};
};

/// Two 32-byte seeds: Ed25519 signing seed, X25519 scalar. Wiped on destruction.
class PrivateKey {
public:
    using Storage = std::array<std::uint8_t, kPrivateKeySize>;

    PrivateKey() = default;
    explicit PrivateKey(const Storage& bytes) noexcept : bytes_(bytes) {}
    PrivateKey(const PrivateKey&) = default;
    PrivateKey& operator=(const PrivateKey&) = default;
    ~PrivateKey();

    ByteView bytes() const noexcept { return bytes_; }
    ByteView signing_seed() const noexcept { return ByteView(bytes_).first<32>(); }
    ByteView encryption_scalar() const noexcept { return ByteView(bytes_).last<32>(); }

    bool operator==(const PrivateKey&) const = default;

private:
    Storage bytes_{};
};

struct KeyPair {
    PublicKey public_key;
    PrivateKey private_key;

    bool operator==(const KeyPair&) const = default;
};

struct Signature {
    std::array<std::uint8_t, kSignatureSize> bytes{};

    bool operator==(const Signature&) const = default;
};

/// Hybrid envelope: an ephemeral X25519 exchange wraps a fresh AES-256-GCM
/// session key, which in turn seals the body.
struct Ciphertext {
    std::array<std::uint8_t, 32> ephemeral_public{};
    Bytes sealed_key;  // nonce || wrapped session key || tag
    Bytes body;        // nonce || ciphertext || tag

    Bytes serialize() const;
    /// Throws Error(Errc::DecryptionFailure) on malformed input.
    static Ciphertext parse(ByteView bytes);

    bool operator==(const Ciphertext&) const = default;
};

/// Password-sealed keypair. Wire form: format tag, u32 KDF iterations, then
/// u32-length-prefixed salt, verifier, nonce and ciphertext.
struct EncryptedKeyfile {
    std::uint32_t kdf_iterations = kDefaultKdfIterations;
    Bytes salt;
    Bytes verifier;
    Bytes nonce;
    Bytes ciphertext;

    Bytes serialize() const;
    /// Throws Error(Errc::CorruptKeyfile) on malformed input or an iteration
    /// count outside [1, kMaxKdfIterations].
    static EncryptedKeyfile parse(ByteView bytes);

    bool operator==(const EncryptedKeyfile&) const = default;
};

/// Deterministic: equal secrets give equal keypairs. Throws SecretTooShort.
KeyPair derive_keypair(const Fingerprint& fp);

/// Fresh keypair for actors without a biometric (hospitals, IPNS names).
KeyPair generate_keypair(RandomSource& rng);

PublicKey public_from_private(const PrivateKey& key);

Ciphertext asym_encrypt(const PublicKey& recipient, ByteView plaintext, RandomSource& rng);

/// Throws Error(Errc::DecryptionFailure) for a wrong key or tampered envelope.
Bytes asym_decrypt(const PrivateKey& key, const Ciphertext& ct);

Signature sign(const PrivateKey& key, ByteView message);
bool verify(const PublicKey& key, ByteView message, const Signature& sig);

EncryptedKeyfile seal_keyfile(ByteView password, const KeyPair& kp, RandomSource& rng,
                              std::uint32_t kdf_iterations = kDefaultKdfIterations);

/// Throws WrongPassword when the verifier does not match, CorruptKeyfile when
/// authentication of the sealed body fails.
KeyPair open_keyfile(ByteView password, const EncryptedKeyfile& kf);

/// Salted one-way digest used to detect a second signup with the same fingerprint.
Digest256 fingerprint_digest(const Fingerprint& fp, ByteView registry_salt);

}  // namespace medchain::crypto
