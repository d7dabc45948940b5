#include "medchain/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <memory>
#include <optional>

namespace medchain::crypto {

namespace {

constexpr std::size_t kGcmNonceSize = 12;
constexpr std::size_t kGcmTagSize = 16;
constexpr std::size_t kSaltSize = 16;
constexpr std::size_t kVerifierSize = 16;
constexpr std::uint32_t kKeypairKdfIterations = 10000;
constexpr std::string_view kKeypairSalt = "medchain/keypair/v1";

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const noexcept { EVP_PKEY_free(p); }
};
struct PkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* p) const noexcept { EVP_PKEY_CTX_free(p); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const noexcept { EVP_MD_CTX_free(p); }
};
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const noexcept { EVP_CIPHER_CTX_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

PkeyPtr raw_private(int type, ByteView seed) {
    PkeyPtr key(EVP_PKEY_new_raw_private_key(type, nullptr, seed.data(), seed.size()));
    if (!key) throw Error(Errc::MalformedKey, "cannot load private key");
    return key;
}

PkeyPtr raw_public(int type, ByteView bytes) {
    PkeyPtr key(EVP_PKEY_new_raw_public_key(type, nullptr, bytes.data(), bytes.size()));
    if (!key) throw Error(Errc::MalformedKey, "cannot load public key");
    return key;
}

std::array<std::uint8_t, 32> raw_public_of(EVP_PKEY* key) {
    std::array<std::uint8_t, 32> out{};
    std::size_t len = out.size();
    if (EVP_PKEY_get_raw_public_key(key, out.data(), &len) != 1 || len != out.size()) {
        throw Error(Errc::MalformedKey, "cannot extract public key");
    }
    return out;
}

std::array<std::uint8_t, 32> x25519_shared(ByteView scalar, ByteView peer_public) {
    auto priv = raw_private(EVP_PKEY_X25519, scalar);
    auto peer = raw_public(EVP_PKEY_X25519, peer_public);
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new(priv.get(), nullptr));
    std::array<std::uint8_t, 32> out{};
    std::size_t len = out.size();
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 || EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
        EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
        throw Error(Errc::MalformedKey, "key agreement failed");
    }
    return out;
}

Bytes pbkdf2(ByteView password, ByteView salt, std::uint32_t iterations, std::size_t length) {
    Bytes out(length);
    if (PKCS5_PBKDF2_HMAC(reinterpret_cast<const char*>(password.data()), static_cast<int>(password.size()),
                          salt.data(), static_cast<int>(salt.size()), static_cast<int>(iterations), EVP_sha256(),
                          static_cast<int>(length), out.data()) != 1) {
        throw std::runtime_error("PBKDF2 failed");
    }
    return out;
}

// Returns nonce || ciphertext || tag.
Bytes gcm_seal(ByteView key, ByteView nonce, ByteView aad, ByteView plaintext) {
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    Bytes out(nonce.begin(), nonce.end());
    out.resize(nonce.size() + plaintext.size() + kGcmTagSize);
    int len = 0;
    bool ok = ctx && EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr) == 1 &&
              EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) == 1 &&
              (aad.empty() ||
               EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1);
    std::uint8_t* ct = out.data() + nonce.size();
    ok = ok && EVP_EncryptUpdate(ctx.get(), ct, &len, plaintext.data(), static_cast<int>(plaintext.size())) == 1;
    int tail = 0;
    ok = ok && EVP_EncryptFinal_ex(ctx.get(), ct + len, &tail) == 1 &&
         EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kGcmTagSize, ct + plaintext.size()) == 1;
    if (!ok) throw std::runtime_error("AES-GCM encryption failed");
    return out;
}

std::optional<Bytes> gcm_open(ByteView key, ByteView aad, ByteView sealed) {
    if (sealed.size() < kGcmNonceSize + kGcmTagSize) return std::nullopt;
    auto nonce = sealed.first(kGcmNonceSize);
    auto body = sealed.subspan(kGcmNonceSize, sealed.size() - kGcmNonceSize - kGcmTagSize);
    auto tag = sealed.last(kGcmTagSize);

    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    Bytes out(body.size());
    int len = 0;
    bool ok = ctx && EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kGcmNonceSize, nullptr) == 1 &&
              EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) == 1 &&
              (aad.empty() ||
               EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1) &&
              EVP_DecryptUpdate(ctx.get(), out.data(), &len, body.data(), static_cast<int>(body.size())) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kGcmTagSize,
                                  const_cast<std::uint8_t*>(tag.data())) == 1;
    int tail = 0;
    ok = ok && EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &tail) == 1;
    if (!ok) return std::nullopt;
    return out;
}

Digest256 wrap_key(ByteView shared, ByteView ephemeral, ByteView recipient) {
    ByteWriter w;
    w.str("medchain/kek/v1").raw(shared).raw(ephemeral).raw(recipient);
    return sha256(w.bytes());
}

struct KeyfileKeys {
    Bytes cipher_key;
    Bytes verifier;
};

KeyfileKeys keyfile_keys(ByteView password, ByteView salt, std::uint32_t iterations) {
    auto material = pbkdf2(password, salt, iterations, 64);
    ByteWriter w;
    w.str("medchain/keyfile-verifier").raw(ByteView(material).last(32));
    auto check = sha256(w.bytes());
    KeyfileKeys keys{Bytes(material.begin(), material.begin() + 32), Bytes(check.begin(), check.begin() + kVerifierSize)};
    OPENSSL_cleanse(material.data(), material.size());
    return keys;
}

Bytes keyfile_aad(const EncryptedKeyfile& kf) {
    ByteWriter w;
    w.u8(kKeyfileFormat).u32(kf.kdf_iterations).blob(kf.salt).blob(kf.verifier);
    return std::move(w).take();
}

}  // namespace

PublicKey PublicKey::from_bytes(ByteView bytes) {
    return PublicKey(to_array<kPublicKeySize>(bytes, Errc::MalformedKey));
}

PrivateKey::~PrivateKey() { OPENSSL_cleanse(bytes_.data(), bytes_.size()); }

Bytes Ciphertext::serialize() const {
    ByteWriter w;
    w.u8(0x01).raw(ephemeral_public).blob(sealed_key).blob(body);
    return std::move(w).take();
}

Ciphertext Ciphertext::parse(ByteView bytes) {
    ByteReader r(bytes, Errc::DecryptionFailure);
    if (r.u8() != 0x01) throw Error(Errc::DecryptionFailure, "unknown envelope version");
    Ciphertext ct;
    ct.ephemeral_public = r.fixed<32>();
    ct.sealed_key = r.blob();
    ct.body = r.blob();
    r.expect_done();
    return ct;
}

Bytes EncryptedKeyfile::serialize() const {
    ByteWriter w;
    w.u8(kKeyfileFormat).u32(kdf_iterations).blob(salt).blob(verifier).blob(nonce).blob(ciphertext);
    return std::move(w).take();
}

EncryptedKeyfile EncryptedKeyfile::parse(ByteView bytes) {
    ByteReader r(bytes, Errc::CorruptKeyfile);
    if (r.u8() != kKeyfileFormat) throw Error(Errc::CorruptKeyfile, "unknown keyfile format");
    EncryptedKeyfile kf;
    kf.kdf_iterations = r.u32();
    if (kf.kdf_iterations == 0 || kf.kdf_iterations > kMaxKdfIterations) {
        throw Error(Errc::CorruptKeyfile, "KDF cost out of range");
    }
    kf.salt = r.blob();
    kf.verifier = r.blob();
    kf.nonce = r.blob();
    kf.ciphertext = r.blob();
    r.expect_done();
    return kf;
}

PublicKey public_from_private(const PrivateKey& key) {
    auto sign_key = raw_private(EVP_PKEY_ED25519, key.signing_seed());
    auto enc_key = raw_private(EVP_PKEY_X25519, key.encryption_scalar());
    auto sign_pub = raw_public_of(sign_key.get());
    auto enc_pub = raw_public_of(enc_key.get());
    PublicKey::Storage out{};
    std::copy(sign_pub.begin(), sign_pub.end(), out.begin());
    std::copy(enc_pub.begin(), enc_pub.end(), out.begin() + 32);
    return PublicKey(out);
}

KeyPair derive_keypair(const Fingerprint& fp) {
    if (fp.secret.size() < kMinSecretLength) {
        throw Error(Errc::SecretTooShort, "fingerprint secret must be at least 16 bytes");
    }
    auto seed = pbkdf2(fp.secret, as_bytes(kKeypairSalt), kKeypairKdfIterations, kPrivateKeySize);
    PrivateKey priv(to_array<kPrivateKeySize>(seed, Errc::MalformedKey));
    OPENSSL_cleanse(seed.data(), seed.size());
    return {public_from_private(priv), priv};
}

KeyPair generate_keypair(RandomSource& rng) {
    PrivateKey::Storage seed{};
    rng.fill(seed);
    PrivateKey priv(seed);
    OPENSSL_cleanse(seed.data(), seed.size());
    return {public_from_private(priv), priv};
}

Ciphertext asym_encrypt(const PublicKey& recipient, ByteView plaintext, RandomSource& rng) {
    std::array<std::uint8_t, 32> eph_scalar{};
    std::array<std::uint8_t, 32> session{};
    std::array<std::uint8_t, kGcmNonceSize> key_nonce{};
    std::array<std::uint8_t, kGcmNonceSize> body_nonce{};
    rng.fill(eph_scalar);
    rng.fill(session);
    rng.fill(key_nonce);
    rng.fill(body_nonce);

    Ciphertext ct;
    ct.ephemeral_public = raw_public_of(raw_private(EVP_PKEY_X25519, eph_scalar).get());
    auto shared = x25519_shared(eph_scalar, recipient.encryption_key());
    auto kek = wrap_key(shared, ct.ephemeral_public, recipient.encryption_key());
    ct.sealed_key = gcm_seal(kek, key_nonce, ct.ephemeral_public, session);
    ct.body = gcm_seal(session, body_nonce, ct.ephemeral_public, plaintext);

    OPENSSL_cleanse(eph_scalar.data(), eph_scalar.size());
    OPENSSL_cleanse(session.data(), session.size());
    OPENSSL_cleanse(shared.data(), shared.size());
    OPENSSL_cleanse(kek.data(), kek.size());
    return ct;
}

Bytes asym_decrypt(const PrivateKey& key, const Ciphertext& ct) {
    std::array<std::uint8_t, 32> shared{};
    try {
        shared = x25519_shared(key.encryption_scalar(), ct.ephemeral_public);
    } catch (const Error&) {
        throw Error(Errc::DecryptionFailure, "key agreement failed");
    }
    auto recipient = public_from_private(key);
    auto kek = wrap_key(shared, ct.ephemeral_public, recipient.encryption_key());
    OPENSSL_cleanse(shared.data(), shared.size());

    auto session = gcm_open(kek, ct.ephemeral_public, ct.sealed_key);
    OPENSSL_cleanse(kek.data(), kek.size());
    if (!session || session->size() != 32) throw Error(Errc::DecryptionFailure, "session key does not unwrap");
    auto body = gcm_open(*session, ct.ephemeral_public, ct.body);
    OPENSSL_cleanse(session->data(), session->size());
    if (!body) throw Error(Errc::DecryptionFailure, "body authentication failed");
    return std::move(*body);
}

Signature sign(const PrivateKey& key, ByteView message) {
    auto pkey = raw_private(EVP_PKEY_ED25519, key.signing_seed());
    MdCtxPtr ctx(EVP_MD_CTX_new());
    Signature sig;
    std::size_t len = sig.bytes.size();
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1 ||
        EVP_DigestSign(ctx.get(), sig.bytes.data(), &len, message.data(), message.size()) != 1) {
        throw Error(Errc::MalformedKey, "signing failed");
    }
    return sig;
}

bool verify(const PublicKey& key, ByteView message, const Signature& sig) {
    PkeyPtr pkey(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, key.signing_key().data(), 32));
    if (!pkey) return false;
    MdCtxPtr ctx(EVP_MD_CTX_new());
    return ctx && EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) == 1 &&
           EVP_DigestVerify(ctx.get(), sig.bytes.data(), sig.bytes.size(), message.data(), message.size()) == 1;
}

EncryptedKeyfile seal_keyfile(ByteView password, const KeyPair& kp, RandomSource& rng, std::uint32_t kdf_iterations) {
    if (password.empty()) throw Error(Errc::WrongPassword, "empty password");
    if (kdf_iterations == 0 || kdf_iterations > kMaxKdfIterations) {
        throw std::invalid_argument("KDF iteration count out of range");
    }
    EncryptedKeyfile kf;
    kf.kdf_iterations = kdf_iterations;
    kf.salt.resize(kSaltSize);
    kf.nonce.resize(kGcmNonceSize);
    rng.fill(kf.salt);
    rng.fill(kf.nonce);

    auto keys = keyfile_keys(password, kf.salt, kdf_iterations);
    kf.verifier = keys.verifier;

    ByteWriter plain;
    plain.raw(kp.private_key.bytes()).raw(kp.public_key.bytes());
    Bytes body = std::move(plain).take();
    auto sealed = gcm_seal(keys.cipher_key, kf.nonce, keyfile_aad(kf), body);
    kf.ciphertext.assign(sealed.begin() + kGcmNonceSize, sealed.end());
    OPENSSL_cleanse(body.data(), body.size());
    OPENSSL_cleanse(keys.cipher_key.data(), keys.cipher_key.size());
    return kf;
}

KeyPair open_keyfile(ByteView password, const EncryptedKeyfile& kf) {
    if (password.empty()) throw Error(Errc::WrongPassword, "empty password");
    if (kf.salt.size() != kSaltSize || kf.nonce.size() != kGcmNonceSize || kf.verifier.size() != kVerifierSize ||
        kf.kdf_iterations == 0 || kf.kdf_iterations > kMaxKdfIterations) {
        throw Error(Errc::CorruptKeyfile, "bad header");
    }
    auto keys = keyfile_keys(password, kf.salt, kf.kdf_iterations);
    if (CRYPTO_memcmp(keys.verifier.data(), kf.verifier.data(), kVerifierSize) != 0) {
        OPENSSL_cleanse(keys.cipher_key.data(), keys.cipher_key.size());
        throw Error(Errc::WrongPassword);
    }

    Bytes sealed(kf.nonce);
    sealed.insert(sealed.end(), kf.ciphertext.begin(), kf.ciphertext.end());
    auto body = gcm_open(keys.cipher_key, keyfile_aad(kf), sealed);
    OPENSSL_cleanse(keys.cipher_key.data(), keys.cipher_key.size());
    if (!body || body->size() != kPrivateKeySize + kPublicKeySize) {
        throw Error(Errc::CorruptKeyfile, "authentication failed");
    }

    PrivateKey priv(to_array<kPrivateKeySize>(ByteView(*body).first(kPrivateKeySize), Errc::CorruptKeyfile));
    auto pub = PublicKey::from_bytes(ByteView(*body).last(kPublicKeySize));
    OPENSSL_cleanse(body->data(), body->size());
    if (public_from_private(priv) != pub) throw Error(Errc::CorruptKeyfile, "keypair mismatch");
    return {pub, priv};
}

Digest256 fingerprint_digest(const Fingerprint& fp, ByteView registry_salt) {
    auto d = pbkdf2(fp.secret, registry_salt, 1000, 32);
    return to_array<32>(d, Errc::MalformedKey);
}

}  // namespace medchain::crypto
