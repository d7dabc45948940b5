#include "medchain/digest.hpp"

#include <openssl/sha.h>

namespace medchain {

Digest256 sha256(ByteView data) {
    Digest256 out{};
    SHA256(data.data(), data.size(), out.data());
    return out;
}

}  // namespace medchain
