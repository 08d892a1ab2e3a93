#pragma once

#include "gridse/bitblock.hpp"
#include "gridse/random.hpp"

namespace gridse {

/// f-bit bounded symmetric encryption.
///
/// Encryption masks a whole 256-bit block with G(k1, m); decryption unmasks
/// only a chosen f-bit window with the k1 stream and applies the unrelated k2
/// stream everywhere else, so only that window comes back as plaintext.
///
/// The scheme is deterministic and the PRF input is the message itself, so the
/// caller must already hold m to decrypt. It is a building block for SP2E and
/// must not be used as a general-purpose cipher.
namespace sef {

struct Keys {
    Key k1{};
    Key k2{};
};

Keys gen(RandomSource& rng);

// ct = G(k1, m) xor m
BitBlock enc(const Key& k1, const BitBlock& m);

// ct xor (G(k2,m).sub(0,p1) || G(k1,m).sub(p1,p2) || G(k2,m).sub(p2,256)).
// Agrees with m exactly on `window`. Throws RangeError for an invalid window.
BitBlock dec(const Key& k1, const Key& k2, const BitBlock& ct, const BitBlock& m, BitRange window);

}  // namespace sef
}  // namespace gridse
