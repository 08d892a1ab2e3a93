#include "gridse/se_f.hpp"

namespace gridse::sef {

Keys gen(RandomSource& rng) {
    Keys k;
    rng.fill(k.k1);
    rng.fill(k.k2);
    return k;
}

BitBlock enc(const Key& k1, const BitBlock& m) { return prf_g(k1, PrfDomain::BlockMask, m.span()) ^ m; }

BitBlock dec(const Key& k1, const Key& k2, const BitBlock& ct, const BitBlock& m, BitRange window) {
    check_range(window);
    BitBlock outer = prf_g(k2, PrfDomain::BlockMask, m.span());
    BitBlock inner = prf_g(k1, PrfDomain::BlockMask, m.span());
    return ct ^ splice_window(outer, inner, window);
}

}  // namespace gridse::sef
