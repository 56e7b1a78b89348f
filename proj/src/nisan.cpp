// SPDX-License-Identifier: Apache-2.0
#include "condsub/nisan.hpp"

#include <cmath>
#include <stdexcept>

namespace condsub {

namespace {

struct BitReader {
  std::span<const std::uint64_t> words;
  std::size_t pos = 0;

  std::uint64_t take(int bits) {
    std::uint64_t v = 0;
    for (int i = 0; i < bits; ++i) {
      std::size_t w = pos / 64, b = pos % 64;
      if (w >= words.size()) throw std::invalid_argument("Nisan seed too short");
      v |= ((words[w] >> b) & 1u) << i;
      ++pos;
    }
    return v;
  }
};

int ceil_log2(StreamPos v) {
  int r = 0;
  StreamPos p = 1;
  while (p < v) { p <<= 1; ++r; }
  return r;
}

}  // namespace

struct NisanGenerator::WindowTables {
  // One table per 8-level group, highest levels first. Entry = composed
  // affine map for the group's bit pattern.
  std::vector<std::array<AffineMap, 256>> groups;
  std::vector<int> group_lo_bit;  // lowest j-bit position covered by group
};

NisanGenerator::NisanGenerator(int space_bits, StreamPos output_bits,
                               std::span<const std::uint64_t> seed_words)
    : s_(space_bits), n_bits_(output_bits) {
  if (s_ < 2 || s_ > 64)
    throw std::invalid_argument("NisanGenerator: space bits outside [2,64]");
  if (n_bits_ == 0) throw std::invalid_argument("NisanGenerator: empty output");
  block_count_ = (n_bits_ + static_cast<StreamPos>(s_) - 1) / static_cast<StreamPos>(s_);
  levels_ = ceil_log2(block_count_);
  field_ = &Gf2Field::get(s_);
  BitReader r{seed_words};
  start_ = r.take(s_);
  maps_.resize(static_cast<std::size_t>(levels_));
  for (int t = 0; t < levels_; ++t) {
    maps_[static_cast<std::size_t>(t)].a = r.take(s_);
    maps_[static_cast<std::size_t>(t)].b = r.take(s_);
  }
}

NisanGenerator NisanGenerator::from_master_seed(int space_bits, StreamPos output_bits,
                                                std::uint64_t master_seed) {
  int s = space_bits;
  StreamPos blocks = (output_bits + static_cast<StreamPos>(s) - 1) / static_cast<StreamPos>(s);
  int levels = ceil_log2(blocks);
  int bits = s * (1 + 2 * levels);
  StreamRng rng = StreamRng(master_seed).fork(0x6e6973616eULL);
  std::vector<std::uint64_t> words(static_cast<std::size_t>((bits + 63) / 64));
  for (auto& w : words) w = rng.next();
  return NisanGenerator(s, output_bits, words);
}

std::uint64_t NisanGenerator::block_direct(StreamPos index) const {
  std::uint64_t x = start_;
  for (int t = levels_; t >= 1; --t) {
    if ((index >> (t - 1)) & 1u)
      x = field_->affine(maps_[static_cast<std::size_t>(t - 1)].a,
                         maps_[static_cast<std::size_t>(t - 1)].b, x);
  }
  return x;
}

const NisanGenerator::WindowTables& NisanGenerator::tables() const {
  auto existing = std::atomic_load(&tables_);
  if (existing) return *existing;
  auto t = std::make_shared<WindowTables>();
  int hi = levels_ - 1;  // highest bit position of a block index
  while (hi >= 0) {
    int lo = hi - 7 < 0 ? 0 : hi - 7;
    int width = hi - lo + 1;
    t->group_lo_bit.push_back(lo);
    t->groups.emplace_back();
    auto& tab = t->groups.back();
    tab[0] = AffineMap{1, 0};
    for (int p = 1; p < (1 << width); ++p) {
      int l = __builtin_ctz(static_cast<unsigned>(p));
      const AffineMap& prev = tab[static_cast<std::size_t>(p ^ (1 << l))];
      const AffineMap& h = maps_[static_cast<std::size_t>(lo + l)];
      AffineMap m;
      m.a = field_->mul(h.a, prev.a);
      m.b = field_->mul(h.a, prev.b) ^ h.b;
      tab[static_cast<std::size_t>(p)] = m;
    }
    hi = lo - 1;
  }
  std::shared_ptr<const WindowTables> expected;
  std::atomic_compare_exchange_strong(&tables_, &expected,
                                      std::shared_ptr<const WindowTables>(t));
  auto final_sp = std::atomic_load(&tables_);
  tables_ptr_.store(final_sp.get(), std::memory_order_release);
  return *final_sp;
}

std::uint64_t NisanGenerator::block(StreamPos index) const {
  if (index >= block_count_)
    throw std::out_of_range("NisanGenerator::block: index out of range");
  const WindowTables* tp = tables_ptr_.load(std::memory_order_acquire);
  if (!tp) {
    if (levels_ <= 8 || block_calls_.fetch_add(1, std::memory_order_relaxed) < 48)
      return block_direct(index);
    tp = &tables();
  }
  const WindowTables& t = *tp;
  std::uint64_t x = start_;
  for (std::size_t g = 0; g < t.groups.size(); ++g) {
    int lo = t.group_lo_bit[g];
    int width = g == 0 ? levels_ - lo : t.group_lo_bit[g - 1] - lo;
    auto pat = static_cast<std::size_t>((index >> lo) & ((StreamPos(1) << width) - 1));
    if (!pat) continue;
    const AffineMap& m = t.groups[g][pat];
    x = field_->affine(m.a, m.b, x);
  }
  return x;
}

unsigned __int128 NisanGenerator::window128(StreamPos offset, int len) const {
  if (len <= 0 || len > 120) throw std::invalid_argument("window128: bad length");
  if (offset + static_cast<StreamPos>(len) > n_bits_)
    throw std::out_of_range("window128: past end of stream");
  unsigned __int128 out = 0;
  int produced = 0;
  StreamPos bit = offset;
  while (produced < len) {
    StreamPos bidx = bit / static_cast<StreamPos>(s_);
    int within = static_cast<int>(bit % static_cast<StreamPos>(s_));
    int take = std::min(len - produced, s_ - within);
    std::uint64_t blk = block(bidx) >> within;
    std::uint64_t chunk = take >= 64 ? blk : (blk & ((std::uint64_t(1) << take) - 1));
    out |= static_cast<unsigned __int128>(chunk) << produced;
    produced += take;
    bit += static_cast<StreamPos>(take);
  }
  return out;
}

Uint256 NisanGenerator::window(StreamPos offset, int len) const {
  if (len <= 0 || len > 200) throw std::invalid_argument("window: bad length");
  if (offset + static_cast<StreamPos>(len) > n_bits_)
    throw std::out_of_range("window: past end of stream");
  Uint256 out = 0;
  int produced = 0;
  StreamPos bit = offset;
  while (produced < len) {
    StreamPos bidx = bit / static_cast<StreamPos>(s_);
    int within = static_cast<int>(bit % static_cast<StreamPos>(s_));
    int take = std::min(len - produced, s_ - within);
    std::uint64_t blk = block(bidx) >> within;
    std::uint64_t chunk = take >= 64 ? blk : (blk & ((std::uint64_t(1) << take) - 1));
    out |= Uint256(chunk) << produced;
    produced += take;
    bit += static_cast<StreamPos>(take);
  }
  return out;
}

bool NisanGenerator::window_less(StreamPos offset, int len,
                                 unsigned __int128 threshold) const {
  if (len <= 0 || len > 120) throw std::invalid_argument("window_less: bad length");
  StreamPos end = offset + static_cast<StreamPos>(len);
  if (end > n_bits_) throw std::out_of_range("window_less: past end of stream");
  if (threshold >> len) return true;  // threshold at or above 2^len
  auto s = static_cast<StreamPos>(s_);
  StreamPos first_b = offset / s;
  StreamPos b = (end - 1) / s;
  for (;; --b) {
    StreamPos from = b * s < offset ? offset : b * s;
    StreamPos to = (b + 1) * s < end ? (b + 1) * s : end;
    int bits_here = static_cast<int>(to - from);
    int within = static_cast<int>(from - b * s);
    std::uint64_t mask = bits_here >= 64 ? ~std::uint64_t(0)
                                         : ((std::uint64_t(1) << bits_here) - 1);
    std::uint64_t chunk = (block(b) >> within) & mask;
    auto tchunk = static_cast<std::uint64_t>(threshold >> (from - offset)) & mask;
    if (chunk != tchunk) return chunk < tchunk;
    if (b == first_b) break;
  }
  return false;  // equal
}

BitAutomaton BitAutomaton::random(int states, StreamRng& rng) {
  BitAutomaton a;
  a.states = states;
  a.start = 0;
  a.next.resize(static_cast<std::size_t>(states));
  a.accept.resize(static_cast<std::size_t>(states));
  for (int s = 0; s < states; ++s) {
    a.next[static_cast<std::size_t>(s)][0] = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(states)));
    a.next[static_cast<std::size_t>(s)][1] = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(states)));
    a.accept[static_cast<std::size_t>(s)] = static_cast<char>(rng.next() & 1u);
  }
  return a;
}

bool BitAutomaton::run(std::uint64_t bits_lsb_first, int nbits) const {
  int s = start;
  for (int i = 0; i < nbits; ++i)
    s = next[static_cast<std::size_t>(s)][(bits_lsb_first >> i) & 1u];
  return accept[static_cast<std::size_t>(s)] != 0;
}

double distinguisher_gap(int space_bits, int n_bits, const BitAutomaton& a) {
  if (n_bits < 1 || n_bits > 24)
    throw std::invalid_argument("distinguisher_gap: output length beyond enumeration budget");
  if (a.states > (1 << space_bits))
    throw std::invalid_argument("distinguisher_gap: automaton larger than the space bound");
  StreamPos blocks = (static_cast<StreamPos>(n_bits) + static_cast<StreamPos>(space_bits) - 1) /
                     static_cast<StreamPos>(space_bits);
  int levels = ceil_log2(blocks);
  int seed_bits = space_bits * (1 + 2 * levels);
  if (seed_bits > 26)
    throw std::invalid_argument("distinguisher_gap: seed space beyond enumeration budget");

  // Truly uniform side: count accepting strings exactly.
  std::vector<std::uint64_t> cnt(static_cast<std::size_t>(a.states), 0);
  cnt[static_cast<std::size_t>(a.start)] = 1;
  for (int i = 0; i < n_bits; ++i) {
    std::vector<std::uint64_t> nxt(static_cast<std::size_t>(a.states), 0);
    for (int s = 0; s < a.states; ++s) {
      if (!cnt[static_cast<std::size_t>(s)]) continue;
      nxt[static_cast<std::size_t>(a.next[static_cast<std::size_t>(s)][0])] += cnt[static_cast<std::size_t>(s)];
      nxt[static_cast<std::size_t>(a.next[static_cast<std::size_t>(s)][1])] += cnt[static_cast<std::size_t>(s)];
    }
    cnt.swap(nxt);
  }
  std::uint64_t accept_uniform = 0;
  for (int s = 0; s < a.states; ++s)
    if (a.accept[static_cast<std::size_t>(s)]) accept_uniform += cnt[static_cast<std::size_t>(s)];

  // Generator side: every seed, expanded and fed to the automaton.
  std::uint64_t accept_gen = 0;
  std::uint64_t seeds = std::uint64_t(1) << seed_bits;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    std::uint64_t words[1] = {seed};
    NisanGenerator gen(space_bits, static_cast<StreamPos>(n_bits), words);
    std::uint64_t bits = 0;
    for (StreamPos b = 0; b < gen.block_count(); ++b) {
      std::uint64_t blk = gen.block(b);
      bits |= blk << (static_cast<int>(b) * space_bits);
    }
    bits &= n_bits >= 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << n_bits) - 1);
    if (a.run(bits, n_bits)) ++accept_gen;
  }

  double pu = static_cast<double>(accept_uniform) / std::pow(2.0, n_bits);
  double pg = static_cast<double>(accept_gen) / static_cast<double>(seeds);
  return std::abs(pu - pg);
}

}  // namespace condsub
