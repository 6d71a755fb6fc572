#include "hate/synthetic.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "hate/error.hpp"

namespace hate::synthetic {

namespace {

std::string user_name(std::size_t u) { return "u" + std::to_string(u); }

// k distinct values from [lo, lo + n).
std::vector<ItemIndex> distinct(std::mt19937_64& rng, std::size_t k, std::size_t lo, std::size_t n) {
  if (k > n) throw InputError("cannot draw " + std::to_string(k) + " distinct items from " + std::to_string(n));
  std::vector<ItemIndex> out;
  std::uniform_int_distribution<std::size_t> pick(lo, lo + n - 1);
  while (out.size() < k) {
    auto v = static_cast<ItemIndex>(pick(rng));
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Vocabulary planted_vocab(const PlantedShape& s) {
  std::vector<std::string> ids;
  for (std::size_t j = 0; j < s.keys; ++j) ids.push_back("key_" + std::to_string(j));
  for (std::size_t j = 0; j < s.keys; ++j) ids.push_back("tgt_" + std::to_string(j));
  for (std::size_t j = 0; j < s.noise; ++j) ids.push_back("noise_" + std::to_string(j));
  return Vocabulary(std::move(ids));
}

template <typename Make>
SplitDataset planted(const PlantedShape& s, std::uint64_t seed, Make make) {
  SplitDataset ds;
  ds.vocab = planted_vocab(s);
  ds.window = s.window;
  ds.options.window = s.window;
  ds.options.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < s.train; ++i) ds.train.push_back(make(rng));
  for (std::size_t i = 0; i < s.test; ++i) ds.test.push_back(make(rng));
  ds.stats.items = ds.vocab.size();
  ds.stats.train_instances = ds.train.size();
  ds.stats.test_instances = ds.test.size();
  return ds;
}

}  // namespace

IngestResult uniform_corpus(std::size_t users, std::size_t length, std::size_t num_items,
                            std::size_t basket, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  IngestResult out;
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t n = 0; n < length; ++n) {
      RawTransaction t;
      t.user = user_name(u);
      t.ts = static_cast<std::int64_t>(n) * kSecondsPerDay;
      for (auto i : distinct(rng, basket, 0, num_items)) t.items.push_back("i" + std::to_string(i));
      out.transactions.push_back(std::move(t));
    }
  }
  return out;
}

IngestResult lagged_signal_corpus(std::size_t users, std::size_t length, std::size_t lag,
                                  std::size_t group_size, std::uint64_t seed) {
  if (lag < 1 || group_size < 1) throw InputError("lag and group size must be >= 1");
  const std::size_t phases = lag + 1;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, group_size - 1);
  auto key = [](std::size_t phase, std::size_t j) { return "k" + std::to_string(phase) + "_" + std::to_string(j); };
  auto resp = [](std::size_t phase, std::size_t j) { return "r" + std::to_string(phase) + "_" + std::to_string(j); };
  IngestResult out;
  for (std::size_t u = 0; u < users; ++u) {
    std::vector<std::size_t> keys(length);
    for (std::size_t n = 0; n < length; ++n) {
      const std::size_t phase = n % phases;
      keys[n] = pick(rng);
      RawTransaction t;
      t.user = user_name(u);
      t.ts = static_cast<std::int64_t>(n) * kSecondsPerDay;
      t.items.push_back(key(phase, keys[n]));
      if (n >= lag)
        t.items.push_back(resp((n - lag) % phases, keys[n - lag]));
      else
        t.items.push_back(resp((n + phases - lag) % phases, pick(rng)));
      out.transactions.push_back(std::move(t));
    }
  }
  return out;
}

SplitDataset planted_inter_signal(const PlantedShape& s, std::uint64_t seed) {
  if (s.window < 1) throw InputError("planted data needs a window >= 1");
  const std::size_t noise_lo = 2 * s.keys;
  return planted(s, seed, [&](std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick_key(0, s.keys - 1);
    const auto k = static_cast<ItemIndex>(pick_key(rng));
    TrainingInstance inst;
    inst.target = static_cast<ItemIndex>(s.keys + k);
    auto oldest = distinct(rng, 1, noise_lo, s.noise);
    oldest.push_back(k);
    std::sort(oldest.begin(), oldest.end());
    inst.inter.push_back(std::move(oldest));
    for (std::size_t x = 1; x < s.window; ++x) inst.inter.push_back(distinct(rng, 2, noise_lo, s.noise));
    inst.intra = distinct(rng, 2, noise_lo, s.noise);
    return inst;
  });
}

SplitDataset planted_intra_distractors(const PlantedShape& s, std::size_t distractors, std::uint64_t seed) {
  const std::size_t noise_lo = 2 * s.keys;
  return planted(s, seed, [&](std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick_key(0, s.keys - 1);
    const auto k = static_cast<ItemIndex>(pick_key(rng));
    TrainingInstance inst;
    inst.target = static_cast<ItemIndex>(s.keys + k);
    inst.intra = distinct(rng, distractors, noise_lo, s.noise);
    inst.intra.push_back(k);
    std::sort(inst.intra.begin(), inst.intra.end());
    for (std::size_t x = 0; x < s.window; ++x) inst.inter.push_back(distinct(rng, 2, noise_lo, s.noise));
    return inst;
  });
}

ItemIndex planted_key_of(const SplitDataset& ds, const TrainingInstance& inst) {
  for (auto i : inst.intra)
    if (ds.vocab.id(i).starts_with("key_")) return i;
  throw InputError("instance has no key item in its intra context");
}

}  // namespace hate::synthetic
