#pragma once

// Seeded generators for corpora with a known answer. Used by the acceptance
// suite, the benchmarks and tools/make_toy_corpus.

#include <cstdint>

#include "hate/dataset.hpp"

namespace hate::synthetic {

// Every user has `length` daily transactions of `basket` distinct items drawn
// uniformly from `num_items`. Targets carry no signal.
IngestResult uniform_corpus(std::size_t users, std::size_t length, std::size_t num_items,
                            std::size_t basket, std::uint64_t seed);

// Every transaction holds two items: a random key from the key group of its
// phase (position mod lag+1) and the response to the key seen `lag`
// transactions earlier. The response is recoverable only when the inter
// window reaches back `lag` transactions. Items: 2 * (lag+1) * group_size.
IngestResult lagged_signal_corpus(std::size_t users, std::size_t length, std::size_t lag,
                                  std::size_t group_size, std::uint64_t seed);

struct PlantedShape {
  std::size_t keys = 10;
  std::size_t noise = 30;  // items carrying no signal
  std::size_t window = 2;
  std::size_t train = 2000;
  std::size_t test = 500;
};

// Target = response to a key that appears only in the oldest inter
// transaction; the intra context and newer inter transactions are noise.
// Vocabulary: key_*, tgt_*, noise_*.
SplitDataset planted_inter_signal(const PlantedShape& shape, std::uint64_t seed);

// Target = response to one key in the intra context; the other intra items
// and every inter transaction are noise.
SplitDataset planted_intra_distractors(const PlantedShape& shape, std::size_t distractors,
                                       std::uint64_t seed);

// Index of the key item in an instance from planted_intra_distractors.
ItemIndex planted_key_of(const SplitDataset& ds, const TrainingInstance& inst);

}  // namespace hate::synthetic
