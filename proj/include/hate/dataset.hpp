#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace hate {

using ItemIndex = std::uint32_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct RawTransaction {
  std::string user;
  std::int64_t ts = 0;
  std::vector<std::string> items;  // deduplicated, first-occurrence order
};

enum class InputFormat { jsonl, csv };

InputFormat parse_input_format(const std::string& name);

struct IngestResult {
  std::vector<RawTransaction> transactions;
  std::size_t rejected = 0;  // records with an empty item list
};

// One record per line. Throws InputError naming the offending line.
IngestResult ingest(std::istream& in, InputFormat format);
IngestResult ingest_file(const std::string& path, InputFormat format);

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> ids);

  std::size_t size() const { return ids_.size(); }
  const std::string& id(ItemIndex index) const { return ids_.at(index); }
  std::optional<ItemIndex> find(const std::string& id) const;
  const std::vector<std::string>& ids() const { return ids_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, ItemIndex> index_;
};

// Items present in at least min_count transactions, ordered by descending
// transaction count then by id.
Vocabulary build_vocabulary(std::span<const RawTransaction> transactions, std::size_t min_count);

// Positions refer to the caller's transaction array.
struct TransactionUnit {
  std::vector<std::size_t> inter;  // oldest first
  std::size_t current = 0;

  friend bool operator==(const TransactionUnit&, const TransactionUnit&) = default;
};

// Sliding window with stride 1 over one user's time-ordered transactions.
std::vector<TransactionUnit> extract_units(std::span<const std::size_t> user_transactions,
                                           std::size_t window);

struct TrainingInstance {
  std::vector<ItemIndex> intra;               // sorted
  std::vector<std::vector<ItemIndex>> inter;  // oldest first, each sorted
  ItemIndex target = 0;

  friend bool operator==(const TrainingInstance&, const TrainingInstance&) = default;
};

struct DropCounters {
  std::size_t oov_items = 0;     // out-of-vocabulary items removed from contexts
  std::size_t oov_targets = 0;   // current items that could not become targets
  std::size_t empty_intra = 0;   // would-be instances with no intra context left
  std::size_t empty_inter = 0;   // would-be instances with an empty inter transaction

  std::size_t dropped() const { return oov_targets + empty_intra + empty_inter; }
  DropCounters& operator+=(const DropCounters& o);
};

std::vector<TrainingInstance> generate_instances(const TransactionUnit& unit,
                                                 std::span<const RawTransaction> transactions,
                                                 const Vocabulary& vocab, DropCounters& counters);

// Marks round(test_fraction * candidates) current transactions (at least one)
// as test, where candidates are currents within recent_days of max_ts.
// Returns one flag per entry of current_ts.
std::vector<bool> select_test_units(std::span<const std::int64_t> current_ts, std::int64_t max_ts,
                                    double test_fraction, std::int64_t recent_days,
                                    std::uint64_t seed);

struct PrepareOptions {
  std::size_t window = 2;
  std::size_t min_count = 1;
  double test_fraction = 0.2;
  std::int64_t recent_days = 30;
  std::uint64_t seed = 42;
};

struct DatasetStats {
  std::uint64_t transactions = 0;
  std::uint64_t items = 0;
  double avg_transaction_length = 0.0;
  std::uint64_t train_sequences = 0;
  std::uint64_t train_instances = 0;
  std::uint64_t test_sequences = 0;
  std::uint64_t test_instances = 0;
  std::uint64_t rejected_records = 0;
  std::uint64_t dropped_train = 0;
  std::uint64_t dropped_test = 0;
  std::uint64_t oov_items = 0;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

struct SplitDataset {
  Vocabulary vocab;
  std::size_t window = 2;
  PrepareOptions options;
  DatasetStats stats;
  std::vector<TrainingInstance> train;
  std::vector<TrainingInstance> test;
};

// ingest output -> vocabulary -> units -> instances -> time-based split.
SplitDataset prepare_dataset(const IngestResult& ingested, const PrepareOptions& options);

// Instance-level validity for a given vocabulary size and window width.
bool is_valid_instance(const TrainingInstance& inst, std::size_t vocab_size, std::size_t window);

void print_stats(std::ostream& out, const DatasetStats& stats);

// Binary container, see docs/file_formats.md.
std::string encode_dataset(const SplitDataset& ds);
SplitDataset decode_dataset(std::string_view bytes);
void save_dataset(const std::string& path, const SplitDataset& ds);
SplitDataset load_dataset(const std::string& path);

}  // namespace hate
