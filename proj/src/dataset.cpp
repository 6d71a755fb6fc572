#include "hate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hate/error.hpp"

namespace hate {

namespace {

void dedup_in_place(std::vector<std::string>& items) {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& it : items)
    if (std::find(out.begin(), out.end(), it) == out.end()) out.push_back(std::move(it));
  items = std::move(out);
}

std::int64_t parse_ts(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw InputError("line " + std::to_string(line) + ": timestamp is not an integer: '" + s + "'");
  return v;
}

RawTransaction parse_jsonl(const std::string& text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("line " + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  auto where = "line " + std::to_string(line) + ": ";
  if (!j.is_object()) throw InputError(where + "expected an object");
  if (!j.contains("user") || !j["user"].is_string()) throw InputError(where + "'user' must be a string");
  if (!j.contains("ts") || !j["ts"].is_number_integer()) throw InputError(where + "'ts' must be an integer");
  if (!j.contains("items") || !j["items"].is_array()) throw InputError(where + "'items' must be an array");
  RawTransaction t;
  t.user = j["user"].get<std::string>();
  t.ts = j["ts"].get<std::int64_t>();
  for (const auto& item : j["items"]) {
    if (!item.is_string()) throw InputError(where + "item ids must be strings");
    t.items.push_back(item.get<std::string>());
  }
  return t;
}

RawTransaction parse_csv(const std::string& text, std::size_t line) {
  std::vector<std::string> fields;
  std::stringstream ss(text);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!text.empty() && text.back() == ',') fields.emplace_back();
  if (fields.size() != 3)
    throw InputError("line " + std::to_string(line) + ": expected 3 fields user,ts,items, got " +
                     std::to_string(fields.size()));
  RawTransaction t;
  t.user = fields[0];
  t.ts = parse_ts(fields[1], line);
  std::stringstream items(fields[2]);
  while (std::getline(items, f, '|'))
    if (!f.empty()) t.items.push_back(f);
  return t;
}

}  // namespace

InputFormat parse_input_format(const std::string& name) {
  if (name == "jsonl") return InputFormat::jsonl;
  if (name == "csv") return InputFormat::csv;
  throw InputError("unknown input format '" + name + "' (expected jsonl or csv)");
}

IngestResult ingest(std::istream& in, InputFormat format) {
  IngestResult result;
  std::string text;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    if (format == InputFormat::csv && !header_seen) {
      header_seen = true;
      if (text != "user,ts,items")
        throw InputError("line " + std::to_string(line) + ": expected header 'user,ts,items'");
      continue;
    }
    RawTransaction t = format == InputFormat::jsonl ? parse_jsonl(text, line) : parse_csv(text, line);
    if (t.ts < 0) throw InputError("line " + std::to_string(line) + ": negative timestamp");
    dedup_in_place(t.items);
    if (t.items.empty()) {
      ++result.rejected;
      continue;
    }
    result.transactions.push_back(std::move(t));
  }
  return result;
}

IngestResult ingest_file(const std::string& path, InputFormat format) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return ingest(in, format);
}

Vocabulary::Vocabulary(std::vector<std::string> ids) : ids_(std::move(ids)) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    auto [it, inserted] = index_.emplace(ids_[i], static_cast<ItemIndex>(i));
    if (!inserted) throw InputError("duplicate item id in vocabulary: '" + ids_[i] + "'");
  }
}

std::optional<ItemIndex> Vocabulary::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(std::span<const RawTransaction> transactions, std::size_t min_count) {
  if (min_count < 1) throw InputError("min_count must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : transactions)
    for (const auto& item : t.items) ++counts[item];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [id, n] : counts)
    if (n >= min_count) kept.emplace_back(id, n);
  if (kept.empty())
    throw InputError("no item occurs in at least " + std::to_string(min_count) + " transactions");
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> ids;
  ids.reserve(kept.size());
  for (auto& [id, n] : kept) ids.push_back(std::move(id));
  return Vocabulary(std::move(ids));
}

std::vector<TransactionUnit> extract_units(std::span<const std::size_t> user_transactions,
                                           std::size_t window) {
  if (window < 1) throw InputError("window must be >= 1");
  std::vector<TransactionUnit> units;
  if (user_transactions.size() < window + 1) return units;
  for (std::size_t end = window; end < user_transactions.size(); ++end) {
    TransactionUnit u;
    u.inter.assign(user_transactions.begin() + (end - window), user_transactions.begin() + end);
    u.current = user_transactions[end];
    units.push_back(std::move(u));
  }
  return units;
}

DropCounters& DropCounters::operator+=(const DropCounters& o) {
  oov_items += o.oov_items;
  oov_targets += o.oov_targets;
  empty_intra += o.empty_intra;
  empty_inter += o.empty_inter;
  return *this;
}

std::vector<TrainingInstance> generate_instances(const TransactionUnit& unit,
                                                 std::span<const RawTransaction> transactions,
                                                 const Vocabulary& vocab, DropCounters& counters) {
  auto map_items = [&](const RawTransaction& t, std::size_t& oov) {
    std::vector<ItemIndex> out;
    for (const auto& id : t.items) {
      if (auto idx = vocab.find(id))
        out.push_back(*idx);
      else
        ++oov;
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  std::size_t current_oov = 0;
  auto current = map_items(transactions[unit.current], current_oov);
  counters.oov_targets += current_oov;
  if (current.empty()) return {};

  std::size_t context_oov = 0;
  std::vector<std::vector<ItemIndex>> inter;
  bool any_empty = false;
  for (auto pos : unit.inter) {
    inter.push_back(map_items(transactions[pos], context_oov));
    any_empty = any_empty || inter.back().empty();
  }
  counters.oov_items += context_oov + current_oov;

  if (current.size() < 2) {
    counters.empty_intra += current.size();
    return {};
  }
  if (any_empty) {
    counters.empty_inter += current.size();
    return {};
  }
  std::vector<TrainingInstance> out;
  out.reserve(current.size());
  for (std::size_t j = 0; j < current.size(); ++j) {
    TrainingInstance inst;
    inst.target = current[j];
    inst.intra.reserve(current.size() - 1);
    for (std::size_t k = 0; k < current.size(); ++k)
      if (k != j) inst.intra.push_back(current[k]);
    inst.inter = inter;
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<bool> select_test_units(std::span<const std::int64_t> current_ts, std::int64_t max_ts,
                                    double test_fraction, std::int64_t recent_days,
                                    std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InputError("test_fraction must lie in (0, 1)");
  if (recent_days < 1) throw InputError("recent_days must be >= 1");
  const std::int64_t cutoff = max_ts - recent_days * kSecondsPerDay;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < current_ts.size(); ++i)
    if (current_ts[i] >= cutoff) candidates.push_back(i);
  if (candidates.empty())
    throw InputError("no current transaction falls within the last " + std::to_string(recent_days) +
                     " days");
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * double(candidates.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, candidates.size());

  // Partial Fisher-Yates: the first n_test slots become the test sample.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n_test; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  std::vector<bool> mask(current_ts.size(), false);
  for (std::size_t i = 0; i < n_test; ++i) mask[candidates[i]] = true;
  return mask;
}

SplitDataset prepare_dataset(const IngestResult& ingested, const PrepareOptions& options) {
  const auto& txns = ingested.transactions;
  if (txns.empty()) throw InputError("input contains no usable transactions");
  if (options.window < 1) throw InputError("window must be >= 1");

  SplitDataset ds;
  ds.window = options.window;
  ds.options = options;
  ds.vocab = build_vocabulary(txns, options.min_count);

  // std::map keeps users in id order; stable_sort keeps file order on ties.
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < txns.size(); ++i) by_user[txns[i].user].push_back(i);
  std::vector<TransactionUnit> units;
  for (auto& [user, positions] : by_user) {
    std::stable_sort(positions.begin(), positions.end(),
                     [&](std::size_t a, std::size_t b) { return txns[a].ts < txns[b].ts; });
    auto u = extract_units(positions, options.window);
    units.insert(units.end(), std::make_move_iterator(u.begin()), std::make_move_iterator(u.end()));
  }
  if (units.empty())
    throw InputError("no user has at least " + std::to_string(options.window + 1) + " transactions");

  std::int64_t max_ts = 0;
  std::size_t total_items = 0;
  for (const auto& t : txns) {
    max_ts = std::max(max_ts, t.ts);
    total_items += t.items.size();
  }
  std::vector<std::int64_t> current_ts;
  current_ts.reserve(units.size());
  for (const auto& u : units) current_ts.push_back(txns[u.current].ts);
  auto is_test = select_test_units(current_ts, max_ts, options.test_fraction, options.recent_days,
                                   options.seed);

  DropCounters train_drops, test_drops;
  for (std::size_t i = 0; i < units.size(); ++i) {
    auto& drops = is_test[i] ? test_drops : train_drops;
    auto& sink = is_test[i] ? ds.test : ds.train;
    auto inst = generate_instances(units[i], txns, ds.vocab, drops);
    if (inst.empty()) continue;
    (is_test[i] ? ds.stats.test_sequences : ds.stats.train_sequences) += 1;
    sink.insert(sink.end(), std::make_move_iterator(inst.begin()), std::make_move_iterator(inst.end()));
  }

  ds.stats.transactions = txns.size();
  ds.stats.items = ds.vocab.size();
  ds.stats.avg_transaction_length = double(total_items) / double(txns.size());
  ds.stats.train_instances = ds.train.size();
  ds.stats.test_instances = ds.test.size();
  ds.stats.rejected_records = ingested.rejected;
  ds.stats.dropped_train = train_drops.dropped();
  ds.stats.dropped_test = test_drops.dropped();
  ds.stats.oov_items = train_drops.oov_items + test_drops.oov_items;
  return ds;
}

bool is_valid_instance(const TrainingInstance& inst, std::size_t vocab_size, std::size_t window) {
  auto in_range = [&](const std::vector<ItemIndex>& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [&](ItemIndex i) { return i < vocab_size; });
  };
  if (inst.target >= vocab_size || !in_range(inst.intra) || inst.inter.size() != window) return false;
  if (std::find(inst.intra.begin(), inst.intra.end(), inst.target) != inst.intra.end()) return false;
  return std::all_of(inst.inter.begin(), inst.inter.end(), in_range);
}

void print_stats(std::ostream& out, const DatasetStats& s) {
  auto row = [&](const char* name, const std::string& value) {
    out << std::left << std::setw(30) << name << value << '\n';
  };
  std::ostringstream avg;
  avg << std::fixed << std::setprecision(2) << s.avg_transaction_length;
  row("#Transactions", std::to_string(s.transactions));
  row("#Items", std::to_string(s.items));
  row("Avg. Transaction Length", avg.str());
  row("#Training Sequence of Trans.", std::to_string(s.train_sequences));
  row("#Training Instances", std::to_string(s.train_instances));
  row("#Test Sequence of Trans.", std::to_string(s.test_sequences));
  row("#Test Instances", std::to_string(s.test_instances));
}

}  // namespace hate
