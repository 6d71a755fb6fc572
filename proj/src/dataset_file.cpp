#include <fstream>
#include <iterator>
#include <sstream>

#include "hate/binary_io.hpp"
#include "hate/dataset.hpp"
#include "hate/error.hpp"

namespace hate {

namespace bin {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("short write to '" + path + "'");
}

}  // namespace bin

namespace {

constexpr std::string_view kDatasetMagic = "HATD";
constexpr std::uint32_t kDatasetVersion = 1;

void put_set(bin::Writer& w, const std::vector<ItemIndex>& s) {
  w.u32(static_cast<std::uint32_t>(s.size()));
  for (auto i : s) w.u32(i);
}

std::vector<ItemIndex> get_set(bin::Reader& r) {
  auto n = r.u32();
  if (n > r.remaining() / 4) r.fail("item list longer than remaining data");
  std::vector<ItemIndex> s(n);
  for (auto& i : s) i = r.u32();
  return s;
}

}  // namespace

std::string encode_dataset(const SplitDataset& ds) {
  bin::Writer w;
  w.raw(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.u64(ds.window);
  w.u64(ds.options.seed);
  w.f64(ds.options.test_fraction);
  w.u64(static_cast<std::uint64_t>(ds.options.recent_days));
  w.u64(ds.options.min_count);
  const auto& s = ds.stats;
  for (auto v : {s.transactions, s.items, s.train_sequences, s.train_instances, s.test_sequences,
                 s.test_instances, s.rejected_records, s.dropped_train, s.dropped_test, s.oov_items})
    w.u64(v);
  w.f64(s.avg_transaction_length);
  w.u64(ds.vocab.size());
  w.u64(ds.train.size());
  w.u64(ds.test.size());
  for (const auto& id : ds.vocab.ids()) w.str(id);
  for (const auto* split : {&ds.train, &ds.test}) {
    for (const auto& inst : *split) {
      w.u32(inst.target);
      put_set(w, inst.intra);
      for (const auto& t : inst.inter) put_set(w, t);
    }
  }
  return w.bytes();
}

SplitDataset decode_dataset(std::string_view bytes) {
  bin::Reader r(bytes, "dataset");
  if (r.raw(4) != kDatasetMagic) r.fail("bad magic (not a prepared dataset)");
  auto version = r.u32();
  if (version != kDatasetVersion)
    throw CompatibilityError("dataset format version " + std::to_string(version) +
                             " is not supported (supported: " + std::to_string(kDatasetVersion) + ")");
  SplitDataset ds;
  ds.window = r.u64();
  ds.options.window = ds.window;
  ds.options.seed = r.u64();
  ds.options.test_fraction = r.f64();
  ds.options.recent_days = static_cast<std::int64_t>(r.u64());
  ds.options.min_count = r.u64();
  auto& s = ds.stats;
  for (auto* v : {&s.transactions, &s.items, &s.train_sequences, &s.train_instances, &s.test_sequences,
                  &s.test_instances, &s.rejected_records, &s.dropped_train, &s.dropped_test, &s.oov_items})
    *v = r.u64();
  s.avg_transaction_length = r.f64();
  auto n_vocab = r.u64();
  auto n_train = r.u64();
  auto n_test = r.u64();
  if (n_vocab > r.remaining() / 4) r.fail("vocabulary larger than remaining data");
  std::vector<std::string> ids;
  ids.reserve(n_vocab);
  for (std::uint64_t i = 0; i < n_vocab; ++i) ids.push_back(r.str());
  ds.vocab = Vocabulary(std::move(ids));
  for (auto [split, n] : {std::pair{&ds.train, n_train}, std::pair{&ds.test, n_test}}) {
    if (n > r.remaining() / 8) r.fail("instance count larger than remaining data");
    split->reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      TrainingInstance inst;
      inst.target = r.u32();
      inst.intra = get_set(r);
      for (std::size_t x = 0; x < ds.window; ++x) inst.inter.push_back(get_set(r));
      if (!is_valid_instance(inst, ds.vocab.size(), ds.window))
        r.fail("invalid instance " + std::to_string(i));
      split->push_back(std::move(inst));
    }
  }
  if (!r.done()) r.fail("trailing bytes");
  return ds;
}

void save_dataset(const std::string& path, const SplitDataset& ds) {
  bin::write_file(path, encode_dataset(ds));
}

SplitDataset load_dataset(const std::string& path) { return decode_dataset(bin::read_file(path)); }

}  // namespace hate
