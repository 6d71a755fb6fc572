#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "hate/binary_io.hpp"
#include "hate/dataset.hpp"
#include "hate/error.hpp"
#include "hate/synthetic.hpp"

using namespace hate;

namespace {

IngestResult ingest_text(const std::string& text, InputFormat f = InputFormat::jsonl) {
  std::istringstream in(text);
  return ingest(in, f);
}

RawTransaction txn(std::string user, std::int64_t ts, std::vector<std::string> items) {
  return RawTransaction{std::move(user), ts, std::move(items)};
}

}  // namespace

TEST_CASE("ingest deduplicates items and keeps record order") {
  auto r = ingest_text(R"({"user":"u1","ts":100,"items":["a","b","a"]})"
                       "\n"
                       R"({"user":"u0","ts":5,"items":["c"]})");
  REQUIRE(r.transactions.size() == 2);
  CHECK(r.transactions[0].user == "u1");
  CHECK(r.transactions[0].ts == 100);
  CHECK(r.transactions[0].items == std::vector<std::string>{"a", "b"});
  CHECK(r.transactions[1].user == "u0");
  CHECK(r.rejected == 0);
}

TEST_CASE("ingest edge cases") {
  CHECK(ingest_text("").transactions.empty());

  auto r = ingest_text(R"({"user":"u1","ts":1,"items":[]})");
  CHECK(r.transactions.empty());
  CHECK(r.rejected == 1);

  try {
    ingest_text(R"({"user":"u1","ts":1,"items":["a"]})"
                "\n{not json}");
    FAIL("expected a parse error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(ingest_text(R"({"user":"u1","ts":-1,"items":["a"]})"), InputError);
  CHECK_THROWS_AS(ingest_text(R"({"user":"u1","ts":"x","items":["a"]})"), InputError);
  CHECK_THROWS_AS(ingest_file("/nonexistent/file.jsonl", InputFormat::jsonl), InputError);
}

TEST_CASE("csv ingest uses pipe-separated items") {
  auto r = ingest_text("user,ts,items\nu1,100,a|b|a\nu2,7,\n", InputFormat::csv);
  REQUIRE(r.transactions.size() == 1);
  CHECK(r.transactions[0].items == std::vector<std::string>{"a", "b"});
  CHECK(r.rejected == 1);
  CHECK_THROWS_AS(ingest_text("u,t,i\n", InputFormat::csv), InputError);
  CHECK_THROWS_AS(ingest_text("user,ts,items\nu1,1x,a\n", InputFormat::csv), InputError);
  CHECK_THROWS_AS(parse_input_format("xml"), InputError);
}

TEST_CASE("vocabulary ordering and threshold") {
  // Transaction counts a:5, b:3, c:1.
  std::vector<RawTransaction> ts;
  for (int i = 0; i < 5; ++i) ts.push_back(txn("u", i, i < 3 ? std::vector<std::string>{"a", "b"} : std::vector<std::string>{"a"}));
  ts.push_back(txn("u", 9, {"c"}));
  auto v = build_vocabulary(ts, 2);
  CHECK(v.ids() == std::vector<std::string>{"a", "b"});
  CHECK(*v.find("a") == 0);
  CHECK(*v.find("b") == 1);
  CHECK_FALSE(v.find("c").has_value());

  CHECK(build_vocabulary(std::vector{txn("u", 0, {"a"})}, 1).ids() == std::vector<std::string>{"a"});

  auto tie = build_vocabulary(std::vector{txn("u", 0, {"b", "a"}), txn("u", 1, {"a", "b"})}, 1);
  CHECK(tie.ids() == std::vector<std::string>{"a", "b"});

  CHECK_THROWS_AS(build_vocabulary(ts, 6), InputError);
  CHECK_THROWS_AS(build_vocabulary(ts, 0), InputError);
}

TEST_CASE("vocabulary is a bijection") {
  auto corpus = synthetic::uniform_corpus(5, 5, 40, 3, 7);
  auto v = build_vocabulary(corpus.transactions, 1);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(*v.find(v.id(static_cast<ItemIndex>(i))) == i);
}

TEST_CASE("extract_units slides with stride one") {
  std::vector<std::size_t> five{10, 11, 12, 13, 14};
  auto units = extract_units(five, 2);
  REQUIRE(units.size() == 3);
  CHECK(units[0] == TransactionUnit{{10, 11}, 12});
  CHECK(units[1] == TransactionUnit{{11, 12}, 13});
  CHECK(units[2] == TransactionUnit{{12, 13}, 14});

  std::vector<std::size_t> two{0, 1}, three{0, 1, 2};
  CHECK(extract_units(two, 2).empty());
  CHECK(extract_units(three, 2).size() == 1);
  CHECK_THROWS_AS(extract_units(three, 0), InputError);

  for (std::size_t n = 0; n <= 10; ++n) {
    std::vector<std::size_t> seq(n);
    for (std::size_t w = 1; w <= 4; ++w)
      CHECK(extract_units(seq, w).size() == (n > w ? n - w : 0));
  }
}

TEST_CASE("generate_instances picks each current item as target") {
  std::vector<RawTransaction> ts{txn("u", 0, {"x"}), txn("u", 1, {"y"}), txn("u", 2, {"a", "b", "c"})};
  Vocabulary v({"a", "b", "c", "x", "y"});
  DropCounters drops;
  auto inst = generate_instances({{0, 1}, 2}, ts, v, drops);
  REQUIRE(inst.size() == 3);
  CHECK(inst[0].target == 0);
  CHECK(inst[0].intra == std::vector<ItemIndex>{1, 2});
  CHECK(inst[1].target == 1);
  CHECK(inst[1].intra == std::vector<ItemIndex>{0, 2});
  CHECK(inst[2].target == 2);
  CHECK(inst[2].intra == std::vector<ItemIndex>{0, 1});
  for (const auto& i : inst) CHECK(i.inter == std::vector<std::vector<ItemIndex>>{{3}, {4}});
  CHECK(drops.dropped() == 0);

  ts[2].items = {"a"};
  CHECK(generate_instances({{0, 1}, 2}, ts, v, drops).empty());
  CHECK(drops.empty_intra == 1);

  // "z" is out of vocabulary, so the first inter transaction empties.
  ts[0].items = {"z"};
  ts[2].items = {"a", "b"};
  DropCounters d2;
  CHECK(generate_instances({{0, 1}, 2}, ts, v, d2).empty());
  CHECK(d2.empty_inter == 2);
  CHECK(d2.oov_items == 1);
}

TEST_CASE("test sampling: window arithmetic, count and determinism") {
  const std::int64_t day = kSecondsPerDay;
  std::vector<std::int64_t> ts;
  for (int d = 0; d <= 100; ++d) ts.push_back(d * day);
  auto mask = select_test_units(ts, 100 * day, 0.5, 30, 1);
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (mask[i]) CHECK(ts[i] >= 70 * day);

  std::vector<std::int64_t> ten(10, 100 * day);
  auto m = select_test_units(ten, 100 * day, 0.2, 30, 123);
  CHECK(std::count(m.begin(), m.end(), true) == 2);
  CHECK(select_test_units(ten, 100 * day, 0.2, 30, 123) == m);

  std::vector<std::int64_t> old{0};
  CHECK_THROWS_AS(select_test_units(old, 100 * day, 0.2, 30, 1), InputError);
  CHECK_THROWS_AS(select_test_units(ten, 100 * day, 0.0, 30, 1), InputError);
  CHECK_THROWS_AS(select_test_units(ten, 100 * day, 1.0, 30, 1), InputError);
  CHECK_THROWS_AS(select_test_units(ten, 100 * day, 0.2, 0, 1), InputError);
}

TEST_CASE("prepare_dataset invariants") {
  auto corpus = synthetic::uniform_corpus(30, 12, 60, 3, 11);
  // Sprinkle single-item and out-of-vocabulary-prone transactions.
  corpus.transactions[5].items = {"i0"};
  corpus.transactions[40].items.push_back("rare_item");
  PrepareOptions opt;
  opt.min_count = 2;
  opt.seed = 5;
  auto ds = prepare_dataset(corpus, opt);

  CHECK(ds.vocab.size() == ds.stats.items);
  CHECK_FALSE(ds.vocab.find("rare_item").has_value());
  for (const auto* split : {&ds.train, &ds.test})
    for (const auto& inst : *split) CHECK(is_valid_instance(inst, ds.vocab.size(), 2));

  // Every current item of every unit is either an instance or a counted drop.
  std::map<std::string, std::size_t> per_user;
  std::size_t potential = 0;
  for (const auto& t : corpus.transactions)
    if (per_user[t.user]++ >= opt.window) potential += t.items.size();
  CHECK(ds.train.size() + ds.test.size() + ds.stats.dropped_train + ds.stats.dropped_test == potential);
  CHECK(ds.stats.train_instances == ds.train.size());
  CHECK(ds.stats.test_instances == ds.test.size());

  // Determinism down to the bytes.
  CHECK(encode_dataset(prepare_dataset(corpus, opt)) == encode_dataset(ds));
  opt.seed = 6;
  CHECK(encode_dataset(prepare_dataset(corpus, opt)) != encode_dataset(ds));
}

TEST_CASE("train and test come from disjoint current transactions") {
  // Distinct items per transaction make the current transaction recoverable
  // from any of its instances.
  IngestResult corpus;
  int next = 0;
  for (int u = 0; u < 10; ++u)
    for (int n = 0; n < 8; ++n) {
      std::vector<std::string> items;
      for (int j = 0; j < 3; ++j) items.push_back("i" + std::to_string(next++));
      corpus.transactions.push_back(txn("u" + std::to_string(u), n * kSecondsPerDay, items));
    }
  auto ds = prepare_dataset(corpus, {});
  auto current_of = [](const TrainingInstance& inst) {
    auto s = inst.intra;
    s.push_back(inst.target);
    return *std::min_element(s.begin(), s.end());
  };
  std::set<ItemIndex> train_currents, test_currents;
  for (const auto& i : ds.train) train_currents.insert(current_of(i));
  for (const auto& i : ds.test) test_currents.insert(current_of(i));
  CHECK_FALSE(test_currents.empty());
  for (auto c : test_currents) CHECK(train_currents.count(c) == 0);
}

TEST_CASE("prepare_dataset errors") {
  CHECK_THROWS_AS(prepare_dataset(IngestResult{}, {}), InputError);
  IngestResult short_users;
  short_users.transactions = {txn("a", 0, {"x", "y"}), txn("a", 1, {"x", "y"})};
  CHECK_THROWS_AS(prepare_dataset(short_users, {}), InputError);
}

TEST_CASE("ties in timestamps keep file order") {
  IngestResult c;
  c.transactions = {txn("u", 5, {"a"}), txn("u", 5, {"b"}), txn("u", 5, {"c", "d"})};
  PrepareOptions opt;
  auto ds = prepare_dataset(c, opt);
  auto all = ds.train;
  all.insert(all.end(), ds.test.begin(), ds.test.end());
  REQUIRE(all.size() == 2);
  CHECK(all[0].inter == std::vector<std::vector<ItemIndex>>{{*ds.vocab.find("a")}, {*ds.vocab.find("b")}});
}

TEST_CASE("dataset container round trip and rejection") {
  auto ds = prepare_dataset(synthetic::uniform_corpus(10, 8, 30, 3, 3), {});
  auto bytes = encode_dataset(ds);
  auto back = decode_dataset(bytes);
  CHECK(back.vocab == ds.vocab);
  CHECK(back.train == ds.train);
  CHECK(back.test == ds.test);
  CHECK(back.stats == ds.stats);
  CHECK(encode_dataset(back) == bytes);

  CHECK_THROWS_AS(decode_dataset(std::string_view(bytes).substr(0, bytes.size() - 3)), InputError);
  auto wrong_version = bytes;
  wrong_version[4] = 0;
  CHECK_THROWS_AS(decode_dataset(wrong_version), CompatibilityError);
  CHECK_THROWS_AS(decode_dataset("nope"), InputError);
}
