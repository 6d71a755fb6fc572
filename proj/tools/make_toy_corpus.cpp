// Writes the bundled toy corpus (data/toy_corpus.jsonl): a lag-2 planted
// signal corpus, so prepare/train/eval produce a visibly non-trivial result.

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "hate/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_toy_corpus OUT.jsonl\n";
    return 2;
  }
  auto corpus = hate::synthetic::lagged_signal_corpus(/*users=*/80, /*length=*/40, /*lag=*/2,
                                                      /*group_size=*/5, /*seed=*/2024);
  std::ofstream out(argv[1]);
  for (const auto& t : corpus.transactions)
    out << nlohmann::json{{"user", t.user}, {"ts", t.ts}, {"items", t.items}}.dump() << '\n';
  return out ? 0 : 1;
}
