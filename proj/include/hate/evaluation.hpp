#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hate/dataset.hpp"
#include "hate/model.hpp"
#include "hate/training.hpp"

namespace hate {

struct RankedList {
  std::vector<ItemIndex> order;  // score descending, ties by ascending index
  ItemIndex target = 0;
  std::size_t rank = 0;  // 1-based position of target in order
};

RankedList rank_scores(std::span<const double> scores, ItemIndex target);

// 1-based rank of target under the same ordering as rank_scores, without
// sorting: 1 + #{i : s_i > s_t or (s_i == s_t and i < t)}.
std::size_t target_rank(std::span<const double> scores, ItemIndex target);

// Scores every item with a forward pass and ranks them.
RankedList rank_items(const ModelParams& p, const TrainingInstance& inst);

double rec_at_k(std::span<const std::size_t> ranks, std::size_t k);
double rec_at_k(std::span<const RankedList> lists, std::size_t k);
double mrr(std::span<const std::size_t> ranks);
double mrr(std::span<const RankedList> lists);

struct EvalReport {
  Variant variant = Variant::hate;
  std::size_t window = 0;
  std::map<std::size_t, double> rec_at_k;
  double mrr = 0.0;
  std::size_t n_instances = 0;
  std::size_t dropped = 0;
};

EvalReport evaluate(const ModelParams& p, std::span<const TrainingInstance> test,
                    std::span<const std::size_t> ks, std::size_t dropped = 0, int threads = 1);

// Throws CompatibilityError when the checkpoint does not match the dataset.
EvalReport evaluate(const Checkpoint& ckpt, const SplitDataset& data, std::span<const std::size_t> ks,
                    int threads = 1);

struct WindowRow {
  Variant variant = Variant::hate;
  std::size_t window = 0;
  std::optional<EvalReport> report;  // absent when no data exists at this window
  std::string reason;
};

// Re-prepares the data at each window width, trains each variant and
// evaluates it on the held-out split.
std::vector<WindowRow> compare_windows(const IngestResult& source, const PrepareOptions& prepare,
                                       std::span<const std::size_t> windows,
                                       std::span<const Variant> variants, const TrainConfig& train_cfg,
                                       std::span<const std::size_t> ks);

// CSV with columns variant,W,K,rec_at_k,mrr,n,dropped; one line per K.
void write_report_csv(std::ostream& out, std::span<const WindowRow> rows);
void print_report_table(std::ostream& out, std::span<const WindowRow> rows, std::span<const std::size_t> ks);

}  // namespace hate
