#include "hate/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "hate/error.hpp"
#include "hate/kernels.hpp"

namespace hate {

RankedList rank_scores(std::span<const double> scores, ItemIndex target) {
  if (target >= scores.size()) throw InputError("target outside the scored items");
  RankedList out;
  out.target = target;
  out.order.resize(scores.size());
  std::iota(out.order.begin(), out.order.end(), ItemIndex{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](ItemIndex a, ItemIndex b) { return scores[a] > scores[b]; });
  out.rank = static_cast<std::size_t>(std::find(out.order.begin(), out.order.end(), target) -
                                      out.order.begin()) + 1;
  return out;
}

std::size_t target_rank(std::span<const double> scores, ItemIndex target) {
  if (target >= scores.size()) throw InputError("target outside the scored items");
  const double s = scores[target];
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    ahead += scores[i] > s || (scores[i] == s && i < target);
  return ahead + 1;
}

RankedList rank_items(const ModelParams& p, const TrainingInstance& inst) {
  return rank_scores(forward(p, inst).scores, inst.target);
}

double rec_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw InputError("REC@K over an empty set of ranked lists");
  if (k < 1) throw InputError("K must be >= 1");
  std::size_t hits = 0;
  for (auto r : ranks) hits += r <= k;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw InputError("MRR over an empty set of ranked lists");
  double s = 0.0;
  for (auto r : ranks) s += 1.0 / static_cast<double>(r);
  return s / static_cast<double>(ranks.size());
}

namespace {
std::vector<std::size_t> ranks_of(std::span<const RankedList> lists) {
  std::vector<std::size_t> r;
  r.reserve(lists.size());
  for (const auto& l : lists) r.push_back(l.rank);
  return r;
}
}  // namespace

double rec_at_k(std::span<const RankedList> lists, std::size_t k) { return rec_at_k(ranks_of(lists), k); }
double mrr(std::span<const RankedList> lists) { return mrr(ranks_of(lists)); }

EvalReport evaluate(const ModelParams& p, std::span<const TrainingInstance> test,
                    std::span<const std::size_t> ks, std::size_t dropped, int threads) {
  if (test.empty()) throw InputError("test split is empty");
  auto ranks = threads > 1 ? rank_targets_parallel(p, test, threads) : rank_targets_serial(p, test);
  EvalReport rep;
  rep.variant = p.variant;
  rep.window = p.window;
  for (auto k : ks) rep.rec_at_k[k] = rec_at_k(ranks, k);
  rep.mrr = mrr(ranks);
  rep.n_instances = test.size();
  rep.dropped = dropped;
  return rep;
}

EvalReport evaluate(const Checkpoint& ckpt, const SplitDataset& data, std::span<const std::size_t> ks,
                    int threads) {
  if (!(ckpt.vocab == data.vocab))
    throw CompatibilityError("checkpoint vocabulary (" + std::to_string(ckpt.vocab.size()) +
                             " items) does not match the dataset vocabulary (" +
                             std::to_string(data.vocab.size()) + " items)");
  if (ckpt.params.variant != Variant::ate && ckpt.params.window != data.window)
    throw CompatibilityError("checkpoint was trained with W=" + std::to_string(ckpt.params.window) +
                             " but the dataset has W=" + std::to_string(data.window));
  return evaluate(ckpt.params, data.test, ks, data.stats.dropped_test, threads);
}

std::vector<WindowRow> compare_windows(const IngestResult& source, const PrepareOptions& prepare,
                                       std::span<const std::size_t> windows,
                                       std::span<const Variant> variants, const TrainConfig& train_cfg,
                                       std::span<const std::size_t> ks) {
  if (windows.empty()) throw InputError("no window widths given");
  for (auto w : windows)
    if (w < 1) throw InputError("window width must be >= 1 (use the ATE variant for no inter context)");
  std::vector<WindowRow> rows;
  for (auto w : windows) {
    auto opts = prepare;
    opts.window = w;
    std::optional<SplitDataset> data;
    std::string reason;
    try {
      data = prepare_dataset(source, opts);
      if (data->train.empty() || data->test.empty()) {
        reason = "empty train or test split";
        data.reset();
      }
    } catch (const InputError& e) {
      reason = e.what();
    }
    for (auto v : variants) {
      WindowRow row;
      row.variant = v;
      row.window = w;
      row.reason = reason;
      if (data) {
        auto cfg = train_cfg;
        cfg.variant = v;
        auto trained = train(*data, cfg);
        row.report = evaluate(trained.checkpoint, *data, ks, train_cfg.threads);
        row.report->window = w;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_report_csv(std::ostream& out, std::span<const WindowRow> rows) {
  out << "variant,W,K,rec_at_k,mrr,n,dropped\n";
  out << std::setprecision(17);
  for (const auto& row : rows) {
    if (!row.report) {
      out << to_string(row.variant) << ',' << row.window << ",,NA,NA,0,0\n";
      continue;
    }
    for (const auto& [k, rec] : row.report->rec_at_k)
      out << to_string(row.variant) << ',' << row.window << ',' << k << ',' << rec << ',' << row.report->mrr
          << ',' << row.report->n_instances << ',' << row.report->dropped << '\n';
  }
}

void print_report_table(std::ostream& out, std::span<const WindowRow> rows, std::span<const std::size_t> ks) {
  out << std::left << std::setw(8) << "variant" << std::setw(4) << "W";
  for (auto k : ks) out << std::setw(12) << ("rec_at_" + std::to_string(k));
  out << std::setw(10) << "mrr" << std::setw(8) << "n" << "dropped\n";
  for (const auto& row : rows) {
    out << std::left << std::setw(8) << to_string(row.variant) << std::setw(4) << row.window;
    if (!row.report) {
      out << "absent (" << row.reason << ")\n";
      continue;
    }
    out << std::fixed << std::setprecision(4);
    for (auto k : ks) out << std::setw(12) << row.report->rec_at_k.at(k);
    out << std::setw(10) << row.report->mrr << std::setw(8) << row.report->n_instances << row.report->dropped
        << '\n';
    out.unsetf(std::ios::fixed);
  }
}

}  // namespace hate
