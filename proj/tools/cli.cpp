#include "hate/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "hate/binary_io.hpp"
#include "hate/checkpoint.hpp"
#include "hate/error.hpp"
#include "hate/evaluation.hpp"

namespace hate::cli {

using nlohmann::json;

json to_json(const RunConfig& c) {
  return json{{"data", c.data},
              {"out", c.out},
              {"checkpoint", c.checkpoint},
              {"context", c.context},
              {"format", c.format},
              {"window", c.window},
              {"min_count", c.min_count},
              {"test_fraction", c.test_fraction},
              {"recent_days", c.recent_days},
              {"dim", c.dim},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"epochs", c.epochs},
              {"nce_k", c.nce_k},
              {"noise_power", c.noise_power},
              {"adagrad_epsilon", c.adagrad_epsilon},
              {"batch_mean", c.batch_mean},
              {"seed", c.seed},
              {"variant", c.variant},
              {"k", c.k},
              {"topk", c.topk},
              {"threads", c.threads},
              {"windows", c.windows},
              {"variants", c.variants}};
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  RunConfig c;
  const json known = to_json(c);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw InputError("unknown config key '" + key + "'");
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const json::exception& e) {
      throw InputError(std::string("config key '") + key + "': " + e.what());
    }
  };
  get("data", c.data);
  get("out", c.out);
  get("checkpoint", c.checkpoint);
  get("context", c.context);
  get("format", c.format);
  get("window", c.window);
  get("min_count", c.min_count);
  get("test_fraction", c.test_fraction);
  get("recent_days", c.recent_days);
  get("dim", c.dim);
  get("batch_size", c.batch_size);
  get("lr", c.lr);
  get("epochs", c.epochs);
  get("nce_k", c.nce_k);
  get("noise_power", c.noise_power);
  get("adagrad_epsilon", c.adagrad_epsilon);
  get("batch_mean", c.batch_mean);
  get("seed", c.seed);
  get("variant", c.variant);
  get("k", c.k);
  get("topk", c.topk);
  get("threads", c.threads);
  get("windows", c.windows);
  get("variants", c.variants);
  return c;
}

PrepareOptions prepare_options(const RunConfig& c) {
  PrepareOptions o;
  o.window = c.window;
  o.min_count = c.min_count;
  o.test_fraction = c.test_fraction;
  o.recent_days = c.recent_days;
  o.seed = c.seed;
  return o;
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.learning_rate = c.lr;
  t.nce_k = c.nce_k;
  t.noise_power = c.noise_power;
  t.seed = c.seed;
  t.variant = parse_variant(c.variant);
  t.dim = c.dim;
  t.adagrad_epsilon = c.adagrad_epsilon;
  t.mean_batch_gradient = c.batch_mean;
  t.threads = c.threads;
  validate(t);
  return t;
}

namespace {

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InputError(std::string("missing required flag ") + flag);
}

void write_text(const std::string& path, const std::string& text) { bin::write_file(path, text); }

void echo_config(const RunConfig& cfg, const std::string& artifact) {
  write_text(artifact + ".config.json", to_json(cfg).dump(2) + "\n");
}

int cmd_prepare(const RunConfig& cfg, std::ostream& out) {
  require(cfg.data, "--data");
  require(cfg.out, "--out");
  auto ingested = ingest_file(cfg.data, parse_input_format(cfg.format));
  auto ds = prepare_dataset(ingested, prepare_options(cfg));
  save_dataset(cfg.out, ds);
  echo_config(cfg, cfg.out);
  print_stats(out, ds.stats);
  out << "(W=" << ds.window << ", rejected records=" << ds.stats.rejected_records
      << ", dropped train/test instances=" << ds.stats.dropped_train << "/" << ds.stats.dropped_test << ")\n";
  return kOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.data, "--data");
  require(cfg.out, "--out");
  auto tcfg = train_config(cfg);
  auto ds = load_dataset(cfg.data);
  auto result = train(ds, tcfg, [&](const EpochLog& e) {
    err << "epoch " << e.epoch << " mean_loss " << std::setprecision(6) << e.mean_loss << " (" << e.wall_seconds
        << " s)\n";
  });
  save_checkpoint(result.checkpoint, cfg.out);
  std::ostringstream log;
  write_loss_log(log, result.log);
  write_text(cfg.out + ".loss.csv", log.str());
  echo_config(cfg, cfg.out);
  out << "trained " << to_string(tcfg.variant) << " for " << tcfg.epochs << " epochs on "
      << ds.train.size() << " instances; final mean loss " << std::setprecision(6)
      << result.log.back().mean_loss << "\n";
  return kOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  require(cfg.data, "--data");
  require(cfg.checkpoint, "--checkpoint");
  auto ds = load_dataset(cfg.data);
  auto ckpt = load_checkpoint(cfg.checkpoint);
  std::vector<WindowRow> rows(1);
  rows[0].report = evaluate(ckpt, ds, cfg.k, cfg.threads);
  rows[0].variant = ckpt.params.variant;
  rows[0].window = ds.window;
  print_report_table(out, rows, cfg.k);
  if (!cfg.out.empty()) {
    std::ostringstream csv;
    write_report_csv(csv, rows);
    write_text(cfg.out, csv.str());
    echo_config(cfg, cfg.out);
  }
  return kOk;
}

std::vector<ItemIndex> map_ids(const json& ids, const Vocabulary& vocab, std::ostream& err, const char* where) {
  if (!ids.is_array()) throw InputError(std::string("context '") + where + "' must be an array of item ids");
  std::vector<ItemIndex> out;
  for (const auto& id : ids) {
    if (!id.is_string()) throw InputError("item ids in the context must be strings");
    auto s = id.get<std::string>();
    if (auto idx = vocab.find(s)) {
      if (std::find(out.begin(), out.end(), *idx) == out.end()) out.push_back(*idx);
    } else {
      err << "warning: unknown item '" << s << "' dropped from " << where << "\n";
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_recommend(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.checkpoint, "--checkpoint");
  require(cfg.context, "--context");
  auto ckpt = load_checkpoint(cfg.checkpoint);
  const auto& p = ckpt.params;
  std::string text = cfg.context.front() == '@' ? bin::read_file(cfg.context.substr(1)) : cfg.context;
  json ctx;
  try {
    ctx = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("context is not valid JSON: ") + e.what());
  }
  if (!ctx.is_object() || !ctx.contains("intra")) throw InputError("context needs an 'intra' item list");

  TrainingInstance inst;
  inst.intra = map_ids(ctx["intra"], ckpt.vocab, err, "intra");
  bool any_known = !inst.intra.empty();
  if (p.variant != Variant::ate) {
    const json inter = ctx.value("inter", json::array());
    if (!inter.is_array() || inter.size() != p.window)
      throw InputError("this " + to_string(p.variant) + " checkpoint expects 'inter' with exactly W=" +
                       std::to_string(p.window) + " transactions");
    for (const auto& t : inter) {
      inst.inter.push_back(map_ids(t, ckpt.vocab, err, "inter"));
      any_known = any_known || !inst.inter.back().empty();
    }
  }
  if (!any_known) throw InputError("context contains no known items");
  if (inst.intra.empty()) throw InputError("intra context has no known items");
  for (const auto& t : inst.inter)
    if (t.empty()) throw InputError("an inter transaction has no known items");

  const auto probs = predict_distribution(p, inst);
  const auto ranked = rank_scores(probs, 0);
  const auto n = std::min<std::size_t>(cfg.topk, ranked.order.size());
  out << "rank\titem\tprobability\n" << std::setprecision(17);
  for (std::size_t r = 0; r < n; ++r)
    out << r + 1 << '\t' << ckpt.vocab.id(ranked.order[r]) << '\t' << probs[ranked.order[r]] << '\n';
  return kOk;
}

int cmd_compare_windows(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.data, "--data");
  auto tcfg = train_config(cfg);
  std::vector<Variant> variants;
  for (const auto& v : cfg.variants) variants.push_back(parse_variant(v));
  auto ingested = ingest_file(cfg.data, parse_input_format(cfg.format));
  err << "comparing " << cfg.windows.size() << " window widths x " << variants.size() << " variants\n";
  auto rows = compare_windows(ingested, prepare_options(cfg), cfg.windows, variants, tcfg, cfg.k);
  print_report_table(out, rows, cfg.k);
  if (!cfg.out.empty()) {
    std::ostringstream csv;
    write_report_csv(csv, rows);
    write_text(cfg.out, csv.str());
    echo_config(cfg, cfg.out);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"HATE next-item recommender: prepare, train, evaluate, recommend"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig flags;
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with run settings (flags take precedence)");
  // Each entry copies one flag into the effective config when it was given.
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&, const RunConfig&)>>> copy;
  auto bind = [&](const std::string& name, auto member, const std::string& help) {
    auto* opt = app.add_option(name, flags.*member, help);
    copy.emplace_back(opt, [member](RunConfig& dst, const RunConfig& src) { dst.*member = src.*member; });
    return opt;
  };

  bind("--data", &RunConfig::data, "input corpus (prepare, compare-windows) or prepared dataset (train, eval)");
  bind("--out", &RunConfig::out, "output artifact path");
  bind("--checkpoint", &RunConfig::checkpoint, "checkpoint file (eval, recommend)");
  bind("--context", &RunConfig::context, "recommend context as JSON, or @file");
  bind("--format", &RunConfig::format, "input format: jsonl or csv")->check(CLI::IsMember({"jsonl", "csv"}));
  bind("--window", &RunConfig::window, "inter-transaction window width W");
  bind("--min-count", &RunConfig::min_count, "minimum transaction count for an item to enter the vocabulary");
  bind("--test-fraction", &RunConfig::test_fraction, "fraction of recent current transactions held out");
  bind("--recent-days", &RunConfig::recent_days, "test candidates lie within this many days of the last one");
  bind("--dim", &RunConfig::dim, "embedding dimension K");
  bind("--batch-size", &RunConfig::batch_size, "instances per optimizer step");
  bind("--lr", &RunConfig::lr, "Adagrad learning rate");
  bind("--epochs", &RunConfig::epochs, "training epochs");
  bind("--nce-k", &RunConfig::nce_k, "noise samples per instance");
  bind("--noise-power", &RunConfig::noise_power, "exponent of the smoothed unigram noise distribution");
  bind("--adagrad-epsilon", &RunConfig::adagrad_epsilon, "Adagrad denominator offset");
  bind("--seed", &RunConfig::seed, "random seed for the split, initialization and sampling");
  bind("--variant", &RunConfig::variant, "model variant: hate, ate or hte")
      ->check(CLI::IsMember({"hate", "ate", "hte"}));
  bind("--k", &RunConfig::k, "cutoffs for REC@K, comma separated")->delimiter(',');
  bind("--topk", &RunConfig::topk, "number of recommendations to print");
  bind("--threads", &RunConfig::threads, "worker threads (1 = sequential reference path)");
  bind("--windows", &RunConfig::windows, "window widths for compare-windows, comma separated")->delimiter(',');
  bind("--variants", &RunConfig::variants, "variants for compare-windows, comma separated")->delimiter(',');
  auto* batch_mean = app.add_flag("--batch-mean", flags.batch_mean, "average instead of sum gradients over a batch");
  copy.emplace_back(batch_mean, [](RunConfig& dst, const RunConfig& src) { dst.batch_mean = src.batch_mean; });

  auto* prepare = app.add_subcommand("prepare", "build the vocabulary, instances and train/test split");
  auto* train_cmd = app.add_subcommand("train", "train a model on a prepared dataset");
  auto* eval = app.add_subcommand("eval", "rank the test split and report REC@K and MRR");
  auto* recommend = app.add_subcommand("recommend", "print the top-k next items for one context");
  auto* compare = app.add_subcommand("compare-windows", "train and evaluate at several window widths");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      json j;
      try {
        j = json::parse(bin::read_file(config_path));
      } catch (const json::parse_error& e) {
        throw InputError("config file '" + config_path + "' is not valid JSON: " + e.what());
      }
      cfg = run_config_from_json(j);
    }
    for (auto& [opt, apply] : copy)
      if (opt->count() > 0) apply(cfg, flags);

    if (prepare->parsed()) return cmd_prepare(cfg, out);
    if (train_cmd->parsed()) return cmd_train(cfg, out, err);
    if (eval->parsed()) return cmd_eval(cfg, out);
    if (recommend->parsed()) return cmd_recommend(cfg, out, err);
    if (compare->parsed()) return cmd_compare_windows(cfg, out, err);
  } catch (const CompatibilityError& e) {
    err << "error: " << e.what() << "\n";
    return kCompatibilityError;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace hate::cli
