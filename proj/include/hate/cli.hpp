#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hate/dataset.hpp"
#include "hate/training.hpp"

namespace hate::cli {

enum ExitStatus : int {
  kOk = 0,
  kInputError = 2,
  kCompatibilityError = 3,
  kNumericalError = 4,
};

// Effective settings of one run. Precedence: command-line flags, then the
// --config JSON file, then these defaults.
struct RunConfig {
  std::string data;
  std::string out;
  std::string checkpoint;
  std::string context;  // recommend: inline JSON, or @path to a JSON file
  std::string format = "jsonl";
  std::size_t window = 2;
  std::size_t min_count = 1;
  double test_fraction = 0.2;
  std::int64_t recent_days = 30;
  std::size_t dim = 50;
  std::size_t batch_size = 30;
  double lr = 0.5;
  std::size_t epochs = 20;
  std::size_t nce_k = 10;
  double noise_power = 0.75;
  double adagrad_epsilon = 1e-8;
  bool batch_mean = false;
  std::uint64_t seed = 42;
  std::string variant = "hate";
  std::vector<std::size_t> k = {10, 50};
  std::size_t topk = 10;
  int threads = 1;
  std::vector<std::size_t> windows = {1, 2, 3};
  std::vector<std::string> variants = {"hate", "ate", "hte"};

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const RunConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);

PrepareOptions prepare_options(const RunConfig& cfg);
TrainConfig train_config(const RunConfig& cfg);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hate::cli
