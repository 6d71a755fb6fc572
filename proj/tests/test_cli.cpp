#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hate/binary_io.hpp"
#include "hate/checkpoint.hpp"
#include "hate/cli.hpp"

using namespace hate;
namespace fs = std::filesystem;

namespace {

const std::string kToy = std::string(HATE_SOURCE_DIR) + "/data/toy_corpus.jsonl";

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run hate_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hate_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// prepare + a short train on the toy corpus.
void prepare_and_train(const TempDir& tmp, std::vector<std::string> extra = {}) {
  REQUIRE(hate_cli({"prepare", "--data", kToy, "--out", tmp / "ds.bin"}).status == 0);
  std::vector<std::string> args{"train", "--data", tmp / "ds.bin", "--out", tmp / "ck.bin",
                                "--epochs", "2", "--dim", "8"};
  args.insert(args.end(), extra.begin(), extra.end());
  auto r = hate_cli(args);
  REQUIRE_MESSAGE(r.status == 0, r.err);
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("prepare prints dataset statistics") {
  TempDir tmp;
  auto r = hate_cli({"prepare", "--data", kToy, "--out", tmp / "ds.bin"});
  REQUIRE(r.status == 0);
  for (const char* row : {"#Transactions", "#Items", "Avg. Transaction Length", "#Training Sequence of Trans.",
                          "#Training Instances", "#Test Sequence of Trans.", "#Test Instances"})
    CHECK(r.out.find(row) != std::string::npos);
  CHECK(r.out.find("3200") != std::string::npos);
  CHECK(load_dataset(tmp / "ds.bin").window == 2);

  REQUIRE(hate_cli({"prepare", "--data", kToy, "--out", tmp / "w3.bin", "--window", "3"}).status == 0);
  auto w3 = load_dataset(tmp / "w3.bin");
  CHECK(w3.window == 3);
  for (const auto& inst : w3.train) CHECK(inst.inter.size() == 3);

  auto missing = hate_cli({"prepare", "--data", tmp / "nope.jsonl", "--out", tmp / "x.bin"});
  CHECK(missing.status == 2);
  CHECK(missing.err.find("nope.jsonl") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "x.bin"));
}

TEST_CASE("argument errors exit with status 2") {
  CHECK(hate_cli({}).status == 2);
  CHECK(hate_cli({"frobnicate"}).status == 2);
  CHECK(hate_cli({"prepare", "--window", "two"}).status == 2);
  CHECK(hate_cli({"prepare", "--out", "x.bin"}).status == 2);
  CHECK(hate_cli({"--help"}).status == 0);
}

TEST_CASE("train writes a checkpoint, loss log and config echo") {
  TempDir tmp;
  prepare_and_train(tmp, {"--variant", "ate"});
  auto ck = load_checkpoint(tmp / "ck.bin");
  CHECK(ck.params.variant == Variant::ate);
  CHECK(ck.params.dim == 8);
  CHECK(ck.epoch == 2);
  auto log = lines(bin::read_file(tmp / "ck.bin.loss.csv"));
  REQUIRE(log.size() == 3);
  CHECK(log[0] == "epoch,mean_loss,wall_seconds");

  auto echo = cli::run_config_from_json(nlohmann::json::parse(bin::read_file(tmp / "ck.bin.config.json")));
  cli::RunConfig expected;
  expected.data = tmp / "ds.bin";
  expected.out = tmp / "ck.bin";
  expected.epochs = 2;
  expected.dim = 8;
  expected.variant = "ate";
  CHECK(echo == expected);
}

TEST_CASE("train is reproducible and validates its flags") {
  TempDir tmp;
  prepare_and_train(tmp, {"--seed", "5"});
  auto first = bin::read_file(tmp / "ck.bin");
  auto again = hate_cli({"train", "--data", tmp / "ds.bin", "--out", tmp / "ck2.bin", "--epochs", "2", "--dim",
                         "8", "--seed", "5", "--threads", "3"});
  REQUIRE(again.status == 0);
  CHECK(bin::read_file(tmp / "ck2.bin") == first);

  auto zero = hate_cli({"train", "--data", tmp / "ds.bin", "--out", tmp / "bad.bin", "--dim", "0"});
  CHECK(zero.status == 2);
  CHECK(zero.err.find("dimension") != std::string::npos);
  CHECK(hate_cli({"train", "--data", tmp / "ds.bin", "--out", tmp / "bad.bin", "--variant", "xyz"}).status == 2);

  auto blowup = hate_cli({"train", "--data", tmp / "ds.bin", "--out", tmp / "nan.bin", "--epochs", "3", "--dim",
                          "8", "--lr", "1e300"});
  CHECK(blowup.status == 4);
  CHECK_FALSE(fs::exists(tmp / "nan.bin"));
}

TEST_CASE("eval reports REC@K and MRR") {
  TempDir tmp;
  prepare_and_train(tmp);
  auto r = hate_cli({"eval", "--data", tmp / "ds.bin", "--checkpoint", tmp / "ck.bin", "--k", "1,5", "--out",
                     tmp / "eval.csv"});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("rec_at_1") != std::string::npos);
  CHECK(r.out.find("rec_at_5") != std::string::npos);
  CHECK(r.out.find("mrr") != std::string::npos);
  auto csv = lines(bin::read_file(tmp / "eval.csv"));
  REQUIRE(csv.size() == 3);
  CHECK(csv[0] == "variant,W,K,rec_at_k,mrr,n,dropped");
  CHECK(csv[1].rfind("hate,2,1,", 0) == 0);
  CHECK(csv[2].rfind("hate,2,5,", 0) == 0);

  // A dataset with a different vocabulary.
  {
    std::ofstream other(tmp / "other.jsonl");
    for (int u = 0; u < 4; ++u)
      for (int t = 0; t < 6; ++t)
        other << R"({"user":"u)" << u << R"(","ts":)" << t * 86400 << R"(,"items":["a)" << (t + u) % 5
              << R"(","b"]})" << '\n';
  }
  REQUIRE(hate_cli({"prepare", "--data", tmp / "other.jsonl", "--out", tmp / "other.bin"}).status == 0);
  auto mismatch = hate_cli({"eval", "--data", tmp / "other.bin", "--checkpoint", tmp / "ck.bin"});
  CHECK(mismatch.status == 3);
  CHECK(mismatch.err.find("vocabulary") != std::string::npos);

  REQUIRE(hate_cli({"prepare", "--data", kToy, "--out", tmp / "w1.bin", "--window", "1"}).status == 0);
  CHECK(hate_cli({"eval", "--data", tmp / "w1.bin", "--checkpoint", tmp / "ck.bin"}).status == 3);

  auto corrupt = bin::read_file(tmp / "ck.bin");
  corrupt[4] = 9;
  bin::write_file(tmp / "v9.bin", corrupt);
  CHECK(hate_cli({"eval", "--data", tmp / "ds.bin", "--checkpoint", tmp / "v9.bin"}).status == 3);
  bin::write_file(tmp / "cut.bin", bin::read_file(tmp / "ck.bin").substr(0, 100));
  CHECK(hate_cli({"eval", "--data", tmp / "ds.bin", "--checkpoint", tmp / "cut.bin"}).status == 2);
}

TEST_CASE("recommend prints a ranked distribution") {
  TempDir tmp;
  prepare_and_train(tmp);
  const std::string ctx = R"({"intra":["k0_1"],"inter":[["k1_0","r0_2"],["k2_3"]]})";
  auto r = hate_cli({"recommend", "--checkpoint", tmp / "ck.bin", "--context", ctx, "--topk", "30"});
  REQUIRE(r.status == 0);
  auto rows = lines(r.out);
  REQUIRE(rows.size() == 31);
  CHECK(rows[0] == "rank\titem\tprobability");
  double total = 0.0, prev = 2.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::size_t rank;
    std::string item;
    double prob;
    in >> rank >> item >> prob;
    CHECK(rank == i);
    CHECK(prob <= prev);
    prev = prob;
    total += prob;
  }
  CHECK(std::abs(total - 1.0) <= 1e-9);

  CHECK(lines(hate_cli({"recommend", "--checkpoint", tmp / "ck.bin", "--context", ctx}).out).size() == 11);

  {
    std::ofstream f(tmp / "ctx.json");
    f << ctx;
  }
  auto from_file = hate_cli({"recommend", "--checkpoint", tmp / "ck.bin", "--context", "@" + (tmp / "ctx.json")});
  CHECK(from_file.out == lines(r.out)[0] + "\n" + lines(r.out)[1] + "\n" + [&] {
          std::string s;
          for (std::size_t i = 2; i <= 10; ++i) s += lines(r.out)[i] + "\n";
          return s;
        }());

  auto unknown = hate_cli({"recommend", "--checkpoint", tmp / "ck.bin", "--context",
                           R"({"intra":["k0_1","zzz"],"inter":[["k1_0"],["k2_3"]]})"});
  CHECK(unknown.status == 0);
  CHECK(unknown.err.find("zzz") != std::string::npos);

  auto short_inter = hate_cli(
      {"recommend", "--checkpoint", tmp / "ck.bin", "--context", R"({"intra":["k0_1"],"inter":[["k1_0"]]})"});
  CHECK(short_inter.status == 2);
  CHECK(short_inter.err.find("W=2") != std::string::npos);

  CHECK(hate_cli({"recommend", "--checkpoint", tmp / "ck.bin", "--context",
                  R"({"intra":["zzz"],"inter":[["yyy"],["xxx"]]})"})
            .status == 2);
  CHECK(hate_cli({"recommend", "--checkpoint", tmp / "ck.bin", "--context", "{not json"}).status == 2);
}

TEST_CASE("flags take precedence over the config file") {
  TempDir tmp;
  REQUIRE(hate_cli({"prepare", "--data", kToy, "--out", tmp / "ds.bin"}).status == 0);
  {
    std::ofstream f(tmp / "cfg.json");
    f << R"({"epochs": 1, "dim": 4, "seed": 11, "lr": 0.25})";
  }
  auto r = hate_cli({"train", "--config", tmp / "cfg.json", "--data", tmp / "ds.bin", "--out", tmp / "ck.bin",
                     "--dim", "6"});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  auto ck = load_checkpoint(tmp / "ck.bin");
  CHECK(ck.params.dim == 6);
  CHECK(ck.config.epochs == 1);
  CHECK(ck.config.seed == 11);
  CHECK(ck.config.learning_rate == 0.25);

  auto echo = cli::run_config_from_json(nlohmann::json::parse(bin::read_file(tmp / "ck.bin.config.json")));
  CHECK(echo.dim == 6);
  CHECK(echo.epochs == 1);
  CHECK(cli::run_config_from_json(cli::to_json(echo)) == echo);

  {
    std::ofstream f(tmp / "bad.json");
    f << R"({"epoch": 1})";
  }
  CHECK(hate_cli({"train", "--config", tmp / "bad.json", "--data", tmp / "ds.bin", "--out", tmp / "x.bin"}).status ==
        2);
}

TEST_CASE("compare-windows writes one block per window") {
  TempDir tmp;
  auto r = hate_cli({"compare-windows", "--data", kToy, "--windows", "1,2", "--variants", "hate,ate", "--epochs",
                     "1", "--dim", "4", "--k", "1", "--out", tmp / "cmp.csv"});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  auto csv = lines(bin::read_file(tmp / "cmp.csv"));
  REQUIRE(csv.size() == 5);
  CHECK(csv[1].rfind("hate,1,1,", 0) == 0);
  CHECK(csv[2].rfind("ate,1,1,", 0) == 0);
  CHECK(csv[3].rfind("hate,2,1,", 0) == 0);
  CHECK(csv[4].rfind("ate,2,1,", 0) == 0);
  CHECK(hate_cli({"compare-windows", "--data", kToy, "--windows", "0"}).status == 2);
}
