#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = FILT_SNN_CLI;
const fs::path kFixtures = FILT_SNN_FIXTURES;

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI with stderr discarded and the dataset env var cleared.
Run cli(const std::string& args) {
  const std::string cmd = "env -u FILT_SNN_DATA " + kCli + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "filt_snn_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kMini = "--data " + (kFixtures / "mini").string();
const std::string kSmall = kMini + " --batches 3 --eval-every 1 -q";

}  // namespace

TEST_CASE("help exits 0 on every command") {
  for (const char* cmd : {"", "train", "eval", "encode", "analyze", "analyze delta-u", "analyze t-e-sweep",
                          "analyze converge", "analyze two-train", "sweep"}) {
    const auto r = cli(std::string(cmd) + " --help");
    CHECK_MESSAGE(r.status == 0, cmd);
    CHECK(r.out.find("Usage") != std::string::npos);
  }
}

TEST_CASE("usage errors exit 1") {
  CHECK(cli("").status == 1);
  CHECK(cli("frobnicate").status == 1);
  CHECK(cli("train --no-such-flag").status == 1);
  CHECK(cli("analyze t-e-sweep --shift-range 2:1:0.1").status == 1);
  CHECK(cli("analyze t-e-sweep --shift-range 0:1:0").status == 1);
  CHECK(cli("analyze delta-u --inputs 0,x").status == 1);
  CHECK(cli("sweep --axis eta --values '' " + kSmall).status == 1);
  CHECK(cli("sweep --axis depth --values 1 " + kSmall).status == 1);
}

TEST_CASE("train writes metrics, checkpoint and config copies reproducibly") {
  const fs::path a = scratch("train_a");
  const fs::path b = scratch("train_b");
  REQUIRE(cli("train --seed 7 " + kSmall + " -o " + a.string()).status == 0);
  REQUIRE(cli("train --seed 7 " + kSmall + " -o " + b.string()).status == 0);
  for (const char* f : {"metrics.csv", "checkpoint.bin", "config.json", "resolved.json"}) {
    CHECK(fs::exists(a / f));
  }
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
  CHECK(slurp(a / "checkpoint.bin") == slurp(b / "checkpoint.bin"));
  CHECK(slurp(a / "metrics.csv").rfind("batch,train_acc,test_acc,abstain_rate,", 0) == 0);
  const auto resolved = nlohmann::json::parse(slurp(a / "resolved.json"));
  CHECK(resolved["train"]["seed"] == 7);
  CHECK(resolved["train"]["batches"] == 3);

  const auto ev = cli("eval --checkpoint " + (a / "checkpoint.bin").string() + " " + kMini + " --json");
  REQUIRE(ev.status == 0);
  const auto doc = nlohmann::json::parse(ev.out);
  CHECK(doc["samples"] == 30);
}

TEST_CASE("config file is copied verbatim") {
  const fs::path dir = scratch("verbatim");
  const std::string text = "{\n  \"train\": {\"batches\": 2, \"batch_size\": 5}\n}\n";
  std::ofstream(dir / "run.json") << text;
  REQUIRE(cli("train -c " + (dir / "run.json").string() + " " + kMini + " -q -o " + (dir / "out").string()).status == 0);
  CHECK(slurp(dir / "out" / "config.json") == text);
}

TEST_CASE("data and config failures") {
  const fs::path dir = scratch("failures");
  CHECK(cli("train --data /nonexistent/mnist -q -o " + dir.string()).status == 2);
  CHECK(cli("eval --checkpoint /nonexistent/ckpt.bin " + kMini).status == 2);
  std::ofstream(dir / "bad.json") << "{\n\"train\": {\"bogus\": 1}\n}\n";
  const std::string cmd =
      "env -u FILT_SNN_DATA " + kCli + " train -c " + (dir / "bad.json").string() + " 2>&1 >/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512] = {};
  const std::size_t n = fread(buf, 1, sizeof buf - 1, pipe);
  const int raw = pclose(pipe);
  CHECK(WEXITSTATUS(raw) == 1);
  CHECK(std::string(buf, n).find("bad.json:2:") != std::string::npos);
}

TEST_CASE("dataset directory comes from the environment") {
  const fs::path dir = scratch("env");
  const std::string cmd = "FILT_SNN_DATA=" + (kFixtures / "mini").string() + " " + kCli +
                          " encode --index 3 >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
}

TEST_CASE("encode") {
  const auto zero = cli("encode --images " + (kFixtures / "zero-images-idx3-ubyte").string());
  REQUIRE(zero.status == 0);
  CHECK(zero.out.find("no spikes") != std::string::npos);

  const fs::path dir = scratch("encode");
  const auto real = cli("encode --index 0 " + kMini + " --json --csv " + (dir / "raster.csv").string());
  REQUIRE(real.status == 0);
  const auto doc = nlohmann::json::parse(real.out);
  CHECK(doc["spiking_channels"].get<int>() > 0);
  for (const auto& s : doc["spikes"]) {
    CHECK(s["time"].get<double>() >= 0.0);
    CHECK(s["time"].get<double>() <= 3.935);
  }
  CHECK(slurp(dir / "raster.csv").rfind("channel,row,col,time\n", 0) == 0);
  CHECK(cli("encode --index 30 " + kMini).status == 1);
}

TEST_CASE("analysis commands emit long-format CSV") {
  const auto du = cli("analyze delta-u --inputs 0,2 --shift 0.5");
  REQUIRE(du.status == 0);
  CHECK(du.out.rfind("x,series,value\n", 0) == 0);
  for (const char* s : {",input_1,", ",input_2,", ",total,", ",t_E,"}) CHECK(du.out.find(s) != std::string::npos);

  const auto te = cli("analyze t-e-sweep --shift-range 0.1:2.0:0.1");
  REQUIRE(te.status == 0);
  CHECK(te.out.find("2,single,3.92673761") != std::string::npos);

  const auto conv = cli("analyze converge --iterations 20");
  REQUIRE(conv.status == 0);
  CHECK(conv.out.find(",from_above,") != std::string::npos);
  CHECK(conv.out.find(",from_below,") != std::string::npos);

  const auto a = cli("analyze two-train --seed 1");
  const auto b = cli("analyze two-train --seed 1");
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find(",t_E_a,") != std::string::npos);
  CHECK(a.out.find(",t_E_b,") != std::string::npos);
  CHECK(cli("analyze two-train --train-a 0,- --train-b -,0 --iterations 5").status == 0);
}

TEST_CASE("sweep aggregates one series per value") {
  const fs::path dir = scratch("sweep");
  const auto r = cli("sweep --axis hidden --values 4,6,8 --seeds 2 " + kSmall + " -o " + dir.string());
  REQUIRE(r.status == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind("batch,series,mean,std,n\n", 0) == 0);
  std::set<std::string> series;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    series.insert(line.substr(c1 + 1, c2 - c1 - 1));
    CHECK(line.substr(line.rfind(',') + 1) == "2");
  }
  CHECK(series == std::set<std::string>{"hidden=4", "hidden=6", "hidden=8"});
}
