#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>

#include <json.hpp>

#include "test_support.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + COSEM_CLI_PATH + "\" " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

// key=value pairs of the first stdout line starting with `prefix`.
std::map<std::string, std::string> fields(const std::string& out, const std::string& prefix) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) != 0) continue;
    std::map<std::string, std::string> kv;
    std::istringstream words(line);
    std::string w;
    while (words >> w) {
      const auto eq = w.find('=');
      if (eq != std::string::npos) kv[w.substr(0, eq)] = w.substr(eq + 1);
    }
    return kv;
  }
  return {};
}

// Synthesizes and prepares a small corpus; returns the bundle path.
std::filesystem::path small_corpus(const cosem::testing::TempDir& dir, const std::string& coupling,
                                   int users = 5, int events = 300) {
  const auto events_path = dir / (coupling + ".jsonl");
  const auto bundle = dir / (coupling + ".bin");
  REQUIRE(cli("synth --seed 3 --users " + std::to_string(users) + " --apps 8 --chunks 6 " +
              "--events-per-user " + std::to_string(events) + " --coupling " + coupling +
              " --noise 0 --out " + q(events_path))
              .code == 0);
  REQUIRE(cli("prepare --input " + q(events_path) + " --out " + q(bundle) +
              " --min-app-count 1 --min-user-records 1")
              .code == 0);
  return bundle;
}

}  // namespace

TEST_CASE("synth") {
  cosem::testing::TempDir dir("cli_synth");
  const auto a = dir / "a.jsonl", b = dir / "b.jsonl", c = dir / "c.jsonl";
  const Run r = cli("synth --seed 7 --users 3 --events-per-user 40 --out " + q(a));
  CHECK(r.code == 0);
  CHECK(fields(r.out, "events=")["events"] == "120");
  CHECK(cli("synth --seed 7 --users 3 --events-per-user 40 --out " + q(b)).code == 0);
  CHECK(cli("synth --seed 8 --users 3 --events-per-user 40 --out " + q(c)).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));

  CHECK(cli("synth --users 0 --out " + q(dir / "x.jsonl")).code == 1);
  CHECK(cli("synth --coupling sideways --out " + q(dir / "x.jsonl")).code == 1);
  CHECK(cli("synth").code == 1);
  CHECK(cli("").code == 1);
}

TEST_CASE("prepare") {
  cosem::testing::TempDir dir("cli_prepare");
  const auto events = dir / "events.jsonl";
  REQUIRE(cli("synth --seed 2 --users 5 --events-per-user 200 --apps 6 --out " + q(events)).code == 0);
  const auto b1 = dir / "one.bin", b2 = dir / "two.bin";
  const std::string args = " --min-app-count 1 --min-user-records 1";
  const Run r = cli("prepare --input " + q(events) + " --out " + q(b1) + args);
  REQUIRE(r.code == 0);
  CHECK(cli("prepare --input " + q(events) + " --out " + q(b2) + args).code == 0);
  CHECK(slurp(b1) == slurp(b2));

  CHECK(fields(r.out, "malformed_lines=")["malformed_lines"] == "0");
  CHECK(fields(r.out, "app_vocab=")["app_vocab"] == "6");

  // Every user line obeys the floor rule for 70/10/20.
  std::regex user_line(R"(user=(\S+) train=(\d+) validation=(\d+) test=(\d+))");
  std::size_t users = 0, total = 0;
  for (std::sregex_iterator it(r.out.begin(), r.out.end(), user_line), end; it != end; ++it) {
    const std::size_t tr = std::stoul((*it)[2]), va = std::stoul((*it)[3]), te = std::stoul((*it)[4]);
    const std::size_t n = tr + va + te;
    CHECK(tr == static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(n) + 1e-9)));
    CHECK(va == static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(n) + 1e-9)));
    ++users;
    total += n;
  }
  CHECK(users == 5);
  const std::size_t splits = std::stoul(fields(r.out, "split=train")["instances"]) +
                             std::stoul(fields(r.out, "split=validation")["instances"]) +
                             std::stoul(fields(r.out, "split=test")["instances"]);
  CHECK(splits == total);

  // Config file values apply unless a flag overrides them.
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"min_app_count": 100000, "min_user_records": 1})";
  }
  CHECK(cli("prepare --input " + q(events) + " --out " + q(dir / "c.bin") + " --config " +
            q(dir / "cfg.json"))
            .code == 3);
  CHECK(cli("prepare --input " + q(events) + " --out " + q(dir / "c.bin") + " --config " +
            q(dir / "cfg.json") + " --min-app-count 1")
            .code == 0);

  // Every app occurs exactly 9 times.
  {
    std::ofstream out(dir / "nine.jsonl");
    for (int app = 0; app < 3; ++app) {
      for (int i = 0; i < 9; ++i) {
        out << R"({"user":"u)" << i % 2 << R"(","ts":)" << (app * 9 + i) * 100 << R"(,"app":"app)"
            << app << R"(","sem":["word"]})" << "\n";
      }
    }
  }
  CHECK(cli("prepare --input " + q(dir / "nine.jsonl") + " --out " + q(dir / "n.bin") +
            " --min-app-count 10 --min-user-records 1")
            .code == 3);

  {
    std::ofstream out(dir / "broken.jsonl");
    out << "{\"user\": oops\n";
  }
  CHECK(cli("prepare --input " + q(dir / "broken.jsonl") + " --out " + q(dir / "n.bin")).code == 2);
  CHECK(cli("prepare --input " + q(dir / "absent.jsonl") + " --out " + q(dir / "n.bin")).code == 4);
  CHECK(cli("prepare --input " + q(events) + " --out " + q(dir / "n.bin") + " --format xml").code == 1);
}

TEST_CASE("train and eval") {
  cosem::testing::TempDir dir("cli_train");
  const auto bundle = small_corpus(dir, "history_only");
  const auto ckpt = dir / "m.ckpt";
  const std::string hyper = " --embed-dim 8 --hidden-width 8 --max-epochs 4 --patience 2 --learning-rate 0.01";

  const Run t = cli("train --corpus " + q(bundle) + " --variant cosem --out " + q(ckpt) + hyper);
  REQUIRE(t.code == 0);
  std::regex epoch_line(R"(^epoch=(\d+) loss=([0-9.eE+-]+) val_mrr=([0-9.]+)$)");
  std::istringstream lines(t.out);
  std::string line, last;
  int epochs = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("epoch=", 0) == 0) {
      CHECK(std::regex_match(line, epoch_line));
      ++epochs;
    }
    last = line;
  }
  CHECK(epochs >= 1);
  CHECK(epochs <= 4);
  CHECK(last.rfind("best_epoch=", 0) == 0);
  CHECK(fields(t.out, "best_epoch=")["variant"] == "cosem");
  CHECK(std::filesystem::exists(ckpt));

  // Identical runs give identical artifacts.
  const auto ckpt2 = dir / "m2.ckpt";
  REQUIRE(cli("train --corpus " + q(bundle) + " --out " + q(ckpt2) + hyper).code == 0);
  CHECK(slurp(ckpt) == slurp(ckpt2));

  const auto report = dir / "report.json";
  const Run e5 = cli("eval --corpus " + q(bundle) + " --checkpoint " + q(ckpt) +
                     " --baseline mru --baseline random --k 5 --report " + q(report));
  REQUIRE(e5.code == 0);
  const auto mru = fields(e5.out, "model=MRU");
  const auto rnd = fields(e5.out, "model=Random");
  REQUIRE(!mru.empty());
  REQUIRE(!rnd.empty());
  CHECK(std::stod(mru.at("mrr")) > std::stod(rnd.at("mrr")) + 0.1);

  const auto doc = nlohmann::json::parse(slurp(report));
  CHECK(doc["models"].size() == 3);
  CHECK(doc["split"] == "test");
  const std::string table = slurp(dir / "report.json.txt");
  for (const char* needle : {"CoSEM", "MRU", "Random", "M@5", "H@5"}) {
    CHECK(table.find(needle) != std::string::npos);
  }

  const auto report2 = dir / "report2.json";
  REQUIRE(cli("eval --corpus " + q(bundle) + " --checkpoint " + q(ckpt) +
              " --baseline mru --baseline random --k 5 --report " + q(report2))
              .code == 0);
  CHECK(slurp(report) == slurp(report2));

  const Run e1 = cli("eval --corpus " + q(bundle) + " --checkpoint " + q(ckpt) + " --k 1");
  REQUIRE(e1.code == 0);
  const auto m1 = fields(e1.out, "model=CoSEM");
  const auto m5 = fields(e5.out, "model=CoSEM");
  CHECK(std::stod(m1.at("hr")) <= std::stod(m5.at("hr")));

  const Run ds = cli("train --corpus " + q(bundle) + " --variant dnn-s --out " + q(dir / "s.ckpt") + hyper);
  CHECK(ds.code == 0);
  CHECK(fields(ds.out, "best_epoch=")["variant"] == "dnn-s");

  CHECK(cli("train --corpus " + q(dir / "absent.bin") + " --out " + q(dir / "x.ckpt")).code == 4);
  CHECK(cli("train --corpus " + q(bundle) + " --variant dnn-x --out " + q(dir / "x.ckpt")).code == 1);
  CHECK(cli("eval --corpus " + q(bundle)).code == 1);
  CHECK(cli("eval --corpus " + q(bundle) + " --checkpoint " + q(dir / "absent.ckpt")).code == 4);
  {
    std::ofstream junk(dir / "junk.ckpt", std::ios::binary);
    junk << "not a checkpoint at all";
  }
  CHECK(cli("eval --corpus " + q(bundle) + " --checkpoint " + q(dir / "junk.ckpt")).code == 8);
}

TEST_CASE("eval exits 6 when every instance is skipped") {
  cosem::testing::TempDir dir("cli_skip");
  const auto bundle = small_corpus(dir, "joint", 2, 100);
  const auto ckpt = dir / "m.ckpt";
  REQUIRE(cli("train --corpus " + q(bundle) + " --out " + q(ckpt) +
              " --embed-dim 4 --hidden-width 4 --max-epochs 1")
              .code == 0);

  // A corpus whose apps the checkpoint has never seen.
  {
    std::ofstream out(dir / "other.jsonl");
    for (int i = 0; i < 30; ++i) {
      out << R"({"user":"z","ts":)" << i * 3600 << R"(,"app":"unseen)" << i % 2
          << R"(","sem":["c01"]})" << "\n";
    }
  }
  const auto other = dir / "other.bin";
  REQUIRE(cli("prepare --input " + q(dir / "other.jsonl") + " --out " + q(other) +
              " --min-app-count 1 --min-user-records 1")
              .code == 0);
  CHECK(cli("eval --corpus " + q(other) + " --checkpoint " + q(ckpt)).code == 6);
}
