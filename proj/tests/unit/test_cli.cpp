#include <doctest.h>
#include <httplib.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = MODELSCOPE_CLI;
const std::string kData = std::string(MODELSCOPE_DATA_DIR) + "/artificialeg.csv";

struct Outcome {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("modelscope_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome run(const std::string& args, const std::string& env = "") {
  const auto dir = scratch("io");
  const auto out = dir / "stdout", err = dir / "stderr";
  const std::string cmd = env + " " + kCli + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// Server child process; reads the bound port from its first output line.
class Server {
 public:
  explicit Server(const fs::path& results) {
    int fds[2];
    REQUIRE(::pipe(fds) == 0);
    pid_ = ::fork();
    if (pid_ == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      ::setenv("MODELSCOPE_CORES", "1", 1);
      ::execl(kCli.c_str(), kCli.c_str(), "serve", "--results", results.c_str(), "--port", "0",
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    std::string line;
    char ch;
    while (::read(fds[0], &ch, 1) == 1 && ch != '\n') line += ch;
    ::close(fds[0]);
    const auto colon = line.rfind(':');
    REQUIRE(colon != std::string::npos);
    port_ = std::stoi(line.substr(colon + 1));
  }
  ~Server() {
    ::kill(pid_, SIGTERM);
    ::waitpid(pid_, nullptr, 0);
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  pid_t pid_ = -1;
  int port_ = 0;
};

}  // namespace

TEST_CASE("fit prints the coefficient table") {
  const auto r = run("fit --data " + kData + " --response y --model x8");
  CHECK(r.code == 0);
  CHECK(r.out.find("y~x8") != std::string::npos);
  CHECK(r.out.find("logLik -105.72") != std::string::npos);
}

TEST_CASE("step prints the selected model") {
  const auto r = run("step --data " + kData + " --response y");
  CHECK(r.code == 0);
  CHECK(r.out.find("y~x1+x2+x3+x4+x5+x6+x7+x9") != std::string::npos);
}

TEST_CASE("vis writes the result and plots") {
  const auto dir = scratch("vis");
  const auto r = run("vis --data " + kData + " --response y --B 20 --seed 4 --cores 1 --plots --out " + dir.string());
  CHECK(r.code == 0);
  REQUIRE(fs::exists(dir / "vis.json"));
  const auto doc = json::parse(slurp(dir / "vis.json"));
  CHECK(doc.at("kind") == "vis");
  CHECK(doc.at("schema_version") == "1.0");
  for (const char* k : {"lvk", "boot", "vip"}) CHECK(fs::exists(dir / "plots" / (std::string(k) + ".svg")));

  const auto again = scratch("vis_env");
  CHECK(run("vis --data " + kData + " --response y --B 20 --seed 4 --plots --out " + again.string(), "MODELSCOPE_CORES=3")
            .code == 0);
  CHECK(slurp(dir / "vis.json") == slurp(again / "vis.json"));

  const auto exported = scratch("export");
  CHECK(run("export --input " + (dir / "vis.json").string() + " --out " + exported.string()).code == 0);
  CHECK(slurp(exported / "plots" / "vip.svg") == slurp(dir / "plots" / "vip.svg"));
}

TEST_CASE("af writes the result") {
  const auto dir = scratch("af");
  const auto r = run("af --data " + kData + " --response y --B 20 --n-c 20 --seed 2 --cores 1 --plots --out " +
                     dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("best_only_true") != std::string::npos);
  const auto doc = json::parse(slurp(dir / "af.json"));
  CHECK(doc.at("kind") == "af");
  CHECK(doc.at("c_grid").size() == 20);
  CHECK(fs::exists(dir / "plots" / "af.svg"));
}

TEST_CASE("validation and runtime errors") {
  auto r = run("vis --data " + kData + " --response y");
  CHECK(r.code == 2);  // --seed is required
  r = run("vis --data " + kData + " --response y --seed 1 --B 0");
  CHECK(r.code == 2);
  CHECK(json::parse(r.err).at("error").at("status") == "InvalidArgument");
  r = run("vis --data " + kData + " --response y --seed 1 --nbest lots");
  CHECK(r.code == 2);
  r = run("fit --data /no/such/file.csv --response y");
  CHECK(r.code == 1);
  CHECK(json::parse(r.err).at("error").at("status") == "Io");
  r = run("fit --data " + kData + " --response nope");
  CHECK(r.code == 1);
  CHECK(json::parse(r.err).at("error").at("status") == "MissingColumn");
  r = run("frobnicate");
  CHECK(r.code == 2);
}

TEST_CASE("server lifecycle") {
  const auto root = scratch("server");
  // one finished run on disk before start-up
  REQUIRE(run("vis --data " + kData + " --response y --B 10 --seed 1 --cores 1 --out " + (root / "seeded").string())
              .code == 0);
  Server server(root);
  auto c = server.client();

  auto res = c.Get("/api/runs");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto runs = json::parse(res->body);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].at("id") == "seeded");
  CHECK(runs[0].at("status") == "done");

  res = c.Get("/api/vis/seeded");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body).at("kind") == "vis");
  CHECK(c.Get("/api/af/seeded")->status == 404);
  CHECK(c.Get("/api/vis/unknown")->status == 404);
  CHECK(c.Get("/api/runs/unknown/status")->status == 404);
  res = c.Get("/api/dataset/seeded/columns");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body.find("x8") != std::string::npos);
  res = c.Get("/");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body.find("<html") != std::string::npos);

  CHECK(c.Post("/api/af", "{not json", "application/json")->status == 422);
  CHECK(c.Post("/api/af", json{{"data", kData}, {"response", "y"}}.dump(), "application/json")->status == 422);
  CHECK(c.Post("/api/vis", json{{"id", "seeded"}, {"data", kData}, {"response", "y"}, {"seed", 1}}.dump(),
               "application/json")
            ->status == 409);

  const json body = {{"id", "fresh"}, {"data", kData}, {"response", "y"}, {"seed", 3}, {"B", 20}, {"n_c", 15}};
  res = c.Post("/api/af", body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 202);
  CHECK(json::parse(res->body).at("id") == "fresh");
  CHECK(c.Post("/api/af", body.dump(), "application/json")->status == 409);

  std::vector<std::string> seen;
  for (int i = 0; i < 600; ++i) {
    res = c.Get("/api/runs/fresh/status");
    REQUIRE(res);
    const std::string s = json::parse(res->body).at("status");
    if (seen.empty() || seen.back() != s) seen.push_back(s);
    if (s == "done" || s == "failed") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  REQUIRE_FALSE(seen.empty());
  CHECK(seen.back() == "done");
  for (const auto& s : seen) CHECK((s == "queued" || s == "running" || s == "done"));
  res = c.Get("/api/af/fresh");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body).at("B") == 20);
  CHECK(fs::exists(root / "fresh" / "af.json"));

  res = c.Post("/api/vis", json{{"data", kData}, {"response", "y"}, {"seed", 1}, {"B", 5}}.dump(),
               "application/json");
  REQUIRE(res);
  CHECK(res->status == 202);
  CHECK(json::parse(res->body).at("id").get<std::string>().rfind("run-", 0) == 0);
}
