#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Runs the CLI binary with the given arguments; optional env prefix.
RunResult run_cli(const std::string& args, const std::string& env = "") {
  const std::string out_path = "cli_test_stdout.txt";
  const std::string err_path = "cli_test_stderr.txt";
  std::string cmd = env;
  if (!cmd.empty()) cmd += " ";
  cmd += std::string(OTCONC_CLI_PATH) + " " + args + " >" + out_path + " 2>" +
         err_path;
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return r;
}

void shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  (void)rc;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK(contains(help.out, "mean"));
  CHECK(contains(help.out, "figures"));

  CHECK(run_cli("mean --no-such-flag").code == 2);
  CHECK(run_cli("bogus-subcommand").code == 2);
  CHECK(run_cli("mean --dist no-such-family --cost power --p 1 "
                "--n-grid 1:3 --trials 2 --seed 1")
            .code == 2);
  CHECK(run_cli("slope --in /no/such/file.csv").code != 0);
}

TEST_CASE("mean curve command") {
  const std::string args =
      "mean --dist gaussian --params sigma=1 --cost power --p 1 "
      "--n-grid 1:5 --trials 20 --seed 7";
  const auto r = run_cli(args);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("dist,params,cost,p,a,N,trials,mean,stderr,seed", 0) == 0);
  CHECK(count_lines(r.out) == 6);  // header + 5 rows

  SUBCASE("bit-reproducible") {
    CHECK(run_cli(args).out == r.out);
  }
  SUBCASE("thread count does not change the bytes") {
    const auto t1 = run_cli(args + " --threads 1");
    const auto t4 = run_cli(args + " --threads 4");
    CHECK(t1.out == r.out);
    CHECK(t4.out == r.out);
    // The environment override wins over the flag.
    const auto env4 = run_cli(args + " --threads 1", "OTCONC_THREADS=4");
    CHECK(env4.out == r.out);
  }
}

TEST_CASE("divergent moment is a domain error") {
  const auto r = run_cli(
      "mean --dist gaussian --params sigma=1 --cost exp --p 2 --a 1 "
      "--n-grid 1:3 --trials 2 --seed 1");
  CHECK(r.code == 3);
  CHECK(contains(r.err, "error"));
}

TEST_CASE("slope pipeline") {
  const std::string csv_path = "cli_test_curve.csv";
  const auto m = run_cli(
      "mean --dist geometric --params q=0.5 --cost power --p 1 "
      "--n-grid 10:100:10 --trials 50 --seed 3 --out " +
      csv_path);
  REQUIRE(m.code == 0);
  const auto s = run_cli("slope --in " + csv_path + " --window 10:100");
  CHECK(s.code == 0);
  CHECK(contains(s.out, "slope="));
  CHECK(contains(s.out, "r2="));
  CHECK(contains(s.out, "points=10"));
  std::remove(csv_path.c_str());
}

TEST_CASE("tail command") {
  const auto r = run_cli(
      "tail --dist geometric --params q=0.5 --cost power --p 1 "
      "--n-grid 5:6 --trials 40 --seed 2 --x-grid 0.2,0.8");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("dist,params,cost,p,a,N,x,phat,ci_lo,ci_hi,trials,seed",
                    0) == 0);
  CHECK(count_lines(r.out) == 5);  // header + 2 N x 2 x
}

TEST_CASE("assumption report command") {
  const auto r = run_cli(
      "check --dist gaussian --params sigma=1 --cost power --p 1 --q 4");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "case=1"));
  CHECK(contains(r.out, "eta=0.5"));
  CHECK(contains(r.out, "gamma=4"));
  // K_g has the closed form 2 + 8/(sqrt(2)-1) = 21.31370849...
  CHECK(contains(r.out, "K_g=21.3137084"));
  CHECK(contains(r.out, "F="));

  // Divergent series are reported, not fatal.
  const auto d = run_cli(
      "check --dist geometric --params q=0.5 --cost power --p 1 --q 1.5");
  CHECK(d.code == 0);
  CHECK(contains(d.out, "case=2"));
}

TEST_CASE("partition bound command") {
  const auto r = run_cli(
      "partition-bound --dist gaussian --params sigma=2 --cost power --p 1 "
      "--n 20 --seed 5");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "term_I="));
  CHECK(contains(r.out, "total="));
  CHECK(contains(r.out, "exact="));
}

TEST_CASE("self-normalized tail command") {
  const auto r = run_cli(
      "selfnorm --dist gaussian --params sigma=1 --alpha 0.5 --delta 1 "
      "--n 50 --trials 200 --seed 9 --x-grid 0.2,0.5");
  CHECK(r.code == 0);
  CHECK(r.out.rfind(
            "dist,params,alpha,delta,N,x,phat,ci_lo,ci_hi,envelope,trials,"
            "seed",
            0) == 0);
  CHECK(count_lines(r.out) == 3);
}

TEST_CASE("figures command writes one CSV per configuration") {
  const std::string dir = "cli_test_figs";
  shell("rm -rf " + dir);
  const auto r = run_cli("figures --fig 4 --trials 3 --n-grid 1:6 --seed 1 "
                         "--out-dir " +
                         dir);
  CHECK(r.code == 0);
  int csvs = 0, svgs = 0;
  {
    const std::string list_path = "cli_test_ls.txt";
    shell("ls " + dir + " >" + list_path);
    std::ifstream in(list_path);
    std::string name;
    while (std::getline(in, name)) {
      if (name.size() > 4 && name.substr(name.size() - 4) == ".csv") ++csvs;
      if (name.size() > 4 && name.substr(name.size() - 4) == ".svg") ++svgs;
    }
    std::remove(list_path.c_str());
  }
  CHECK(csvs == 6);
  CHECK(svgs >= 1);
  shell("rm -rf " + dir);
}
