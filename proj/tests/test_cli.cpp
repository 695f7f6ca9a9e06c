#include <doctest.h>

#include <json.hpp>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "dualframe/io.hpp"
#include "support.hpp"

using namespace dualframe;
using namespace testsup;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code;
  std::string out;
};

fs::path cli_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("dualframe-cli-" + std::to_string(::getpid()));
    fs::create_directories(p);

    io::save_povm(p / "z.json", z_povm());
    io::save_povm(p / "tetra.json", tetrahedron_povm());
    io::save_povm(p / "mub6.json", mub6_povm());
    std::ofstream(p / "broken.json")
        << "{\"dim\":2,\"elements\":[[[[1,0],[0,0]],[[0,0],[0,0]]],"
           "[[[0,0],[0,0]],[[0,0],[0.9,0]]]]}";
    io::save_ensemble(p / "plus.json", plus_ensemble());
    io::save_ensemble(p / "skewed.json", skewed_ensemble());
    io::save_ensemble(p / "mixed.json", zbasis_ensemble());
    io::save_ensemble(p / "maximally-mixed.json", maximally_mixed_ensemble());
    io::save_operator(p / "sz.json", pauli_z());
    io::save_operator(p / "sx.json", pauli_x());
    return p;
  }();
  return dir;
}

CliResult run_cli(const std::string& args, const std::string& env = "") {
  const fs::path out = cli_dir() / "stdout.txt";
  const std::string cmd = (env.empty() ? "" : env + " ") +
                          std::string(DUALFRAME_CLI_PATH) + " " + args +
                          " > " + out.string() + " 2> " +
                          (cli_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return CliResult{WEXITSTATUS(status), text};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string arg(const fs::path& p) { return p.string(); }

}  // namespace

TEST_CASE("cli validate reports span and completeness") {
  const auto tetra =
      run_cli("validate --povm " + arg(cli_dir() / "tetra.json"));
  CHECK(tetra.exit_code == 0);
  const json jt = json::parse(tetra.out);
  CHECK(jt["valid"] == true);
  CHECK(jt["n_outcomes"] == 4);
  CHECK(jt["span_rank"] == 4);
  CHECK(jt["informationally_complete"] == true);

  const auto z = run_cli("validate --povm " + arg(cli_dir() / "z.json"));
  CHECK(z.exit_code == 0);
  const json jz = json::parse(z.out);
  CHECK(jz["span_rank"] == 2);
  CHECK(jz["informationally_complete"] == false);
}

TEST_CASE("cli validate fails on an incomplete measurement") {
  const auto r = run_cli("validate --povm " + arg(cli_dir() / "broken.json"));
  CHECK(r.exit_code == 1);
  const json j = json::parse(r.out);
  CHECK(j["valid"] == false);
  REQUIRE(j["errors"].size() == 1);
  CHECK(j["errors"][0]["kind"] == "IncompleteSum");
  CHECK(std::abs(j["errors"][0]["deviation"].get<double>() - 0.1) < 1e-12);
}

TEST_CASE("cli exits 2 on unreadable input") {
  const auto missing =
      run_cli("validate --povm " + arg(cli_dir() / "nope.json"));
  CHECK(missing.exit_code == 2);
  const json j = json::parse(missing.out);
  CHECK(j["error"]["kind"] == "ParseError");

  const auto usage = run_cli("validate");
  CHECK(usage.exit_code == 2);

  const auto unknown = run_cli("frobnicate");
  CHECK(unknown.exit_code == 2);
}

TEST_CASE("cli dual canonical returns the projectors themselves") {
  const fs::path out = cli_dir() / "zdual.json";
  const auto r = run_cli("dual --povm " + arg(cli_dir() / "z.json") +
                         " --kind canonical --out " + arg(out));
  CHECK(r.exit_code == 0);
  const DualFrame dual = io::load_dual(out);
  const Povm z = z_povm();
  for (Index i = 0; i < 2; ++i) {
    CHECK((dual.elements[i] - z.elements[i]).norm() < 1e-12);
  }
  const json j = json::parse(slurp(out));
  CHECK(j["diagnostics"]["verify_residual"].get<double>() <= 1e-12);
}

TEST_CASE("cli dual optimal yields the expected noise") {
  const fs::path out = cli_dir() / "mubopt.json";
  const auto r = run_cli("dual --povm " + arg(cli_dir() / "mub6.json") +
                         " --kind optimal --ensemble " +
                         arg(cli_dir() / "skewed.json") + " --out " +
                         arg(out));
  CHECK(r.exit_code == 0);
  const DualFrame dual = io::load_dual(out);
  const NoiseReport report =
      noise(mub6_povm(), dual, skewed_ensemble(), pauli_z());
  CHECK(report.delta == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("cli dual optimal at uniform weights equals canonical") {
  const fs::path opt = cli_dir() / "mubopt_uniform.json";
  const fs::path can = cli_dir() / "mubcan.json";
  CHECK(run_cli("dual --povm " + arg(cli_dir() / "mub6.json") +
                " --kind optimal --ensemble " +
                arg(cli_dir() / "maximally-mixed.json") + " --out " +
                arg(opt))
            .exit_code == 0);
  CHECK(run_cli("dual --povm " + arg(cli_dir() / "mub6.json") +
                " --kind canonical --out " + arg(can))
            .exit_code == 0);
  const DualFrame a = io::load_dual(opt);
  const DualFrame b = io::load_dual(can);
  for (Index i = 0; i < 6; ++i) {
    CHECK((a.elements[i] - b.elements[i]).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("cli noise basic and closed-form paths") {
  const auto basic = run_cli("noise --povm " + arg(cli_dir() / "z.json") +
                             " --ensemble " + arg(cli_dir() / "plus.json") +
                             " --observable " + arg(cli_dir() / "sz.json"));
  CHECK(basic.exit_code == 0);
  const json jb = json::parse(basic.out);
  CHECK(std::abs(jb["delta"].get<double>() - 1.0) < 1e-9);

  const auto min_path = run_cli(
      "noise --min --povm " + arg(cli_dir() / "mub6.json") + " --ensemble " +
      arg(cli_dir() / "skewed.json") + " --observable " +
      arg(cli_dir() / "sz.json"));
  CHECK(min_path.exit_code == 0);
  const json jm = json::parse(min_path.out);
  CHECK(std::abs(jm["delta"].get<double>() - 1.5) < 1e-9);
  CHECK(jm["cross_check_residual"].get<double>() <= 1e-7);
  CHECK(jm["diagnostics"]["eq12_residual"].get<double>() <= 1e-8);
  CHECK(jm["diagnostics"]["eq15_residual"].get<double>() <= 1e-8);
}

TEST_CASE("cli noise rejects out-of-span observables") {
  const auto r = run_cli("noise --povm " + arg(cli_dir() / "z.json") +
                         " --ensemble " + arg(cli_dir() / "plus.json") +
                         " --observable " + arg(cli_dir() / "sx.json"));
  CHECK(r.exit_code == 1);
  const json j = json::parse(r.out);
  CHECK(j["error"]["kind"] == "NotInSpan");
  CHECK(j["error"]["residual"].get<double>() > 1.0);
}

TEST_CASE("cli simulate hits the chi-square band and is deterministic") {
  const fs::path out1 = cli_dir() / "sim1.json";
  const fs::path out2 = cli_dir() / "sim2.json";
  const std::string args =
      "simulate --povm " + arg(cli_dir() / "z.json") + " --ensemble " +
      arg(cli_dir() / "plus.json") + " --observable " +
      arg(cli_dir() / "sz.json") +
      " --shots 100000 --reps 100 --seed 7 --mode per_state";
  CHECK(run_cli(args + " --out " + arg(out1)).exit_code == 0);
  CHECK(run_cli(args + " --out " + arg(out2)).exit_code == 0);
  CHECK(slurp(out1) == slurp(out2));  // byte-identical

  const json j = json::parse(slurp(out1));
  const double ratio = j["empirical_variance_times_n"].get<double>() /
                       j["analytic_delta"].get<double>();
  CHECK(ratio > 0.85);
  CHECK(ratio < 1.15);
}

TEST_CASE("cli simulate shows the optimal dual winning") {
  const std::string base =
      "simulate --povm " + arg(cli_dir() / "mub6.json") + " --ensemble " +
      arg(cli_dir() / "skewed.json") + " --observable " +
      arg(cli_dir() / "sz.json") +
      " --shots 50000 --reps 60 --seed 99 --mode per_state";
  const auto opt = run_cli(base + " --kind optimal");
  const auto can = run_cli(base + " --kind canonical");
  REQUIRE(opt.exit_code == 0);
  REQUIRE(can.exit_code == 0);
  const double vo =
      json::parse(opt.out)["empirical_variance_times_n"].get<double>();
  const double vc =
      json::parse(can.out)["empirical_variance_times_n"].get<double>();
  CHECK(vo < vc);
}

TEST_CASE("cli check accepts good duals and flags bad ones") {
  const fs::path zdual = cli_dir() / "zdual_check.json";
  CHECK(run_cli("dual --povm " + arg(cli_dir() / "z.json") +
                " --kind canonical --out " + arg(zdual))
            .exit_code == 0);
  const auto ok = run_cli("check --povm " + arg(cli_dir() / "z.json") +
                          " --dual " + arg(zdual));
  CHECK(ok.exit_code == 0);
  const json jok = json::parse(ok.out);
  CHECK(jok["verify_residual"].get<double>() <= 1e-12);
  CHECK(jok["pass"] == true);

  // A measurement used as its own dual is not a dual.
  const auto bad = run_cli("check --povm " + arg(cli_dir() / "mub6.json") +
                           " --dual " + arg(cli_dir() / "mub6.json"));
  CHECK(bad.exit_code == 1);
  const json jbad = json::parse(bad.out);
  CHECK(jbad["verify_residual"].get<double>() > 0.1);

  // Round trip: optimal dual written by `dual` passes `check` with the
  // matching ensemble.
  const fs::path mubopt = cli_dir() / "mubopt_check.json";
  CHECK(run_cli("dual --povm " + arg(cli_dir() / "mub6.json") +
                " --kind optimal --ensemble " +
                arg(cli_dir() / "skewed.json") + " --out " + arg(mubopt))
            .exit_code == 0);
  const auto opt = run_cli("check --povm " + arg(cli_dir() / "mub6.json") +
                           " --dual " + arg(mubopt) + " --ensemble " +
                           arg(cli_dir() / "skewed.json"));
  CHECK(opt.exit_code == 0);
  const json jopt = json::parse(opt.out);
  CHECK(jopt["eq12_residual"].get<double>() <= 1e-9);
  CHECK(jopt["eq15_residual"].get<double>() <= 1e-9);
}

TEST_CASE("cli dual output is byte-stable") {
  const fs::path a = cli_dir() / "stable_a.json";
  const fs::path b = cli_dir() / "stable_b.json";
  const std::string args = "dual --povm " + arg(cli_dir() / "mub6.json") +
                           " --kind optimal --ensemble " +
                           arg(cli_dir() / "skewed.json");
  CHECK(run_cli(args + " --out " + arg(a)).exit_code == 0);
  CHECK(run_cli(args + " --out " + arg(b)).exit_code == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("cli seed comes from the environment unless the flag wins") {
  const std::string base =
      "simulate --povm " + arg(cli_dir() / "z.json") + " --ensemble " +
      arg(cli_dir() / "plus.json") + " --observable " +
      arg(cli_dir() / "sz.json") + " --shots 2000 --reps 5 --mode pooled";
  const auto from_env = run_cli(base, "DUALFRAME_SEED=42");
  CHECK(from_env.exit_code == 0);
  CHECK(json::parse(from_env.out)["seed"] == 42);
  const auto flag_wins = run_cli(base + " --seed 9", "DUALFRAME_SEED=42");
  CHECK(flag_wins.exit_code == 0);
  CHECK(json::parse(flag_wins.out)["seed"] == 9);
}

TEST_CASE("cli tolerance overrides are echoed") {
  const auto r = run_cli("validate --povm " + arg(cli_dir() / "z.json") +
                         " --tol-dual 1e-6");
  CHECK(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j["tolerances"]["dual"].get<double>() == 1e-6);
}
