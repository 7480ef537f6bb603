#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "pplab/errors.hpp"
#include "pplab/operator.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
namespace cli = pplab::cli;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pplab_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "pplab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

cli::RunResult execute(const std::string& command, const json& overrides) {
  return cli::execute(cli::resolve(command, json(), overrides));
}

}  // namespace

TEST_CASE("every subcommand has a complete default schema") {
  for (const auto& name : cli::subcommands()) {
    CAPTURE(name);
    const json d = cli::defaults(name);
    CHECK(d.at("command") == name);
    CHECK(d.contains("output"));
    CHECK(d.contains("seed"));
    CHECK(cli::resolve(name, json(), json::object()) == cli::resolve(name, json::object(), json::object()));
  }
}

TEST_CASE("documented examples") {
  SUBCASE("capacity of the unit ball") {
    const auto r = execute("capacity", {{"operator", {{"preset", "laplacian"}}}, {"set", {{"type", "ball"}, {"radius", 1.0}}},
                                        {"grid", {{"h", 0.1}}}});
    REQUIRE(r.exit_code == cli::exit_ok);
    CHECK(r.summary.at("value").get<double>() == doctest::Approx(4 * std::numbers::pi).epsilon(0.10));
    CHECK_FALSE(r.artifacts.empty());
  }
  SUBCASE("power cusp in the biharmonic case") {
    const auto r = execute("cusp", {{"profile", {{"kind", "power"}, {"p", 2.0}}}, {"m", 2}, {"n", 6}});
    REQUIRE(r.exit_code == cli::exit_ok);
    CHECK(r.summary.at("classification") == "irregular");
  }
  SUBCASE("biharmonic positivity in five dimensions") {
    const auto r = execute("positivity", {{"operator", {{"preset", "polyharmonic"}, {"m", 2}, {"n", 5}}}});
    REQUIRE(r.exit_code == cli::exit_ok);
    CHECK(r.summary.at("status") == "positive_at_resolution");
  }
}

TEST_CASE("exit codes") {
  SUBCASE("validation") {
    CHECK(execute("capacity", {{"set", {{"type", "ball"}, {"radius", -1.0}}}}).exit_code == cli::exit_validation);
    const auto r = execute("capacity", {{"set", {{"type", "ball"}, {"radius", -1.0}}}});
    CHECK(r.message.find("radius") != std::string::npos);
    CHECK_THROWS_AS(cli::resolve("capacity", json(), {{"no_such_key", 1}}), pplab::ConfigError);
    CHECK_THROWS_AS(cli::resolve("capacity", {{"grid", {{"hh", 0.1}}}}, json::object()), pplab::ConfigError);
    CHECK_THROWS_AS(cli::resolve("capacity", {{"command", "cusp"}}, json::object()), pplab::ConfigError);
    CHECK(run({"capacity", "--no-such-flag"}) == cli::exit_validation);
  }
  SUBCASE("unsupported regime") {
    const auto r = execute("cusp", {{"m", 1}, {"n", 2}});
    CHECK(r.exit_code == cli::exit_unsupported);
    CHECK(r.summary.at("error") == "unsupported_regime");
  }
  SUBCASE("inconclusive only when a verdict is required") {
    const json cusp = {{"domain", {{"type", "cusp"}, {"profile", {{"kind", "exponential"}, {"a", 1.0}}}}}};
    const auto soft = execute("wiener", cusp);
    CHECK(soft.exit_code == cli::exit_ok);
    CHECK(soft.summary.at("verdict").at("classification") == "inconclusive");
    json hard = cusp;
    hard["require_verdict"] = true;
    CHECK(execute("wiener", hard).exit_code == cli::exit_inconclusive);
  }
}

TEST_CASE("flags override the configuration file") {
  const auto dir = scratch_dir("override");
  {
    std::ofstream f(dir / "cfg.json");
    f << json({{"profile", {{"kind", "power"}, {"p", 3.0}}}, {"m", 1}, {"n", 4}}).dump();
  }
  REQUIRE(run({"cusp", "--config", (dir / "cfg.json").string(), "--p", "1.5", "--out", (dir / "o").string()}) ==
          cli::exit_ok);
  const json manifest = json::parse(slurp(dir / "o" / "manifest.json"));
  CHECK(manifest.at("profile").at("p") == 1.5);
  CHECK(manifest.at("n") == 4);
  // Integral of tau^{1.5+2-4} over (0,1) is 1/0.5.
  CHECK(json::parse(slurp(dir / "o" / "cusp.json")).at("integral").get<double>() == doctest::Approx(2.0));
}

TEST_CASE("rerunning a manifest is bitwise identical") {
  const auto dir = scratch_dir("rerun");
  const std::vector<std::vector<std::string>> runs = {
      {"capacity", "--ball", "0.5", "--h", "0.125"},
      {"wiener", "--j-max", "6"},
      {"positivity", "--polyharmonic", "--m", "1", "--n", "3", "--k-max", "4"},
  };
  for (std::size_t k = 0; k < runs.size(); ++k) {
    CAPTURE(runs[k][0]);
    const fs::path a = dir / ("a" + std::to_string(k)), b = dir / ("b" + std::to_string(k));
    auto args = runs[k];
    args.insert(args.end(), {"--out", a.string()});
    REQUIRE(run(args) == cli::exit_ok);
    REQUIRE(run({runs[k][0], "--config", (a / "manifest.json").string(), "--out", b.string()}) == cli::exit_ok);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      const auto name = e.path().filename();
      CAPTURE(name.string());
      REQUIRE(fs::exists(b / name));
      if (name == "manifest.json") {
        json ma = json::parse(slurp(a / name)), mb = json::parse(slurp(b / name));
        ma.erase("output");
        mb.erase("output");
        CHECK(ma == mb);
      } else {
        CHECK(slurp(a / name) == slurp(b / name));
      }
      ++files;
    }
    CHECK(files >= 2u);
  }
}

TEST_CASE("operator file round trip") {
  const auto dir = scratch_dir("operator");
  const auto op = pplab::EllipticOperator::polyharmonic(2, 5);
  {
    std::ofstream f(dir / "op.json");
    f << op.to_json().dump(2);
  }
  REQUIRE(run({"symbol-check", "--operator-file", (dir / "op.json").string(), "--out", (dir / "o").string()}) ==
          cli::exit_ok);
  const json manifest = json::parse(slurp(dir / "o" / "manifest.json"));
  CHECK(manifest.at("operator_file").is_null());
  const auto back = pplab::EllipticOperator::from_json(manifest.at("operator"));
  for (const std::vector<double>& xi : {std::vector<double>{1, 0, 0, 0, 0}, {0.3, -0.7, 0.2, 0.5, 0.1}})
    CHECK(back.symbol(xi) == doctest::Approx(op.symbol(xi)).epsilon(1e-14));
  const json summary = json::parse(slurp(dir / "o" / "symbol-check.json"));
  CHECK(summary.at("elliptic") == true);
  CHECK(run({"symbol-check", "--operator-file", (dir / "missing.json").string(), "--out", (dir / "p").string()}) ==
        cli::exit_validation);
}
