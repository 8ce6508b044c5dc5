#include <filesystem>
#include <fstream>
#include <sstream>

#include "coopstyle/cli/commands.hpp"
#include "coopstyle/cli/config_file.hpp"
#include "coopstyle/cli/svg_plot.hpp"
#include "coopstyle/error.hpp"
#include "coopstyle/trainer/trainer.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace coopstyle;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "coopstyle");
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("coopstyle_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

const char* kSmallRun =
    "[algo]\n"
    "steps_per_epoch = 400\n"
    "actor_iters = 3\n"
    "critic_iters = 3\n"
    "disc_iters = 3\n"
    "[styles]\n"
    "candidates = 5\n"
    "state_batch = 16\n";

void save_init_checkpoints(const fs::path& dir, trainer::Variant v, std::uint64_t first_seed, int n) {
  fs::create_directories(dir);
  for (int i = 0; i < n; ++i) {
    trainer::RunConfig c;
    c.variant = v;
    c.seed = first_seed + static_cast<std::uint64_t>(i);
    c.styles.epsilon = trainer::variant_default_epsilon(v);
    nn::save_checkpoint(dir / ("seed" + std::to_string(i) + ".txt"), trainer::to_checkpoint(trainer::init_trainer(c)));
  }
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config defaults round trip") {
    const trainer::RunConfig defaults;
    const auto text = cli::emit_config(defaults);
    const auto parsed = cli::parse_config(text);
    CHECK(parsed.cfg == defaults);
    CHECK(parsed.is_explicit("styles.epsilon"));
    CHECK(parsed.is_explicit("env.head_center_x"));
    CHECK(cli::emit_config(parsed.cfg) == text);
    CHECK(text.find("[env]") != std::string::npos);
    CHECK(text.find("[algo]") != std::string::npos);
    CHECK(text.find("[styles]") != std::string::npos);
    CHECK(text.find("[run]") != std::string::npos);

    trainer::RunConfig odd;
    odd.algo.actor_lr = 0.1 + 0.2;
    odd.env.mouth_offset.x = -1.0 / 3.0;
    odd.seed = 18446744073709551615ull;
    odd.variant = trainer::Variant::PpoPpo;
    CHECK(cli::parse_config(cli::emit_config(odd)).cfg == odd);
  }

  TEST_CASE("config errors name the line and key") {
    auto expect_error = [](const std::string& text, const std::string& fragment) {
      try {
        (void)cli::parse_config(text);
        FAIL("expected ConfigError for: " << text);
      } catch (const ConfigError& e) {
        CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
      }
    };
    expect_error("[algo]\ngamma = 0.9\nbogus = 1\n", "line 3: key 'bogus'");
    expect_error("[algo]\n\ngamma = abc\n", "line 3: key 'gamma'");
    expect_error("gamma = 0.9\n", "line 1: key 'gamma'");
    expect_error("[physics]\n", "line 1");
    expect_error("[run]\nvariant = TD3\n", "line 2: key 'variant'");
    expect_error("[run]\nseed = 1\nseed = 2\n", "line 3: key 'seed'");
    expect_error("[env]\njust text\n", "line 2");
    expect_error("[algo]\nactor_iters = 2.5\n", "line 2: key 'actor_iters'");
    const auto ok = cli::parse_config("# comment\n[run]\nseed = 5  # trailing\n\n[algo]\ngamma=0.5\n");
    CHECK(ok.cfg.seed == 5);
    CHECK(ok.cfg.algo.gamma == 0.5);
    CHECK_FALSE(ok.is_explicit("styles.epsilon"));
  }

  TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"nonsense"}).code == 2);
    CHECK(run({"train"}).code == 2);  // --out missing
    CHECK(run({"--help"}).code == 0);
    const auto d = run({"defaults"});
    CHECK(d.code == 0);
    CHECK(cli::parse_config(d.out).cfg == trainer::RunConfig{});
  }

  TEST_CASE("train command") {
    const auto dir = fresh_dir("train");
    const auto missing = run({"train", (dir / "absent.cfg").string(), "--out", (dir / "r0").string()});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("absent.cfg") != std::string::npos);

    write(dir / "small.cfg", kSmallRun);
    const auto ok = run({"train", (dir / "small.cfg").string(), "--variant", "PPO-PPO", "--epochs", "1", "--seed", "4",
                         "--out", (dir / "r1").string()});
    REQUIRE_MESSAGE(ok.code == 0, ok.err);
    const auto metrics = slurp(dir / "r1" / "metrics.csv");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 2);
    CHECK(fs::exists(dir / "r1" / "final.txt"));
    const auto echo = cli::parse_config(slurp(dir / "r1" / "config.echo")).cfg;
    CHECK(echo.variant == trainer::Variant::PpoPpo);
    CHECK(echo.styles.epsilon == 0.0);
    CHECK(echo.seed == 4);
    CHECK(echo.epochs == 1);
    CHECK(echo.algo.steps_per_epoch == 400);

    // Same flags again: byte-identical metrics.
    const auto again = run({"train", (dir / "small.cfg").string(), "--variant", "PPO-PPO", "--epochs", "1", "--seed",
                            "4", "--out", (dir / "r2").string()});
    REQUIRE(again.code == 0);
    CHECK(slurp(dir / "r2" / "metrics.csv") == metrics);

    write(dir / "conflict.cfg", std::string(kSmallRun) + "epsilon = 0.5\n");
    const auto conflict =
        run({"train", (dir / "conflict.cfg").string(), "--variant", "PPO-PPO", "--out", (dir / "r3").string()});
    CHECK(conflict.code == 2);
    CHECK(conflict.err.find("epsilon") != std::string::npos);
    CHECK(run({"train", "--variant", "PPO-LPPO", "--epsilon", "0.3", "--out", (dir / "r4").string()}).code == 2);
    CHECK(run({"train", "--variant", "PPO-LPPO-adv", "--epsilon", "0", "--out", (dir / "r5").string()}).code == 2);

    write(dir / "bad.cfg", "[algo]\nwhat = 1\n");
    const auto bad = run({"train", (dir / "bad.cfg").string(), "--out", (dir / "r6").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("line 2") != std::string::npos);

    // Output location that cannot be created is a runtime failure.
    write(dir / "blocker", "x");
    const auto io = run({"train", (dir / "small.cfg").string(), "--variant", "PPO-PPO", "--epochs", "1", "--out",
                         (dir / "blocker" / "sub").string()});
    CHECK(io.code == 1);
    fs::remove_all(dir);
  }

  TEST_CASE("train resume through the command line") {
    const auto dir = fresh_dir("resume");
    write(dir / "small.cfg", kSmallRun);
    const std::string cfg = (dir / "small.cfg").string();
    REQUIRE(run({"train", cfg, "--variant", "PPO-LPPO", "--epochs", "2", "--out", (dir / "a").string()}).code == 0);
    REQUIRE(run({"train", cfg, "--variant", "PPO-LPPO", "--epochs", "1", "--out", (dir / "b").string()}).code == 0);
    REQUIRE(run({"train", cfg, "--variant", "PPO-LPPO", "--epochs", "2", "--out", (dir / "b").string(), "--resume",
                 (dir / "b" / "final.txt").string()})
                .code == 0);
    CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("crosseval command") {
    const auto dir = fresh_dir("crosseval");
    save_init_checkpoints(dir / "variant", trainer::Variant::PpoLppoAdv, 10, 5);
    save_init_checkpoints(dir / "foreign", trainer::Variant::PpoPpo, 30, 5);
    save_init_checkpoints(dir / "four", trainer::Variant::PpoPpo, 50, 4);
    const auto before = slurp(dir / "variant" / "seed0.txt");

    const auto four = run({"crosseval", "--variant-dir", (dir / "variant").string(), "--foreign-dir",
                           (dir / "four").string(), "--out", (dir / "rep0").string()});
    CHECK(four.code == 2);
    CHECK(four.err.find((dir / "four").string()) != std::string::npos);

    const auto ok = run({"crosseval", "--variant-dir", (dir / "variant").string(), "--foreign-dir",
                         (dir / "foreign").string(), "--episodes", "3", "--out", (dir / "rep").string()});
    REQUIRE_MESSAGE(ok.code == 0, ok.err);
    CHECK(ok.out.find("aggregate") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir / "rep" / "report.json"));
    CHECK(j["test"].size() == 25);
    for (const auto& cell : j["test"]) CHECK(cell["returns"].size() == 3);
    CHECK(fs::exists(dir / "rep" / "report.txt"));
    CHECK(slurp(dir / "variant" / "seed0.txt") == before);

    const auto again = run({"crosseval", "--variant-dir", (dir / "variant").string(), "--foreign-dir",
                            (dir / "foreign").string(), "--episodes", "3", "--out", (dir / "rep2").string()});
    REQUIRE(again.code == 0);
    CHECK(slurp(dir / "rep" / "report.json") == slurp(dir / "rep2" / "report.json"));

    // Run-directory layout: <dir>/<run>/final.txt.
    for (int i = 0; i < 5; ++i) {
      fs::create_directories(dir / "runs" / ("run" + std::to_string(i)));
      fs::copy_file(dir / "foreign" / ("seed" + std::to_string(i) + ".txt"),
                    dir / "runs" / ("run" + std::to_string(i)) / "final.txt");
    }
    const auto runs = run({"crosseval", "--variant-dir", (dir / "variant").string(), "--foreign-dir",
                           (dir / "runs").string(), "--episodes", "3", "--out", (dir / "rep3").string()});
    REQUIRE(runs.code == 0);
    const auto j3 = nlohmann::json::parse(slurp(dir / "rep3" / "report.json"));
    CHECK(j3["aggregate"] == j["aggregate"]);
    CHECK(run({"crosseval", "--variant-dir", (dir / "nope").string(), "--foreign-dir", (dir / "runs").string(),
               "--out", (dir / "rep4").string()})
              .code == 2);
    write(dir / "blocker", "x");
    CHECK(run({"crosseval", "--variant-dir", (dir / "variant").string(), "--foreign-dir", (dir / "runs").string(),
               "--episodes", "1", "--out", (dir / "blocker" / "rep").string()})
              .code == 1);
    fs::remove_all(dir);
  }

  TEST_CASE("plot command") {
    const auto dir = fresh_dir("plot");
    const std::string header = trainer::metrics_header() + "\n";
    write(dir / "alpha.csv", header + "1,4000,-10,1,0,1,0,1,0,0,nan,0,nan\n2,8000,5,1,0,1,0,1,0,0,nan,0,nan\n");
    write(dir / "beta.csv", header + "1,4000,-3,1,0,1,0,1,0,0,-1.2,0.5,3\n");
    write(dir / "broken.csv", header + "1,4000,-3,1,0,1,0,1,0,0,nan,0,nan\n2,8000,oops,1,0,1,0,1,0,0,nan,0,nan\n");

    REQUIRE(run({"plot", (dir / "alpha.csv").string(), "--out", (dir / "one.svg").string()}).code == 0);
    const auto one = slurp(dir / "one.svg");
    CHECK(one.find("<svg") != std::string::npos);
    CHECK(one.find("</svg>") != std::string::npos);
    CHECK(count(one, "<polyline") == 1);
    CHECK(one.find("env_steps") != std::string::npos);
    CHECK(one.find("mean_return") != std::string::npos);

    REQUIRE(run({"plot", (dir / "alpha.csv").string(), (dir / "beta.csv").string(), "--out", (dir / "two.svg").string()})
                .code == 0);
    const auto two = slurp(dir / "two.svg");
    CHECK(count(two, "<polyline") == 2);
    CHECK(count(two, "class=\"legend-entry\"") == 2);
    CHECK(two.find(">alpha<") != std::string::npos);
    CHECK(two.find(">beta<") != std::string::npos);

    const auto broken = run({"plot", (dir / "broken.csv").string(), "--out", (dir / "x.svg").string()});
    CHECK(broken.code == 2);
    CHECK(broken.err.find("row 3") != std::string::npos);
    CHECK(run({"plot", (dir / "missing.csv").string(), "--out", (dir / "x.svg").string()}).code == 2);
    write(dir / "blocker", "x");
    CHECK(run({"plot", (dir / "alpha.csv").string(), "--out", (dir / "blocker" / "x.svg").string()}).code == 1);
    fs::remove_all(dir);
  }

  TEST_CASE("styles-probe command") {
    const auto dir = fresh_dir("probe");
    save_init_checkpoints(dir / "adv", trainer::Variant::PpoLppoAdv, 1, 1);
    save_init_checkpoints(dir / "plain", trainer::Variant::PpoPpo, 1, 1);
    const auto a = run({"styles-probe", (dir / "adv" / "seed0.txt").string(), "--grid", "2"});
    REQUIRE_MESSAGE(a.code == 0, a.err);
    CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 9);  // header + 8 rows
    CHECK(count(a.out, "corner,") == 4);
    const auto b = run({"styles-probe", (dir / "adv" / "seed0.txt").string(), "--grid", "2"});
    CHECK(a.out == b.out);
    CHECK(run({"styles-probe", (dir / "plain" / "seed0.txt").string()}).code == 2);
    write(dir / "blocker", "x");
    CHECK(run({"styles-probe", (dir / "adv" / "seed0.txt").string(), "--grid", "1", "--out",
               (dir / "blocker" / "p.csv").string()})
              .code == 1);
    const auto rows = cli::probe_styles(nn::load_checkpoint(dir / "adv" / "seed0.txt"), 3);
    CHECK(rows.size() == 13);
    CHECK(rows[9].z.z == std::array{0.9, 0.9});
    CHECK(rows[12].z.z == std::array{-0.9, -0.9});
    fs::remove_all(dir);
  }

  TEST_CASE("rollout trace") {
    const auto dir = fresh_dir("rollout");
    save_init_checkpoints(dir, trainer::Variant::PpoLppo, 1, 1);
    const auto r = run({"rollout", (dir / "seed0.txt").string(), "--seed", "3", "--render-trace",
                        (dir / "trace.csv").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto trace = slurp(dir / "trace.csv");
    CHECK(trace.rfind("step,q1,q2,spoon_x,spoon_y,mouth_x,mouth_y,reward\n", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 202);
    const auto s = run({"rollout", "--scripted", "--seed", "3"});
    CHECK(s.code == 0);
    CHECK(s.out.find("return") != std::string::npos);
    CHECK(run({"rollout"}).code == 2);
    CHECK(run({"baseline", "--episodes", "3"}).code == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("checkpoint discovery") {
    const auto dir = fresh_dir("discover");
    save_init_checkpoints(dir, trainer::Variant::PpoPpo, 1, 3);
    write(dir / "notes.txt", "not a checkpoint\n");
    const auto found = cli::discover_checkpoints(dir);
    REQUIRE(found.size() == 3);
    CHECK(found[0].label == "seed0");
    CHECK_THROWS_AS(cli::discover_checkpoints(dir / "missing"), InputError);
    fs::remove_all(dir);
  }
}
