#include <filesystem>
#include <random>
#include <string>

#include "coopstyle/error.hpp"
#include "coopstyle/nn/checkpoint.hpp"
#include "doctest.h"

using namespace coopstyle;

namespace {

nn::Checkpoint sample_checkpoint(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t sizes[] = {5, 8, 3};
  nn::ParamSet actor = nn::make_mlp(sizes, rng);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& b : actor.layers[0].bias) b = u(rng) * 1e-7;
  actor.log_std = {-0.5, 0.1, 1.0 / 3.0};
  nn::Checkpoint c;
  c.set_meta("variant", "PPO-LPPO");
  c.set_meta("seed", "42");
  c.networks.push_back({"caregiver_actor", actor});
  nn::AdamState opt(actor, 3e-4);
  opt.step = 17;
  opt.first_moment.layers[0].weight[3] = 1e-300;
  opt.second_moment.layers[1].bias[2] = 5e-324;
  c.optimizers.push_back({"caregiver_actor", opt});
  nn::Matrix pool(3, 2);
  pool.data = {0.1, -0.2, 1e10, -7.25, 0.0, 3.141592653589793};
  c.arrays.push_back({"style_pool", pool});
  return c;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("text round trip is bit exact") {
    const auto c = sample_checkpoint(1);
    const auto text = nn::to_text(c);
    const auto back = nn::from_text(text);
    CHECK(back == c);
    CHECK(nn::to_text(back) == text);
  }

  TEST_CASE("file round trip preserves forward outputs bit for bit") {
    const auto c = sample_checkpoint(2);
    const auto path = std::filesystem::temp_directory_path() / "coopstyle_ckpt_roundtrip.txt";
    nn::save_checkpoint(path, c);
    const auto back = nn::load_checkpoint(path);
    std::filesystem::remove(path);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x(5);
      for (auto& v : x) v = u(rng);
      CHECK(nn::mlp_forward(back.network("caregiver_actor"), x) == nn::mlp_forward(c.network("caregiver_actor"), x));
    }
    CHECK(back.optimizer("caregiver_actor") == c.optimizer("caregiver_actor"));
  }

  TEST_CASE("accessors report missing entries") {
    const auto c = sample_checkpoint(4);
    CHECK(c.has_network("caregiver_actor"));
    CHECK_FALSE(c.has_network("discriminator"));
    CHECK_THROWS_AS(c.network("discriminator"), InputError);
    CHECK_THROWS_AS(c.meta_value("epoch"), InputError);
    CHECK(c.meta_value("variant") == "PPO-LPPO");
  }

  TEST_CASE("malformed text names the line") {
    auto text = nn::to_text(sample_checkpoint(5));
    const auto pos = text.find("\nb ");
    REQUIRE(pos != std::string::npos);
    text.replace(pos + 1, 1, "q");
    std::size_t line = 1;
    for (std::size_t i = 0; i <= pos; ++i) line += text[i] == '\n';
    try {
      (void)nn::from_text(text);
      FAIL("expected an InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("line " + std::to_string(line)) != std::string::npos);
    }
    CHECK_THROWS_AS(nn::from_text("not a checkpoint\n"), InputError);
    CHECK_THROWS_AS(nn::load_checkpoint("/nonexistent/ckpt.txt"), InputError);
  }

  TEST_CASE("content id tracks network contents only") {
    auto a = sample_checkpoint(6);
    auto b = a;
    b.set_meta("seed", "43");
    CHECK(nn::content_id(a) == nn::content_id(b));
    b.networks[0].second.layers[0].weight[0] += 1e-12;
    CHECK(nn::content_id(a) != nn::content_id(b));
  }

  TEST_CASE("reals use 17 significant digits") {
    CHECK(nn::format_real(0.1) == "0.10000000000000001");
    CHECK(nn::format_real(-2.5) == "-2.5");
  }
}
