#include "coopstyle/cli/config_file.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "coopstyle/error.hpp"
#include "coopstyle/nn/checkpoint.hpp"

namespace coopstyle::cli {
namespace {

using trainer::RunConfig;

struct KeySpec {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  // Returns an error message, empty on success.
  std::function<std::string(RunConfig&, std::string_view)> set;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

template <typename T>
KeySpec real_key(std::string section, std::string key, T RunConfig::*group, double T::*field) {
  return {std::move(section), std::move(key),
          [group, field](const RunConfig& c) { return nn::format_real(c.*group.*field); },
          [group, field](RunConfig& c, std::string_view v) -> std::string {
            double x = 0.0;
            if (!parse_number(v, x)) return "expected a real number, got '" + std::string(v) + "'";
            c.*group.*field = x;
            return {};
          }};
}

template <typename T>
KeySpec int_key(std::string section, std::string key, T RunConfig::*group, int T::*field) {
  return {std::move(section), std::move(key),
          [group, field](const RunConfig& c) { return std::to_string(c.*group.*field); },
          [group, field](RunConfig& c, std::string_view v) -> std::string {
            int x = 0;
            if (!parse_number(v, x)) return "expected an integer, got '" + std::string(v) + "'";
            c.*group.*field = x;
            return {};
          }};
}

KeySpec vec_key(std::string key, env::Vec2 env::EnvConfig::*field, double env::Vec2::*part) {
  return {"env", std::move(key), [field, part](const RunConfig& c) { return nn::format_real(c.env.*field.*part); },
          [field, part](RunConfig& c, std::string_view v) -> std::string {
            double x = 0.0;
            if (!parse_number(v, x)) return "expected a real number, got '" + std::string(v) + "'";
            c.env.*field.*part = x;
            return {};
          }};
}

const std::vector<KeySpec>& key_table() {
  using env::EnvConfig;
  using env::Vec2;
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t;
    t.push_back({"run", "variant", [](const RunConfig& c) { return std::string(trainer::variant_name(c.variant)); },
                 [](RunConfig& c, std::string_view v) -> std::string {
                   try {
                     c.variant = trainer::parse_variant(v);
                   } catch (const ConfigError& e) {
                     return e.what();
                   }
                   return {};
                 }});
    t.push_back({"run", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, std::string_view v) -> std::string {
                   std::uint64_t x = 0;
                   if (!parse_number(v, x)) return "expected a non-negative integer, got '" + std::string(v) + "'";
                   c.seed = x;
                   return {};
                 }});
    t.push_back({"run", "epochs", [](const RunConfig& c) { return std::to_string(c.epochs); },
                 [](RunConfig& c, std::string_view v) -> std::string {
                   if (!parse_number(v, c.epochs)) return "expected an integer, got '" + std::string(v) + "'";
                   return {};
                 }});
    t.push_back({"run", "checkpoint_every", [](const RunConfig& c) { return std::to_string(c.checkpoint_every); },
                 [](RunConfig& c, std::string_view v) -> std::string {
                   if (!parse_number(v, c.checkpoint_every)) return "expected an integer, got '" + std::string(v) + "'";
                   return {};
                 }});

    using algo::AlgoConfig;
    t.push_back(real_key("algo", "gamma", &RunConfig::algo, &AlgoConfig::gamma));
    t.push_back(real_key("algo", "lambda", &RunConfig::algo, &AlgoConfig::lambda));
    t.push_back(real_key("algo", "clip_ratio", &RunConfig::algo, &AlgoConfig::clip_ratio));
    t.push_back(real_key("algo", "target_kl", &RunConfig::algo, &AlgoConfig::target_kl));
    t.push_back(real_key("algo", "actor_lr", &RunConfig::algo, &AlgoConfig::actor_lr));
    t.push_back(real_key("algo", "critic_lr", &RunConfig::algo, &AlgoConfig::critic_lr));
    t.push_back(int_key("algo", "steps_per_epoch", &RunConfig::algo, &AlgoConfig::steps_per_epoch));
    t.push_back(real_key("algo", "alpha", &RunConfig::algo, &AlgoConfig::alpha));
    t.push_back(int_key("algo", "actor_iters", &RunConfig::algo, &AlgoConfig::actor_iters));
    t.push_back(int_key("algo", "critic_iters", &RunConfig::algo, &AlgoConfig::critic_iters));
    t.push_back(real_key("algo", "disc_lr", &RunConfig::algo, &AlgoConfig::disc_lr));
    t.push_back(int_key("algo", "disc_iters", &RunConfig::algo, &AlgoConfig::disc_iters));

    using styles::StyleSamplerConfig;
    t.push_back(real_key("styles", "epsilon", &RunConfig::styles, &StyleSamplerConfig::epsilon));
    t.push_back(int_key("styles", "candidates", &RunConfig::styles, &StyleSamplerConfig::candidates));
    t.push_back(int_key("styles", "state_batch", &RunConfig::styles, &StyleSamplerConfig::state_batch));

    t.push_back(real_key("env", "dt", &RunConfig::env, &EnvConfig::dt));
    t.push_back(int_key("env", "episode_len", &RunConfig::env, &EnvConfig::episode_len));
    t.push_back(real_key("env", "link1", &RunConfig::env, &EnvConfig::link1));
    t.push_back(real_key("env", "link2", &RunConfig::env, &EnvConfig::link2));
    t.push_back(real_key("env", "joint_speed", &RunConfig::env, &EnvConfig::joint_speed));
    t.push_back(vec_key("head_center_x", &EnvConfig::head_center, &Vec2::x));
    t.push_back(vec_key("head_center_y", &EnvConfig::head_center, &Vec2::y));
    t.push_back(vec_key("mouth_offset_x", &EnvConfig::mouth_offset, &Vec2::x));
    t.push_back(vec_key("mouth_offset_y", &EnvConfig::mouth_offset, &Vec2::y));
    t.push_back(real_key("env", "head_offset_min", &RunConfig::env, &EnvConfig::head_offset_min));
    t.push_back(real_key("env", "head_offset_max", &RunConfig::env, &EnvConfig::head_offset_max));
    t.push_back(real_key("env", "pitch_min", &RunConfig::env, &EnvConfig::pitch_min));
    t.push_back(real_key("env", "pitch_max", &RunConfig::env, &EnvConfig::pitch_max));
    t.push_back(real_key("env", "head_speed", &RunConfig::env, &EnvConfig::head_speed));
    t.push_back(real_key("env", "pitch_speed", &RunConfig::env, &EnvConfig::pitch_speed));
    t.push_back(real_key("env", "success_radius", &RunConfig::env, &EnvConfig::success_radius));
    t.push_back(real_key("env", "success_bonus", &RunConfig::env, &EnvConfig::success_bonus));
    t.push_back(real_key("env", "action_cost", &RunConfig::env, &EnvConfig::action_cost));
    return t;
  }();
  return table;
}

[[noreturn]] void fail(std::size_t line, std::string_view key, const std::string& msg) {
  std::string text = "line " + std::to_string(line) + ": ";
  if (!key.empty()) text += "key '" + std::string(key) + "': ";
  throw ConfigError(text + msg);
}

}  // namespace

ParsedConfig parse_config(std::string_view text) {
  ParsedConfig out;
  const auto& table = key_table();
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, {}, "malformed section header '" + std::string(line) + "'");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "env" && section != "algo" && section != "styles" && section != "run") {
        fail(line_no, {}, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, {}, "expected 'key = value', got '" + std::string(line) + "'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, {}, "missing key before '='");
    if (section.empty()) fail(line_no, key, "key outside of any section");
    const KeySpec* spec = nullptr;
    for (const auto& k : table) {
      if (k.section == section && k.key == key) spec = &k;
    }
    if (spec == nullptr) fail(line_no, key, "unknown key in section [" + section + "]");
    const std::string qualified = section + "." + std::string(key);
    if (out.explicit_keys.count(qualified)) fail(line_no, key, "duplicate key");
    if (value.empty()) fail(line_no, key, "missing value");
    if (std::string err = spec->set(out.cfg, value); !err.empty()) fail(line_no, key, err);
    out.explicit_keys.insert(qualified);
    if (end == text.size()) break;
  }
  return out;
}

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const trainer::RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const char* s : {"run", "algo", "styles", "env"}) {
    for (const auto& k : key_table()) {
      if (k.section != s) continue;
      if (section != s) {
        if (!section.empty()) out += "\n";
        section = s;
        out += "[" + section + "]\n";
      }
      out += k.key + " = " + k.get(cfg) + "\n";
    }
  }
  return out;
}

}  // namespace coopstyle::cli
