#include "coopstyle/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "coopstyle/algo/policy.hpp"
#include "coopstyle/cli/config_file.hpp"
#include "coopstyle/cli/svg_plot.hpp"
#include "coopstyle/env/scripted.hpp"
#include "coopstyle/error.hpp"
#include "coopstyle/trainer/trainer.hpp"

namespace coopstyle::cli {
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

bool looks_like_checkpoint(const fs::path& p) {
  std::ifstream f(p);
  std::string first;
  return f && std::getline(f, first) && first.rfind("coopstyle_checkpoint", 0) == 0;
}

struct TrainArgs {
  std::string config;
  std::string variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> epsilon;
  std::string out;
  std::string resume;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  ParsedConfig parsed;
  if (!a.config.empty()) parsed = load_config(a.config);
  trainer::RunConfig cfg = parsed.cfg;
  if (!a.variant.empty()) cfg.variant = trainer::parse_variant(a.variant);
  if (a.epsilon) {
    cfg.styles.epsilon = *a.epsilon;
  } else if (!parsed.is_explicit("styles.epsilon")) {
    cfg.styles.epsilon = trainer::variant_default_epsilon(cfg.variant);
  }
  if (a.seed) cfg.seed = *a.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  cfg.out_dir = a.out;
  cfg.validate();

  fs::create_directories(cfg.out_dir);
  write_file(cfg.out_dir / "config.echo", emit_config(cfg));
  std::optional<fs::path> resume;
  if (!a.resume.empty()) resume = fs::path(a.resume);
  const auto result = trainer::train(cfg, resume);
  if (!result.metrics.empty()) {
    const auto& m = result.metrics.back();
    out << "epoch " << m.epoch << " env_steps " << m.env_steps << " mean_return " << m.mean_return << "\n";
  }
  out << "final checkpoint: " << result.final_checkpoint.string() << "\n";
  return kExitOk;
}

struct CrossEvalArgs {
  std::string variant_dir;
  std::string foreign_dir;
  int episodes = 10;
  std::string out;
  std::string z_policy = "prior";
  std::uint64_t seed = 0;
};

int cmd_crosseval(const CrossEvalArgs& a, std::ostream& out) {
  evalx::EvalOptions opts;
  opts.episodes = a.episodes;
  opts.z_policy = evalx::ZPolicy::parse(a.z_policy);
  opts.seed = a.seed;
  if (opts.episodes < 1) throw ConfigError("--episodes must be at least 1");
  const auto variants = discover_checkpoints(a.variant_dir);
  const auto foreign = discover_checkpoints(a.foreign_dir);
  for (const auto& [dir, set] : {std::pair{&a.variant_dir, &variants}, std::pair{&a.foreign_dir, &foreign}}) {
    if (set->size() != evalx::kCrossEvalSeeds) {
      throw InputError("directory '" + *dir + "' holds " + std::to_string(set->size()) + " checkpoints, expected " +
                       std::to_string(evalx::kCrossEvalSeeds));
    }
  }
  const auto report = evalx::cross_eval(variants, foreign, opts);
  const fs::path dir(a.out);
  write_file(dir / "report.txt", evalx::report_text(report));
  write_file(dir / "report.json", evalx::report_json(report));
  out << evalx::report_text(report);
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& files, const std::string& out_path, std::ostream& out) {
  std::vector<Series> series;
  for (const auto& f : files) series.push_back(read_metrics_series(f));
  write_file(out_path, render_svg(series));
  out << "wrote " << out_path << " (" << series.size() << " series)\n";
  return kExitOk;
}

int cmd_styles_probe(const std::string& ckpt_path, int grid, const std::string& out_path, std::ostream& out) {
  if (grid < 1) throw ConfigError("--grid must be at least 1");
  const auto rows = probe_styles(nn::load_checkpoint(ckpt_path), grid);
  const std::string csv = probe_csv(rows);
  if (out_path.empty()) {
    out << csv;
  } else {
    write_file(out_path, csv);
  }
  return kExitOk;
}

struct RolloutArgs {
  std::string checkpoint;
  bool scripted = false;
  std::uint64_t seed = 0;
  std::string z_policy = "prior";
  std::string trace;
};

int cmd_rollout(const RolloutArgs& a, std::ostream& out) {
  if (a.checkpoint.empty() == !a.scripted) throw ConfigError("give either a checkpoint or --scripted");
  const env::EnvConfig cfg;
  env::FeedingEnv env(cfg);
  std::mt19937_64 rng(trainer::derive_seed(a.seed, 0x524F4C4C));
  std::optional<algo::AgentPolicy> caregiver;
  std::optional<algo::AgentPolicy> receiver;
  styles::LatentStyle z;
  if (!a.scripted) {
    const auto ckpt = nn::load_checkpoint(a.checkpoint);
    caregiver = trainer::policy_from_checkpoint(ckpt, "caregiver");
    receiver = trainer::policy_from_checkpoint(ckpt, "receiver");
    const auto zp = evalx::ZPolicy::parse(a.z_policy);
    if (receiver->latent_dim > 0) z = zp.fixed ? *zp.fixed : styles::sample_uniform(rng);
  }
  auto obs = env.reset(rng());
  const env::Vec2 nominal_mouth = env::mouth_position(cfg, 0.0, 0.0);
  std::ostringstream trace;
  trace.precision(17);
  const auto trace_row = [&](int step, double reward) {
    const auto& s = env.state();
    const auto sp = env.spoon();
    const auto m = env.mouth();
    trace << step << ',' << s.q1 << ',' << s.q2 << ',' << sp.x << ',' << sp.y << ',' << m.x << ',' << m.y << ','
          << reward << '\n';
  };
  trace << "step,q1,q2,spoon_x,spoon_y,mouth_x,mouth_y,reward\n";
  trace_row(0, 0.0);
  double total = 0.0;
  bool done = false;
  while (!done) {
    env::Action ag{};
    env::Action ar{};
    if (a.scripted) {
      ag = env::ScriptedController{}.act(cfg, env.state(), nominal_mouth);
    } else {
      const std::span<const double> zs =
          receiver->latent_dim > 0 ? std::span<const double>(z.z) : std::span<const double>();
      const auto mg = algo::policy_mean(*caregiver, caregiver->make_input(obs.caregiver, {}));
      const auto mr = algo::policy_mean(*receiver, receiver->make_input(obs.receiver, zs));
      ag = {mg[0], mg[1]};
      ar = {mr[0], mr[1]};
    }
    const auto r = env.step(ag, ar);
    total += r.reward;
    obs = r.obs;
    done = r.done;
    trace_row(env.state().step, r.reward);
  }
  if (!a.trace.empty()) write_file(a.trace, trace.str());
  out << "return " << nn::format_real(total) << "\n";
  return kExitOk;
}

template <typename Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

std::vector<ProbeRow> probe_styles(const nn::Checkpoint& ckpt, int grid, const env::EnvConfig& env_cfg) {
  if (grid < 1) throw InputError("probe grid must be at least 1");
  const algo::AgentPolicy caregiver = trainer::policy_from_checkpoint(ckpt, "caregiver");
  const algo::AgentPolicy receiver = trainer::policy_from_checkpoint(ckpt, "receiver");
  if (receiver.latent_dim != styles::kLatentDim) {
    throw InputError("styles probe needs a latent-conditioned care-receiver; this checkpoint's has latent_dim " +
                     std::to_string(receiver.latent_dim));
  }
  std::vector<std::pair<styles::LatentStyle, bool>> zs;
  const auto coord = [grid](int i) { return grid == 1 ? 0.0 : -0.9 + 1.8 * i / (grid - 1); };
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) zs.push_back({styles::LatentStyle{{coord(i), coord(j)}}, false});
  }
  for (auto c : {std::array{0.9, 0.9}, std::array{-0.9, 0.9}, std::array{0.9, -0.9}, std::array{-0.9, -0.9}}) {
    zs.push_back({styles::LatentStyle{c}, true});
  }
  std::vector<ProbeRow> rows;
  for (const auto& [z, corner] : zs) {
    env::FeedingEnv env(env_cfg);
    auto obs = env.reset_deterministic();
    ProbeRow row{z, corner, 0.0, 0.0, 0.0};
    bool done = false;
    while (!done) {
      const auto ag = algo::policy_mean(caregiver, caregiver.make_input(obs.caregiver, {}));
      const auto ar = algo::policy_mean(receiver, receiver.make_input(obs.receiver, z.z));
      const auto r = env.step({ag[0], ag[1]}, {ar[0], ar[1]});
      row.ret += r.reward;
      obs = r.obs;
      done = r.done;
    }
    row.final_head_offset = env.state().head_offset;
    row.final_pitch = env.state().pitch;
    rows.push_back(row);
  }
  return rows;
}

std::string probe_csv(const std::vector<ProbeRow>& rows) {
  std::string s = "kind,z1,z2,final_head_offset,final_pitch,return\n";
  for (const auto& r : rows) {
    s += std::string(r.corner ? "corner" : "grid") + "," + nn::format_real(r.z.z[0]) + "," + nn::format_real(r.z.z[1]) +
         "," + nn::format_real(r.final_head_offset) + "," + nn::format_real(r.final_pitch) + "," +
         nn::format_real(r.ret) + "\n";
  }
  return s;
}

std::vector<evalx::LabeledCheckpoint> discover_checkpoints(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("'" + dir.string() + "' is not a directory");
  std::vector<std::pair<std::string, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt" && looks_like_checkpoint(entry.path())) {
      found.emplace_back(entry.path().stem().string(), entry.path());
    }
  }
  if (found.empty()) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const fs::path final_ckpt = entry.path() / "final.txt";
      if (entry.is_directory() && fs::is_regular_file(final_ckpt)) {
        found.emplace_back(entry.path().filename().string(), final_ckpt);
      }
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<evalx::LabeledCheckpoint> out;
  for (const auto& [label, path] : found) out.push_back({label, nn::load_checkpoint(path)});
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cooperative caregiver / care-receiver training and cross-play evaluation"};
  app.name(args.empty() ? "coopstyle" : args.front());
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Co-optimize caregiver and care-receiver policies");
  train_cmd->add_option("config", train.config, "Config file (defaults are used when omitted)");
  train_cmd->add_option("--variant", train.variant, "PPO-PPO, PPO-LPPO or PPO-LPPO-adv");
  train_cmd->add_option("--seed", train.seed, "Run seed");
  train_cmd->add_option("--epochs", train.epochs, "Number of epochs");
  train_cmd->add_option("--epsilon", train.epsilon, "Adversarial style sampling probability");
  train_cmd->add_option("--out", train.out, "Run directory")->required();
  train_cmd->add_option("--resume", train.resume, "Checkpoint to resume from");

  CrossEvalArgs ce;
  auto* ce_cmd = app.add_subcommand("crosseval", "Cross-play evaluation against foreign care-receivers");
  ce_cmd->add_option("--variant-dir", ce.variant_dir, "Five checkpoints of the evaluated variant")->required();
  ce_cmd->add_option("--foreign-dir", ce.foreign_dir, "Five checkpoints of independent runs")->required();
  ce_cmd->add_option("--episodes", ce.episodes, "Episodes per caregiver/care-receiver pair");
  ce_cmd->add_option("--out", ce.out, "Directory for report.txt and report.json")->required();
  ce_cmd->add_option("--z-policy", ce.z_policy, "prior or fixed:[a,b]");
  ce_cmd->add_option("--seed", ce.seed, "Evaluation seed");

  std::vector<std::string> plot_files;
  std::string plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "Learning curves as SVG");
  plot_cmd->add_option("metrics", plot_files, "metrics.csv files")->required();
  plot_cmd->add_option("--out", plot_out, "Output SVG path")->required();

  std::string probe_ckpt;
  std::string probe_out;
  int probe_grid = 3;
  auto* probe_cmd = app.add_subcommand("styles-probe", "Final head state per latent style");
  probe_cmd->add_option("checkpoint", probe_ckpt, "Checkpoint with a latent-conditioned care-receiver")->required();
  probe_cmd->add_option("--grid", probe_grid, "Grid size k (k x k points plus four corners)");
  probe_cmd->add_option("--out", probe_out, "CSV output path (stdout when omitted)");

  RolloutArgs ro;
  auto* ro_cmd = app.add_subcommand("rollout", "Run one episode and optionally write a per-step trace");
  ro_cmd->add_option("checkpoint", ro.checkpoint, "Checkpoint to roll out");
  ro_cmd->add_flag("--scripted", ro.scripted, "Use the scripted baseline controller");
  ro_cmd->add_option("--seed", ro.seed, "Episode seed");
  ro_cmd->add_option("--z", ro.z_policy, "prior or fixed:[a,b]");
  ro_cmd->add_option("--render-trace", ro.trace, "CSV trace output path");

  int baseline_episodes = 100;
  std::uint64_t baseline_seed = 0;
  auto* base_cmd = app.add_subcommand("baseline", "Mean return of the scripted controller");
  base_cmd->add_option("--episodes", baseline_episodes, "Episodes");
  base_cmd->add_option("--seed", baseline_seed, "First reset seed");

  auto* defaults_cmd = app.add_subcommand("defaults", "Print the default configuration");

  std::vector<std::string> argv_store(args.begin(), args.end());
  if (argv_store.empty()) argv_store.push_back("coopstyle");
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (train_cmd->parsed()) return guarded([&] { return cmd_train(train, out); }, err);
  if (ce_cmd->parsed()) return guarded([&] { return cmd_crosseval(ce, out); }, err);
  if (plot_cmd->parsed()) return guarded([&] { return cmd_plot(plot_files, plot_out, out); }, err);
  if (probe_cmd->parsed()) return guarded([&] { return cmd_styles_probe(probe_ckpt, probe_grid, probe_out, out); }, err);
  if (ro_cmd->parsed()) return guarded([&] { return cmd_rollout(ro, out); }, err);
  if (base_cmd->parsed()) {
    return guarded(
        [&] {
          if (baseline_episodes < 1) throw ConfigError("--episodes must be at least 1");
          out << "scripted baseline mean return over " << baseline_episodes << " episodes: "
              << nn::format_real(env::scripted_baseline_return({}, baseline_episodes, baseline_seed)) << "\n";
          return kExitOk;
        },
        err);
  }
  if (defaults_cmd->parsed()) {
    out << emit_config(trainer::RunConfig{});
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace coopstyle::cli
