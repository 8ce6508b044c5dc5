#include "coopstyle/evalx/cross_eval.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "coopstyle/algo/policy.hpp"
#include "coopstyle/error.hpp"
#include "coopstyle/parallel.hpp"
#include "coopstyle/trainer/trainer.hpp"
#include "json.hpp"

namespace coopstyle::evalx {

ZPolicy ZPolicy::parse(std::string_view text) {
  if (text == "prior") return {};
  constexpr std::string_view prefix = "fixed:[";
  if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size() && text.back() == ']') {
    const std::string_view body = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    const std::size_t comma = body.find(',');
    if (comma != std::string_view::npos) {
      styles::LatentStyle s;
      const std::string_view parts[2] = {body.substr(0, comma), body.substr(comma + 1)};
      bool ok = true;
      for (int i = 0; i < 2; ++i) {
        auto p = parts[i];
        while (!p.empty() && p.front() == ' ') p.remove_prefix(1);
        while (!p.empty() && p.back() == ' ') p.remove_suffix(1);
        auto res = std::from_chars(p.data(), p.data() + p.size(), s.z[static_cast<std::size_t>(i)]);
        ok = ok && res.ec == std::errc() && res.ptr == p.data() + p.size();
      }
      if (ok && s.in_box()) return ZPolicy{s};
    }
  }
  throw ConfigError("z policy must be 'prior' or 'fixed:[a,b]' with a, b in [-1, 1], got '" + std::string(text) + "'");
}

std::string ZPolicy::to_string() const {
  if (!fixed) return "prior";
  return "fixed:[" + nn::format_real(fixed->z[0]) + "," + nn::format_real(fixed->z[1]) + "]";
}

std::vector<double> eval_pair(const nn::Checkpoint& caregiver_ckpt, const nn::Checkpoint& receiver_ckpt,
                              const EvalOptions& opts) {
  if (opts.episodes < 1) throw InputError("episodes must be at least 1");
  const algo::AgentPolicy caregiver = trainer::policy_from_checkpoint(caregiver_ckpt, "caregiver");
  const algo::AgentPolicy receiver = trainer::policy_from_checkpoint(receiver_ckpt, "receiver");
  if (caregiver.obs_dim != env::kCaregiverObsDim || caregiver.action_dim != env::kActionDim) {
    throw InputError("caregiver policy dimensions do not match the environment");
  }
  if (receiver.obs_dim != env::kReceiverObsDim || receiver.action_dim != env::kActionDim ||
      (receiver.latent_dim != 0 && receiver.latent_dim != styles::kLatentDim)) {
    throw InputError("care-receiver policy dimensions do not match the environment");
  }
  const std::uint64_t id_g = nn::content_id(caregiver_ckpt);
  const std::uint64_t id_r = nn::content_id(receiver_ckpt);

  std::vector<double> returns(static_cast<std::size_t>(opts.episodes));
  for (int e = 0; e < opts.episodes; ++e) {
    std::mt19937_64 rng(trainer::derive_seed(opts.seed, id_g, id_r, static_cast<std::uint64_t>(e)));
    styles::LatentStyle z;
    if (receiver.latent_dim > 0) z = opts.z_policy.fixed ? *opts.z_policy.fixed : styles::sample_uniform(rng);
    const std::span<const double> zs =
        receiver.latent_dim > 0 ? std::span<const double>(z.z) : std::span<const double>();
    env::FeedingEnv env(opts.env);
    auto obs = env.reset(rng());
    double total = 0.0;
    bool done = false;
    while (!done) {
      const auto ag = algo::policy_mean(caregiver, caregiver.make_input(obs.caregiver, {}));
      const auto ar = algo::policy_mean(receiver, receiver.make_input(obs.receiver, zs));
      const auto r = env.step({ag[0], ag[1]}, {ar[0], ar[1]});
      total += r.reward;
      obs = r.obs;
      done = r.done;
    }
    returns[static_cast<std::size_t>(e)] = total;
  }
  return returns;
}

CellStats summarize(std::vector<double> returns) {
  CellStats c;
  c.returns = std::move(returns);
  if (c.returns.empty()) return c;
  // Exact rational sum, rounded once: the mean depends only on the multiset
  // of returns, so a sample repeated k times has the same mean.
  boost::multiprecision::cpp_rational s = 0;
  for (double r : c.returns) {
    if (!std::isfinite(r)) throw NumericError("non-finite episode return");
    s += boost::multiprecision::cpp_rational(r);
  }
  s /= c.returns.size();
  c.mean = s.convert_to<double>();
  if (c.returns.size() > 1) {
    double v = 0.0;
    for (double r : c.returns) v += (r - c.mean) * (r - c.mean);
    c.std = std::sqrt(v / static_cast<double>(c.returns.size() - 1));
  }
  return c;
}

std::size_t EvalReport::test_episode_count() const {
  std::size_t n = 0;
  for (const auto& row : test) {
    for (const auto& cell : row) n += cell.returns.size();
  }
  return n;
}

EvalReport assemble_report(std::string variant, std::vector<std::string> caregiver_labels,
                           std::vector<std::string> foreign_labels, std::vector<std::vector<double>> train_returns,
                           std::vector<std::vector<std::vector<double>>> test_returns) {
  if (train_returns.size() != caregiver_labels.size() || test_returns.size() != caregiver_labels.size()) {
    throw InputError("report: one train row and one test row per caregiver are required");
  }
  EvalReport r;
  r.variant = std::move(variant);
  r.caregiver_labels = std::move(caregiver_labels);
  r.foreign_labels = std::move(foreign_labels);
  std::vector<double> train_pool;
  std::vector<double> test_pool;
  for (std::size_t i = 0; i < train_returns.size(); ++i) {
    train_pool.insert(train_pool.end(), train_returns[i].begin(), train_returns[i].end());
    r.train.push_back(summarize(std::move(train_returns[i])));
    if (test_returns[i].size() != r.foreign_labels.size()) throw InputError("report: test matrix is incomplete");
    std::vector<CellStats> row;
    for (auto& cell : test_returns[i]) {
      if (cell.empty()) throw InputError("report: test matrix has an empty cell");
      test_pool.insert(test_pool.end(), cell.begin(), cell.end());
      row.push_back(summarize(std::move(cell)));
    }
    r.test.push_back(std::move(row));
  }
  r.episodes_per_cell = r.train.empty() ? 0 : static_cast<int>(r.train.front().returns.size());
  r.train_all = summarize(train_pool);
  r.test_all = summarize(test_pool);
  r.gap = r.train_all.mean - r.test_all.mean;
  r.ttest = welch_ttest(r.train_all.returns, r.test_all.returns);
  return r;
}

EvalReport cross_eval(const std::vector<LabeledCheckpoint>& variant_ckpts,
                      const std::vector<LabeledCheckpoint>& foreign_receivers, const EvalOptions& opts) {
  if (variant_ckpts.size() != kCrossEvalSeeds) {
    throw InputError("cross_eval needs " + std::to_string(kCrossEvalSeeds) + " variant checkpoints, got " +
                     std::to_string(variant_ckpts.size()));
  }
  if (foreign_receivers.size() != kCrossEvalSeeds) {
    throw InputError("cross_eval needs " + std::to_string(kCrossEvalSeeds) + " foreign checkpoints, got " +
                     std::to_string(foreign_receivers.size()));
  }
  const std::size_t n = kCrossEvalSeeds;
  std::vector<std::vector<double>> train(n);
  std::vector<std::vector<std::vector<double>>> test(n, std::vector<std::vector<double>>(n));
  // n train cells followed by n*n test cells, each written to its own slot.
  parallel_for(n + n * n, [&](std::size_t job) {
    if (job < n) {
      train[job] = eval_pair(variant_ckpts[job].ckpt, variant_ckpts[job].ckpt, opts);
    } else {
      const std::size_t i = (job - n) / n;
      const std::size_t j = (job - n) % n;
      test[i][j] = eval_pair(variant_ckpts[i].ckpt, foreign_receivers[j].ckpt, opts);
    }
  });
  std::string variant = variant_ckpts.front().ckpt.has_meta("variant") ? variant_ckpts.front().ckpt.meta_value("variant")
                                                                         : std::string("unknown");
  std::vector<std::string> cg_labels;
  std::vector<std::string> fr_labels;
  for (const auto& c : variant_ckpts) cg_labels.push_back(c.label);
  for (const auto& c : foreign_receivers) fr_labels.push_back(c.label);
  return assemble_report(std::move(variant), std::move(cg_labels), std::move(fr_labels), std::move(train),
                         std::move(test));
}

std::string report_text(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "variant: " << r.variant << "\n";
  os << "episodes per cell: " << r.episodes_per_cell << "\n\n";
  os << "train (co-trained care-receiver)\n";
  for (std::size_t i = 0; i < r.train.size(); ++i) {
    os << "  " << std::setw(20) << std::left << r.caregiver_labels[i] << std::right << std::setw(12) << r.train[i].mean
       << " +- " << r.train[i].std << "\n";
  }
  os << "\ntest (caregiver x foreign care-receiver, mean return)\n";
  os << "  " << std::setw(20) << "";
  for (const auto& l : r.foreign_labels) os << std::setw(14) << l;
  os << "\n";
  for (std::size_t i = 0; i < r.test.size(); ++i) {
    os << "  " << std::setw(20) << std::left << r.caregiver_labels[i] << std::right;
    for (const auto& c : r.test[i]) os << std::setw(14) << c.mean;
    os << "\n";
  }
  os << "\naggregate train: " << r.train_all.mean << " +- " << r.train_all.std << " (n=" << r.train_all.returns.size()
     << ")\n";
  os << "aggregate test:  " << r.test_all.mean << " +- " << r.test_all.std << " (n=" << r.test_all.returns.size()
     << ")\n";
  os << "gap (train - test): " << r.gap << "\n";
  os << std::setprecision(4) << "welch t = " << r.ttest.t << ", df = " << r.ttest.df << ", p = " << r.ttest.p
     << (r.ttest.degenerate ? " (zero variance)" : "") << "\n";
  return os.str();
}

std::string report_json(const EvalReport& r) {
  using nlohmann::json;
  auto cell = [](const CellStats& c) { return json{{"mean", c.mean}, {"std", c.std}, {"returns", c.returns}}; };
  json j;
  j["variant"] = r.variant;
  j["episodes_per_cell"] = r.episodes_per_cell;
  j["caregivers"] = r.caregiver_labels;
  j["foreign_receivers"] = r.foreign_labels;
  json train = json::array();
  for (std::size_t i = 0; i < r.train.size(); ++i) {
    json c = cell(r.train[i]);
    c["caregiver"] = r.caregiver_labels[i];
    train.push_back(std::move(c));
  }
  j["train"] = std::move(train);
  json test = json::array();
  for (std::size_t i = 0; i < r.test.size(); ++i) {
    for (std::size_t k = 0; k < r.test[i].size(); ++k) {
      json c = cell(r.test[i][k]);
      c["caregiver"] = r.caregiver_labels[i];
      c["foreign_receiver"] = r.foreign_labels[k];
      test.push_back(std::move(c));
    }
  }
  j["test"] = std::move(test);
  j["aggregate"] = {{"train_mean", r.train_all.mean}, {"train_std", r.train_all.std},
                    {"test_mean", r.test_all.mean},   {"test_std", r.test_all.std},
                    {"gap", r.gap},                   {"t", std::isfinite(r.ttest.t) ? json(r.ttest.t) : json(nullptr)},
                    {"df", r.ttest.df},               {"p", r.ttest.p},
                    {"degenerate_variance", r.ttest.degenerate}};
  return j.dump(2) + "\n";
}

}  // namespace coopstyle::evalx
