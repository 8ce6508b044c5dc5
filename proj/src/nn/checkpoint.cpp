#include "coopstyle/nn/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "coopstyle/error.hpp"

namespace coopstyle::nn {

void Checkpoint::set_meta(std::string key, std::string value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  meta.emplace_back(std::move(key), std::move(value));
}

namespace {

template <typename Seq>
auto find_named(Seq& seq, std::string_view name) -> decltype(&seq.front().second) {
  for (auto& entry : seq) {
    if (entry.first == name) return &entry.second;
  }
  return nullptr;
}

template <typename T>
const T& require(const T* p, std::string_view what, std::string_view name) {
  if (p == nullptr) throw InputError("checkpoint has no " + std::string(what) + " '" + std::string(name) + "'");
  return *p;
}

}  // namespace

const std::string& Checkpoint::meta_value(std::string_view key) const {
  return require(find_named(meta, key), "meta field", key);
}
bool Checkpoint::has_meta(std::string_view key) const { return find_named(meta, key) != nullptr; }
const ParamSet& Checkpoint::network(std::string_view role) const {
  return require(find_named(networks, role), "network", role);
}
bool Checkpoint::has_network(std::string_view role) const { return find_named(networks, role) != nullptr; }
const AdamState& Checkpoint::optimizer(std::string_view role) const {
  return require(find_named(optimizers, role), "optimizer", role);
}
bool Checkpoint::has_optimizer(std::string_view role) const { return find_named(optimizers, role) != nullptr; }
const Matrix& Checkpoint::array(std::string_view name) const {
  return require(find_named(arrays, name), "array", name);
}
bool Checkpoint::has_array(std::string_view name) const { return find_named(arrays, name) != nullptr; }

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

void write_values(std::ostream& os, std::string_view tag, const double* v, std::size_t n) {
  os << tag;
  for (std::size_t i = 0; i < n; ++i) os << ' ' << format_real(v[i]);
  os << '\n';
}

void write_body(std::ostream& os, const ParamSet& p) {
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const Layer& l = p.layers[k];
    os << "layer " << k << ' ' << l.out << ' ' << l.in << '\n';
    for (std::size_t o = 0; o < l.out; ++o) write_values(os, "w", l.weight.data() + o * l.in, l.in);
    write_values(os, "b", l.bias.data(), l.out);
  }
  if (!p.log_std.empty()) write_values(os, "log_std", p.log_std.data(), p.log_std.size());
}

void write_network_header(std::ostream& os, std::string_view keyword, std::string_view role, const ParamSet& p) {
  os << keyword << ' ' << role << " layers " << p.layers.size() << " log_std " << p.log_std.size() << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next() {
    while (pos_ <= text_.size()) {
      const std::size_t end = std::min(text_.find('\n', pos_), text_.size());
      std::string_view line = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      ++line_no_;
      tokens_.clear();
      std::size_t i = 0;
      while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) tokens_.push_back(line.substr(i, j - i));
        i = j;
      }
      raw_ = line;
      if (!tokens_.empty()) return true;
    }
    return false;
  }

  void expect_next(std::string_view what) {
    if (!next()) fail("unexpected end of document, expected " + std::string(what));
  }

  const std::vector<std::string_view>& tokens() const { return tokens_; }
  std::string_view raw() const { return raw_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("checkpoint line " + std::to_string(line_no_) + ": " + msg);
  }

  void expect_tag(std::string_view tag, std::size_t count) const {
    if (tokens_.empty() || tokens_[0] != tag) fail("expected '" + std::string(tag) + "'");
    if (tokens_.size() != count) {
      fail("'" + std::string(tag) + "' expects " + std::to_string(count - 1) + " fields, got " +
           std::to_string(tokens_.size() - 1));
    }
  }

  double real(std::size_t idx) const {
    double v = 0.0;
    const auto tok = tokens_.at(idx);
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("malformed number '" + std::string(tok) + "'");
    return v;
  }

  std::size_t count(std::size_t idx) const {
    std::size_t v = 0;
    const auto tok = tokens_.at(idx);
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("malformed count '" + std::string(tok) + "'");
    return v;
  }

  std::int64_t integer(std::size_t idx) const {
    std::int64_t v = 0;
    const auto tok = tokens_.at(idx);
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("malformed integer '" + std::string(tok) + "'");
    return v;
  }

  void read_values(std::string_view tag, double* out, std::size_t n) const {
    expect_tag(tag, n + 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = real(i + 1);
  }

  void expect_keyword(std::size_t idx, std::string_view kw) const {
    if (tokens_.size() <= idx || tokens_[idx] != kw) fail("expected keyword '" + std::string(kw) + "'");
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
  std::vector<std::string_view> tokens_;
  std::string_view raw_;
};

ParamSet read_body(LineReader& in, std::size_t n_layers, std::size_t n_log_std) {
  ParamSet p;
  for (std::size_t k = 0; k < n_layers; ++k) {
    in.expect_next("layer");
    in.expect_tag("layer", 4);
    if (in.count(1) != k) in.fail("layer index out of order");
    Layer l;
    l.out = in.count(2);
    l.in = in.count(3);
    l.weight.resize(l.out * l.in);
    l.bias.resize(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      in.expect_next("weight row");
      in.read_values("w", l.weight.data() + o * l.in, l.in);
    }
    in.expect_next("bias");
    in.read_values("b", l.bias.data(), l.out);
    p.layers.push_back(std::move(l));
  }
  if (n_log_std > 0) {
    in.expect_next("log_std");
    p.log_std.resize(n_log_std);
    in.read_values("log_std", p.log_std.data(), n_log_std);
  }
  try {
    p.validate();
  } catch (const ConfigError& e) {
    in.fail(e.what());
  }
  return p;
}

}  // namespace

std::string to_text(const Checkpoint& ckpt) {
  std::ostringstream os;
  os << "coopstyle_checkpoint\n";
  os << "format_version " << ckpt.format_version << '\n';
  for (const auto& [k, v] : ckpt.meta) os << "meta " << k << ' ' << v << '\n';
  for (const auto& [role, p] : ckpt.networks) {
    write_network_header(os, "network", role, p);
    write_body(os, p);
  }
  for (const auto& [role, s] : ckpt.optimizers) {
    os << "adam " << role << " step " << s.step << " lr " << format_real(s.learning_rate) << " beta1 "
       << format_real(s.beta1) << " beta2 " << format_real(s.beta2) << " eps " << format_real(s.epsilon) << '\n';
    write_network_header(os, "moment", "first", s.first_moment);
    write_body(os, s.first_moment);
    write_network_header(os, "moment", "second", s.second_moment);
    write_body(os, s.second_moment);
  }
  for (const auto& [name, m] : ckpt.arrays) {
    os << "array " << name << ' ' << m.rows << ' ' << m.cols << '\n';
    for (std::size_t i = 0; i < m.rows; ++i) write_values(os, "r", m.data.data() + i * m.cols, m.cols);
  }
  os << "end\n";
  return os.str();
}

Checkpoint from_text(std::string_view text) {
  LineReader in(text);
  Checkpoint ckpt;
  in.expect_next("header");
  in.expect_tag("coopstyle_checkpoint", 1);
  in.expect_next("format_version");
  in.expect_tag("format_version", 2);
  ckpt.format_version = static_cast<int>(in.integer(1));
  if (ckpt.format_version != kCheckpointFormatVersion) {
    in.fail("unsupported format_version " + std::to_string(ckpt.format_version));
  }
  bool ended = false;
  while (in.next()) {
    const auto& t = in.tokens();
    if (t[0] == "end") {
      ended = true;
      break;
    }
    if (t[0] == "meta") {
      if (t.size() < 3) in.fail("meta needs a key and a value");
      const auto raw = in.raw();
      const auto at = static_cast<std::size_t>(t[1].data() - raw.data()) + t[1].size();
      std::string value(raw.substr(at));
      value.erase(0, value.find_first_not_of(" \t"));
      while (!value.empty() && (value.back() == '\r' || value.back() == ' ')) value.pop_back();
      ckpt.meta.emplace_back(std::string(t[1]), std::move(value));
    } else if (t[0] == "network") {
      in.expect_tag("network", 6);
      in.expect_keyword(2, "layers");
      in.expect_keyword(4, "log_std");
      std::string role(t[1]);
      const std::size_t n_layers = in.count(3);
      const std::size_t n_log_std = in.count(5);
      ckpt.networks.emplace_back(std::move(role), read_body(in, n_layers, n_log_std));
    } else if (t[0] == "adam") {
      in.expect_tag("adam", 12);
      AdamState s;
      std::string role(t[1]);
      in.expect_keyword(2, "step");
      s.step = in.integer(3);
      in.expect_keyword(4, "lr");
      s.learning_rate = in.real(5);
      in.expect_keyword(6, "beta1");
      s.beta1 = in.real(7);
      in.expect_keyword(8, "beta2");
      s.beta2 = in.real(9);
      in.expect_keyword(10, "eps");
      s.epsilon = in.real(11);
      for (int which = 0; which < 2; ++which) {
        in.expect_next("moment");
        in.expect_tag("moment", 6);
        in.expect_keyword(1, which == 0 ? "first" : "second");
        const std::size_t n_layers = in.count(3);
        const std::size_t n_log_std = in.count(5);
        (which == 0 ? s.first_moment : s.second_moment) = read_body(in, n_layers, n_log_std);
      }
      ckpt.optimizers.emplace_back(std::move(role), std::move(s));
    } else if (t[0] == "array") {
      in.expect_tag("array", 4);
      std::string name(t[1]);
      Matrix m(in.count(2), in.count(3));
      for (std::size_t i = 0; i < m.rows; ++i) {
        in.expect_next("array row");
        in.read_values("r", m.data.data() + i * m.cols, m.cols);
      }
      ckpt.arrays.emplace_back(std::move(name), std::move(m));
    } else {
      in.fail("unknown record '" + std::string(t[0]) + "'");
    }
  }
  if (!ended) in.fail("missing 'end' record");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  // Write-then-rename so an interrupted run never leaves a truncated file.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << to_text(ckpt);
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_text(buf.str());
}

std::uint64_t content_id(const Checkpoint& ckpt) {
  std::ostringstream os;
  for (const auto& [role, p] : ckpt.networks) {
    write_network_header(os, "network", role, p);
    write_body(os, p);
  }
  const std::string s = os.str();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace coopstyle::nn
