#include "asmc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace asmc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail_line(int line, const std::string& what) {
  throw ConfigError("line " + std::to_string(line) + ": " + what);
}

std::optional<double> parse_number(const std::string& text) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = text.data() + (text[0] == '+' ? 1 : 0);
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

// Strips a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_value(const std::string& raw, int line) {
  if (raw.empty()) fail_line(line, "missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') fail_line(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) {
        const char c = raw[++i];
        out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
      } else {
        out += raw[i];
      }
    }
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.front() == '[') {
    if (raw.back() != ']') fail_line(line, "unterminated array");
    std::vector<double> out;
    std::stringstream ss(raw.substr(1, raw.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      const auto v = parse_number(t);
      if (!v) fail_line(line, "array entries must be numbers");
      out.push_back(*v);
    }
    return out;
  }
  const auto v = parse_number(raw);
  if (!v) fail_line(line, "cannot parse value '" + raw + "'");
  return *v;
}

std::string key_path(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

// Pops typed values out of a table; whatever is left over is unknown.
class Reader {
 public:
  explicit Reader(TomlTable table) : table_(std::move(table)) {}

  std::optional<TomlValue> take(const std::string& section, const std::string& key) {
    auto s = table_.find(section);
    if (s == table_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    TomlValue v = std::move(k->second);
    s->second.erase(k);
    return v;
  }

  std::optional<double> number(const std::string& section, const std::string& key) {
    const auto v = take(section, key);
    if (!v) return std::nullopt;
    if (const auto* d = std::get_if<double>(&*v)) return *d;
    if (const auto* s = std::get_if<std::string>(&*v))
      if (const auto parsed = parse_number(*s)) return parsed;
    throw ConfigError("key '" + key_path(section, key) + "': expected a number");
  }

  std::optional<int> integer(const std::string& section, const std::string& key) {
    const auto v = number(section, key);
    if (!v) return std::nullopt;
    if (!std::isfinite(*v) || std::floor(*v) != *v || std::abs(*v) > 2147483647.0)
      throw ConfigError("key '" + key_path(section, key) + "': expected an integer");
    return static_cast<int>(*v);
  }

  std::optional<std::string> string(const std::string& section, const std::string& key) {
    const auto v = take(section, key);
    if (!v) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&*v)) return *s;
    throw ConfigError("key '" + key_path(section, key) + "': expected a string");
  }

  std::optional<std::vector<double>> array(const std::string& section, const std::string& key) {
    const auto v = take(section, key);
    if (!v) return std::nullopt;
    if (const auto* a = std::get_if<std::vector<double>>(&*v)) return *a;
    throw ConfigError("key '" + key_path(section, key) + "': expected an array of numbers");
  }

  void reject_leftovers() const {
    for (const auto& [section, keys] : table_)
      for (const auto& entry : keys) throw ConfigError("unknown key '" + key_path(section, entry.first) + "'");
  }

  std::vector<std::string> keys(const std::string& section) const {
    std::vector<std::string> out;
    if (auto s = table_.find(section); s != table_.end())
      for (const auto& entry : s->second) out.push_back(entry.first);
    return out;
  }

 private:
  TomlTable table_;
};

const std::set<std::string>& shape_keys(ModelKind kind) {
  static const std::set<std::string> radon{"seed", "groups", "max_size", "treated_share", "sigma", "group_sd"};
  static const std::set<std::string> dns{"seed", "horizon", "state_sd", "noise_sd"};
  static const std::set<std::string> m5{"seed", "stores", "departments", "items", "correlation", "noise_sd"};
  static const std::set<std::string> conj{"seed", "groups", "size"};
  switch (kind) {
    case ModelKind::radon: return radon;
    case ModelKind::dns: return dns;
    case ModelKind::m5: return m5;
    case ModelKind::conjugate: return conj;
  }
  return conj;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

TomlTable parse_toml(std::string_view text) {
  TomlTable table;
  std::string section;
  table[section];
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string l = trim(strip_comment(raw));
    if (l.empty()) continue;
    if (l.front() == '[') {
      if (l.back() != ']') fail_line(line, "malformed section header");
      section = trim(l.substr(1, l.size() - 2));
      if (section.empty()) fail_line(line, "empty section name");
      if (table.count(section) && !table[section].empty()) fail_line(line, "duplicate section [" + section + "]");
      table[section];
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) fail_line(line, "expected key = value");
    const std::string key = trim(l.substr(0, eq));
    if (key.empty()) fail_line(line, "missing key");
    auto& sec = table[section];
    if (sec.count(key)) fail_line(line, "duplicate key '" + key_path(section, key) + "'");
    sec[key] = parse_value(trim(l.substr(eq + 1)), line);
  }
  return table;
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::asmc: return "asmc";
    case EstimatorKind::psis: return "psis";
    case EstimatorKind::mcmc_refit: return "mcmc-refit";
    case EstimatorKind::all: return "all";
  }
  return "?";
}

EstimatorKind estimator_from_string(std::string_view text) {
  if (text == "asmc") return EstimatorKind::asmc;
  if (text == "psis") return EstimatorKind::psis;
  if (text == "mcmc-refit") return EstimatorKind::mcmc_refit;
  if (text == "all") return EstimatorKind::all;
  throw ConfigError("unknown estimator '" + std::string(text) + "'");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::radon: return "radon";
    case ModelKind::dns: return "dns";
    case ModelKind::m5: return "m5";
    case ModelKind::conjugate: return "conjugate";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view text) {
  if (text == "radon") return ModelKind::radon;
  if (text == "dns") return ModelKind::dns;
  if (text == "m5") return ModelKind::m5;
  if (text == "conjugate") return ModelKind::conjugate;
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

void RunConfig::validate() const {
  if (particles < 25) throw ConfigError("particles must be >= 25 (got " + std::to_string(particles) + ")");
  if (!(ess_ratio > 0.0 && ess_ratio < 1.0))
    throw ConfigError("ess_ratio must lie in (0, 1) (got " + format_double(ess_ratio) + ")");
  if (std::isnan(khat_threshold)) throw ConfigError("khat_threshold must not be nan");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (scheme == SchemeKind::lso && folds < 2) throw ConfigError("scheme.folds must be >= 2");
  if (horizon < 1) throw ConfigError("scheme.horizon must be >= 1");
  if (kappa <= 0.0 || tau <= 0.0 || sigma <= 0.0) throw ConfigError("model scales must be positive");
  if (kernel_iterations && *kernel_iterations < 0) throw ConfigError("kernel.iterations must be >= 0");
  kernel.validate();
  baseline.validate();
  if (baseline.retained() != particles)
    throw ConfigError("baseline keeps (iterations - burn_in) / thin = " + std::to_string(baseline.retained()) +
                      " draws but particles = " + std::to_string(particles));
  for (const auto& [key, value] : shape)
    if (!shape_keys(model).count(key))
      throw ConfigError("key 'synthetic." + key + "' is not a shape option of model " + std::string(to_string(model)));
  EstimandSpec{estimand, horizon}.validate(scheme);
}

bool RunConfig::operator==(const RunConfig& o) const {
  auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  return model == o.model && data == o.data && shape == o.shape && maturities == o.maturities &&
         same(kappa, o.kappa) && same(tau, o.tau) && same(sigma, o.sigma) && scheme == o.scheme &&
         folds == o.folds && group == o.group && t_min == o.t_min && estimand == o.estimand &&
         horizon == o.horizon && path == o.path && estimator == o.estimator && particles == o.particles &&
         same(ess_ratio, o.ess_ratio) && same(khat_threshold, o.khat_threshold) && same(tolerance, o.tolerance) &&
         kernel.kind == o.kernel.kind && same(kernel.step_size, o.kernel.step_size) &&
         kernel.leapfrog_steps == o.kernel.leapfrog_steps && same(kernel.rwm_scale, o.kernel.rwm_scale) &&
         kernel_iterations == o.kernel_iterations && baseline.iterations == o.baseline.iterations &&
         baseline.burn_in == o.baseline.burn_in && baseline.thin == o.baseline.thin &&
         baseline.kind == o.baseline.kind && baseline.leapfrog_steps == o.baseline.leapfrog_steps &&
         same(baseline.target_accept, o.baseline.target_accept) && seed == o.seed && threads == o.threads &&
         output == o.output;
}

RunConfig config_from_toml(const TomlTable& table) {
  for (const auto& [section, keys] : table) {
    static const std::set<std::string> known{"", "model", "synthetic", "scheme", "kernel", "baseline"};
    if (!known.count(section)) throw ConfigError("unknown section [" + section + "]");
  }
  Reader rd(table);
  RunConfig c;
  const auto model = rd.string("model", "kind");
  if (!model) throw ConfigError("missing required key 'model.kind'");
  c.model = model_kind_from_string(*model);
  if (auto v = rd.string("model", "data")) c.data = *v;
  if (auto v = rd.number("model", "kappa")) c.kappa = *v;
  if (auto v = rd.number("model", "tau")) c.tau = *v;
  if (auto v = rd.number("model", "sigma")) c.sigma = *v;
  if (auto v = rd.array("model", "maturities")) c.maturities = *v;

  for (const auto& key : rd.keys("synthetic")) c.shape[key] = *rd.number("synthetic", key);

  const auto scheme = rd.string("scheme", "kind");
  if (!scheme) throw ConfigError("missing required key 'scheme.kind'");
  c.scheme = scheme_kind_from_string(*scheme);
  if (auto v = rd.integer("scheme", "folds")) c.folds = *v;
  if (auto v = rd.integer("scheme", "group")) c.group = *v;
  if (auto v = rd.integer("scheme", "t_min")) c.t_min = *v;
  if (auto v = rd.string("scheme", "estimand")) c.estimand = estimand_kind_from_string(*v);
  if (auto v = rd.integer("scheme", "horizon")) c.horizon = *v;
  if (auto v = rd.string("scheme", "path")) c.path = path_kind_from_string(*v);

  const auto seed = rd.number("", "seed");
  if (!seed) throw ConfigError("missing required key 'seed'");
  if (!(*seed >= 0.0 && *seed <= 9007199254740992.0 && std::floor(*seed) == *seed))
    throw ConfigError("key 'seed': expected a non-negative integer below 2^53");
  c.seed = static_cast<std::uint64_t>(*seed);
  if (auto v = rd.integer("", "threads")) c.threads = *v;
  if (auto v = rd.string("", "estimator")) c.estimator = estimator_from_string(*v);
  if (auto v = rd.integer("", "particles")) c.particles = *v;
  if (auto v = rd.number("", "ess_ratio")) c.ess_ratio = *v;
  if (auto v = rd.number("", "khat_threshold")) c.khat_threshold = *v;
  if (auto v = rd.number("", "tolerance")) c.tolerance = *v;
  if (auto v = rd.string("", "output")) c.output = *v;

  if (auto v = rd.string("kernel", "kind")) c.kernel.kind = kernel_kind_from_string(*v);
  if (auto v = rd.integer("kernel", "iterations")) c.kernel_iterations = *v;
  if (auto v = rd.number("kernel", "step_size")) c.kernel.step_size = *v;
  if (auto v = rd.integer("kernel", "leapfrog_steps")) c.kernel.leapfrog_steps = *v;
  if (auto v = rd.number("kernel", "rwm_scale")) c.kernel.rwm_scale = *v;

  if (auto v = rd.string("baseline", "kind")) c.baseline.kind = kernel_kind_from_string(*v);
  if (auto v = rd.integer("baseline", "burn_in")) c.baseline.burn_in = *v;
  if (auto v = rd.integer("baseline", "thin")) c.baseline.thin = *v;
  if (auto v = rd.integer("baseline", "leapfrog_steps")) c.baseline.leapfrog_steps = *v;
  if (auto v = rd.number("baseline", "target_accept")) c.baseline.target_accept = *v;
  if (auto v = rd.integer("baseline", "iterations"))
    c.baseline.iterations = *v;
  else
    c.baseline.iterations = c.baseline.burn_in + c.particles * c.baseline.thin;

  rd.reject_leftovers();
  c.validate();
  return c;
}

RunConfig parse_config_text(std::string_view text) { return config_from_toml(parse_toml(text)); }

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  // Keep the token recognizable as a float.
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string to_toml(const RunConfig& c) {
  std::ostringstream out;
  out << "seed = " << c.seed << "\n";
  out << "threads = " << c.threads << "\n";
  out << "estimator = " << quote(std::string(to_string(c.estimator))) << "\n";
  out << "particles = " << c.particles << "\n";
  out << "ess_ratio = " << format_double(c.ess_ratio) << "\n";
  auto num = [](double v) { return std::isfinite(v) ? format_double(v) : quote(format_double(v)); };
  out << "khat_threshold = " << num(c.khat_threshold) << "\n";
  out << "tolerance = " << num(c.tolerance) << "\n";
  out << "output = " << quote(c.output) << "\n";

  out << "\n[model]\nkind = " << quote(std::string(to_string(c.model))) << "\n";
  if (!c.data.empty()) out << "data = " << quote(c.data) << "\n";
  out << "kappa = " << num(c.kappa) << "\ntau = " << num(c.tau) << "\nsigma = " << num(c.sigma) << "\n";
  if (!c.maturities.empty()) {
    out << "maturities = [";
    for (std::size_t i = 0; i < c.maturities.size(); ++i) out << (i ? ", " : "") << format_double(c.maturities[i]);
    out << "]\n";
  }
  if (!c.shape.empty()) {
    out << "\n[synthetic]\n";
    for (const auto& [k, v] : c.shape) out << k << " = " << num(v) << "\n";
  }

  out << "\n[scheme]\nkind = " << quote(std::string(to_string(c.scheme))) << "\n";
  out << "folds = " << c.folds << "\ngroup = " << c.group << "\nt_min = " << c.t_min << "\n";
  out << "estimand = " << quote(std::string(to_string(c.estimand))) << "\nhorizon = " << c.horizon << "\n";
  if (c.path) out << "path = " << quote(std::string(to_string(*c.path))) << "\n";

  out << "\n[kernel]\nkind = " << quote(std::string(to_string(c.kernel.kind))) << "\n";
  if (c.kernel_iterations) out << "iterations = " << *c.kernel_iterations << "\n";
  out << "step_size = " << num(c.kernel.step_size) << "\nleapfrog_steps = " << c.kernel.leapfrog_steps << "\n";
  out << "rwm_scale = " << num(c.kernel.rwm_scale) << "\n";

  out << "\n[baseline]\nkind = " << quote(std::string(to_string(c.baseline.kind))) << "\n";
  out << "iterations = " << c.baseline.iterations << "\nburn_in = " << c.baseline.burn_in << "\n";
  out << "thin = " << c.baseline.thin << "\nleapfrog_steps = " << c.baseline.leapfrog_steps << "\n";
  out << "target_accept = " << num(c.baseline.target_accept) << "\n";
  return out.str();
}

}  // namespace asmc
