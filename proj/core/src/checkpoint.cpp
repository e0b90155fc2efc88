#include "drsrl/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "drsrl/errors.hpp"

namespace drsrl {

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw ConfigError("checkpoint: bad number '" + tok + "'");
  return v;
}

void write_spec(std::ostream& os, const char* tag, const ApproximatorSpec& s) {
  os << tag << ' ' << s.node_width << ' ' << s.graph_hidden << ' ' << s.extra_inputs << ' ' << s.n_actions << ' '
     << s.trunk_hidden.size();
  for (int h : s.trunk_hidden) os << ' ' << h;
  os << '\n';
}

void write_params(std::ostream& os, const char* tag, const ParamSet& p) {
  os << tag << ' ' << hex(p.norm_cap) << ' ' << p.values.size() << '\n';
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    os << hex(p.values[i]) << ((i + 1) % 8 == 0 || i + 1 == p.values.size() ? '\n' : ' ');
  }
}

class Tokens {
 public:
  explicit Tokens(const std::string& text) : in_(text) {}
  std::string next(const char* what) {
    std::string t;
    if (!(in_ >> t)) throw ConfigError(std::string("checkpoint truncated while reading ") + what);
    return t;
  }
  void expect(const char* word) {
    const auto t = next(word);
    if (t != word) throw ConfigError("checkpoint: expected '" + std::string(word) + "', found '" + t + "'");
  }
  long integer(const char* what) {
    const auto t = next(what);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (*end != '\0') throw ConfigError("checkpoint: bad integer for " + std::string(what) + ": '" + t + "'");
    return v;
  }
  double real(const char* what) { return parse_hex(next(what)); }

 private:
  std::istringstream in_;
};

ApproximatorSpec read_spec(Tokens& tk) {
  ApproximatorSpec s;
  s.node_width = static_cast<int>(tk.integer("node_width"));
  s.graph_hidden = static_cast<int>(tk.integer("graph_hidden"));
  s.extra_inputs = static_cast<int>(tk.integer("extra_inputs"));
  s.n_actions = static_cast<int>(tk.integer("n_actions"));
  const long layers = tk.integer("trunk depth");
  if (layers < 0 || layers > 64) throw ConfigError("checkpoint: implausible trunk depth");
  s.trunk_hidden.clear();
  for (long i = 0; i < layers; ++i) s.trunk_hidden.push_back(static_cast<int>(tk.integer("trunk width")));
  return s;
}

ParamSet read_params(Tokens& tk, const ApproximatorSpec& spec) {
  ParamSet p;
  p.norm_cap = tk.real("norm cap");
  const long n = tk.integer("parameter count");
  if (n < 0 || static_cast<std::size_t>(n) != spec.param_count()) {
    throw DimensionError("checkpoint: parameter count " + std::to_string(n) + " does not match its spec (" +
                         std::to_string(spec.param_count()) + ")");
  }
  p.values.resize(static_cast<std::size_t>(n));
  for (auto& v : p.values) v = tk.real("parameter");
  return p;
}

}  // namespace

bool Checkpoint::operator==(const Checkpoint& o) const {
  auto same_params = [](const ParamSet& a, const ParamSet& b) {
    return a.norm_cap == b.norm_cap && a.values == b.values;
  };
  if (safe.has_value() != o.safe.has_value()) return false;
  if (safe && !same_params(*safe, *o.safe)) return false;
  return algorithm == o.algorithm && actions == o.actions && task_spec == o.task_spec && same_params(task, o.task) &&
         safe_spec == o.safe_spec && episodes_trained == o.episodes_trained;
}

std::string serialize_checkpoint(const Checkpoint& c) {
  if (c.safe.has_value() != c.safe_spec.has_value()) {
    throw InvalidStateError("checkpoint: safety spec and parameters must be present together");
  }
  std::ostringstream os;
  os << "drsrl-checkpoint " << kCheckpointVersion << '\n';
  os << "algorithm " << to_string(c.algorithm) << '\n';
  os << "episodes " << c.episodes_trained << '\n';
  os << "actions " << c.actions.size() << '\n';
  for (const auto& e : c.actions.entries()) os << hex(e.accel) << ' ' << hex(e.steer_deg) << '\n';
  write_spec(os, "task_spec", c.task_spec);
  write_params(os, "task_params", c.task);
  os << "safe_model " << (c.safe ? 1 : 0) << '\n';
  if (c.safe) {
    write_spec(os, "safe_spec", *c.safe_spec);
    write_params(os, "safe_params", *c.safe);
  }
  os << "end\n";
  return os.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  Tokens tk(text);
  tk.expect("drsrl-checkpoint");
  const long version = tk.integer("version");
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  tk.expect("algorithm");
  c.algorithm = algorithm_from_string(tk.next("algorithm"));
  tk.expect("episodes");
  c.episodes_trained = static_cast<int>(tk.integer("episodes"));
  tk.expect("actions");
  const long n_actions = tk.integer("action count");
  std::vector<ActionEntry> entries;
  for (long i = 0; i < n_actions; ++i) {
    ActionEntry e;
    e.accel = tk.real("accel");
    e.steer_deg = tk.real("steer");
    entries.push_back(e);
  }
  // The table is rebuilt from its limits; the stored rows must agree with it.
  if (entries.size() != kActionCount) throw DimensionError("checkpoint: action table must have 23 rows");
  c.actions = ActionTable(entries[kAccelLevels - 1].accel, entries.back().steer_deg);
  if (c.actions.entries() != entries) throw ConfigError("checkpoint: action table rows do not match the coupled layout");
  tk.expect("task_spec");
  c.task_spec = read_spec(tk);
  tk.expect("task_params");
  c.task = read_params(tk, c.task_spec);
  tk.expect("safe_model");
  const long has_safe = tk.integer("safe_model flag");
  if (has_safe != 0 && has_safe != 1) throw ConfigError("checkpoint: safe_model flag must be 0 or 1");
  if (has_safe) {
    tk.expect("safe_spec");
    c.safe_spec = read_spec(tk);
    tk.expect("safe_params");
    c.safe = read_params(tk, *c.safe_spec);
  }
  tk.expect("end");
  if ((c.algorithm == Algorithm::DrsPpo) != c.safe.has_value()) {
    throw ConfigError("checkpoint: " + std::string(to_string(c.algorithm)) +
                      (c.safe ? " must not carry a safety model" : " requires a safety model"));
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string text = serialize_checkpoint(ckpt);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << text;
  if (!out) throw ConfigError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_checkpoint(ss.str());
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

PolicyModels models_from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.safe || !ckpt.safe_spec) throw ConfigError("checkpoint has no safety model");
  PolicyModels m;
  m.task_net = Approximator(ckpt.task_spec);
  m.safe_net = Approximator(*ckpt.safe_spec);
  m.task = ckpt.task;
  m.safe = *ckpt.safe;
  return m;
}

}  // namespace drsrl
