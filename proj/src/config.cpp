#include "pairloc/config.hpp"

#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace pairloc {

namespace pt = boost::property_tree;

ConfigError::ConfigError(const std::string& source, const std::string& key, int line,
                         const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " +
                         (key.empty() ? std::string() : "'" + key + "': ") + message),
      key_(key),
      line_(line) {}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"run", {"preset", "engine", "seed", "n_realizations", "workers", "output_dir"}},
      {"geometry", {"shape", "radius_x", "radius_y", "radius_z", "n_spins", "r_bl", "a0"}},
      {"interaction", {"law", "c_a", "exponent", "delta", "angular", "cutoff_um"}},
      {"sweep",
       {"omegas", "omega_inner", "omega_outer", "n_inner", "n_outer", "rescale", "t_late",
        "late_mode", "window_fraction"}},
      {"time", {"t_max", "n_times", "times"}},
      {"dtwa", {"n_traj", "tol", "batch_size", "single_precision_field"}},
      {"pairs", {"matching", "exact_limit", "damping", "tol", "max_iter"}},
  };
  return s;
}

// Line of every "section.key" in the source text, for diagnostics.
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  static const std::regex sec_re(R"(^\s*\[\s*([^\]]+?)\s*\]\s*$)");
  static const std::regex key_re(R"(^\s*([^=;#\s][^=]*?)\s*=)");
  std::smatch m;
  for (int n = 1; std::getline(in, line); ++n) {
    if (std::regex_search(line, m, sec_re))
      section = m[1];
    else if (std::regex_search(line, m, key_re))
      lines.emplace((section.empty() ? "" : section + ".") + m[1].str(), n);
  }
  return lines;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, const std::string& source, std::map<std::string, int> lines)
      : tree_(tree), source_(source), lines_(std::move(lines)) {}

  bool has(const std::string& key) const { return tree_.get_child_optional(pt::ptree::path_type(key, '.')).has_value(); }

  std::string str(const std::string& key) const {
    return tree_.get<std::string>(pt::ptree::path_type(key, '.'));
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const auto it = lines_.find(key);
    throw ConfigError(source_, key, it == lines_.end() ? 0 : it->second, msg);
  }

  double number(const std::string& key) const {
    const std::string s = str(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + s + "'");
    }
  }

  std::uint64_t count(const std::string& key) const {
    const std::string s = str(key);
    try {
      if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
      std::size_t pos = 0;
      const auto v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      fail(key, "expected a non-negative integer, got '" + s + "'");
    }
  }

  bool boolean(const std::string& key) const {
    const std::string s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(key, "expected true or false, got '" + s + "'");
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b == std::string::npos) fail(key, "empty list element");
      const std::string tok = item.substr(b, e - b + 1);
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(key, "expected a comma-separated list of numbers, bad element '" + tok + "'");
      }
    }
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  // Runs f, converting std::invalid_argument into a diagnostic for `key`.
  template <class F>
  auto guarded(const std::string& key, F&& f) const {
    try {
      return f();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(key, e.what());
    }
  }

 private:
  const pt::ptree& tree_;
  std::string source_;
  std::map<std::string, int> lines_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source, "", static_cast<int>(e.line()), e.message());
  }
  const Reader rd(tree, source, key_lines(text));

  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (body.empty() && !body.data().empty())
      rd.fail(section, "key outside of any section");
    if (it == schema().end()) rd.fail(section, "unknown section");
    for (const auto& kv : body)
      if (!it->second.count(kv.first)) rd.fail(section + "." + kv.first, "unknown key");
  }

  ExperimentConfig c;
  bool explicit_law = false;
  if (rd.has("run.preset")) {
    const std::string name = rd.str("run.preset");
    c = rd.guarded("run.preset", [&] { return config_from_preset(name); });
  } else {
    c.cloud = CloudGeometry{};
    c.n_spins = 0;
    c.law = dipolar_48s48p();
  }

  if (rd.has("run.engine"))
    c.engine = rd.guarded("run.engine", [&] { return engine_from_string(rd.str("run.engine")); });
  if (rd.has("run.seed")) c.seed = rd.count("run.seed");
  if (rd.has("run.n_realizations")) c.n_realizations = rd.count("run.n_realizations");
  if (rd.has("run.workers")) c.workers = rd.count("run.workers");
  if (rd.has("run.output_dir")) c.output_dir = rd.str("run.output_dir");

  if (rd.has("geometry.shape"))
    c.cloud.shape = rd.guarded("geometry.shape",
                               [&] { return cloud_shape_from_string(rd.str("geometry.shape")); });
  if (rd.has("geometry.radius_x")) c.cloud.radius_x = rd.number("geometry.radius_x");
  if (rd.has("geometry.radius_y")) c.cloud.radius_y = rd.number("geometry.radius_y");
  if (rd.has("geometry.radius_z")) c.cloud.radius_z = rd.number("geometry.radius_z");
  if (rd.has("geometry.n_spins")) c.n_spins = rd.count("geometry.n_spins");
  if (rd.has("geometry.r_bl")) c.r_bl = rd.number("geometry.r_bl");
  if (rd.has("geometry.a0")) {
    const std::string s = rd.str("geometry.a0");
    if (s == "none")
      c.a0.reset();
    else
      c.a0 = rd.number("geometry.a0");
  }

  if (rd.has("interaction.law")) {
    const std::string name = rd.str("interaction.law");
    if (name == "custom") {
      explicit_law = true;
    } else {
      c.law = rd.guarded("interaction.law", [&] { return interaction_law_preset(name); });
    }
  }
  for (const char* k : {"c_a", "exponent", "delta", "angular"}) {
    const std::string key = std::string("interaction.") + k;
    if (rd.has(key) && !explicit_law)
      rd.fail(key, "explicit law parameters need law = custom");
  }
  if (explicit_law) {
    for (const char* k : {"c_a", "exponent", "delta", "angular"})
      if (!rd.has(std::string("interaction.") + k))
        rd.fail(std::string("interaction.") + k, "required when law = custom");
    c.law.c_a = rd.number("interaction.c_a");
    c.law.exponent = static_cast<int>(rd.count("interaction.exponent"));
    c.law.delta = rd.number("interaction.delta");
    c.law.angular = rd.boolean("interaction.angular");
    c.law.kind = c.law.exponent == 6 ? InteractionKind::VanDerWaals : InteractionKind::Dipolar;
    rd.guarded("interaction.law", [&] {
      c.law.validate();
      return 0;
    });
  }
  if (rd.has("interaction.cutoff_um")) c.cutoff_um = rd.number("interaction.cutoff_um");

  if (rd.has("sweep.omegas")) {
    if (rd.has("sweep.omega_inner") || rd.has("sweep.omega_outer"))
      rd.fail("sweep.omegas", "give either omegas or omega_inner/omega_outer, not both");
    c.omegas = rd.numbers("sweep.omegas");
  } else if (rd.has("sweep.omega_inner") || rd.has("sweep.omega_outer")) {
    if (!rd.has("sweep.omega_inner")) rd.fail("sweep.omega_inner", "required with omega_outer");
    const double inner = rd.number("sweep.omega_inner");
    const double outer = rd.has("sweep.omega_outer") ? rd.number("sweep.omega_outer") : inner;
    const std::size_t ni = rd.has("sweep.n_inner") ? rd.count("sweep.n_inner") : 10;
    const std::size_t no = rd.has("sweep.n_outer") ? rd.count("sweep.n_outer") : 10;
    c.omegas = rd.guarded("sweep.omega_inner",
                          [&] { return default_field_grid(inner, outer, ni, no); });
  }
  if (rd.has("sweep.rescale")) c.rescale = rd.number("sweep.rescale");
  if (rd.has("sweep.t_late")) c.t_late = rd.number("sweep.t_late");
  if (rd.has("sweep.late_mode")) {
    const std::string m = rd.str("sweep.late_mode");
    if (m == "window")
      c.window_mode = true;
    else if (m == "last")
      c.window_mode = false;
    else
      rd.fail("sweep.late_mode", "expected window or last, got '" + m + "'");
  }
  if (rd.has("sweep.window_fraction")) c.window_fraction = rd.number("sweep.window_fraction");

  if (rd.has("time.times")) {
    if (rd.has("time.t_max")) rd.fail("time.times", "give either times or t_max/n_times");
    c.times = rd.numbers("time.times");
  } else if (rd.has("time.t_max") || rd.has("time.n_times")) {
    const double t_max = rd.has("time.t_max") ? rd.number("time.t_max") : 10.0;
    const std::size_t n = rd.has("time.n_times") ? rd.count("time.n_times") : 201;
    c.times = rd.guarded("time.t_max", [&] { return uniform_times(t_max, n); });
  }

  if (rd.has("dtwa.n_traj")) c.n_traj = rd.count("dtwa.n_traj");
  if (rd.has("dtwa.tol")) c.dtwa_tol = rd.number("dtwa.tol");
  if (rd.has("dtwa.batch_size")) c.batch_size = rd.count("dtwa.batch_size");
  if (rd.has("dtwa.single_precision_field"))
    c.dtwa_single_precision = rd.boolean("dtwa.single_precision_field");

  if (rd.has("pairs.matching"))
    c.matching.method = rd.guarded(
        "pairs.matching", [&] { return pairs::matching_method_from_string(rd.str("pairs.matching")); });
  if (rd.has("pairs.exact_limit")) c.matching.exact_limit = rd.count("pairs.exact_limit");
  if (rd.has("pairs.damping")) c.mean_field.damping = rd.number("pairs.damping");
  if (rd.has("pairs.tol")) c.mean_field.tol = rd.number("pairs.tol");
  if (rd.has("pairs.max_iter")) c.mean_field.max_iter = rd.count("pairs.max_iter");

  if (c.n_spins == 0) rd.fail("geometry.n_spins", "required (or set run.preset)");
  if (c.omegas.empty() && !is_trace_engine(c.engine))
    rd.fail("sweep.omegas", "field grid required");
  if (c.omegas.empty()) c.omegas = {0.0};
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, "", 0, e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "", 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string config_to_ini(const ExperimentConfig& c) {
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt::format("{}", v[k]);
    return s;
  };
  std::string out;
  out += "[run]\n";
  out += fmt::format("engine = {}\nseed = {}\nn_realizations = {}\nworkers = {}\noutput_dir = {}\n",
                     to_string(c.engine), c.seed, c.n_realizations, c.workers, c.output_dir);
  out += "\n[geometry]\n";
  out += fmt::format("shape = {}\nradius_x = {}\nradius_y = {}\nradius_z = {}\nn_spins = {}\nr_bl = {}\n",
                     to_string(c.cloud.shape), c.cloud.radius_x, c.cloud.radius_y, c.cloud.radius_z,
                     c.n_spins, c.r_bl);
  out += c.a0 ? fmt::format("a0 = {}\n", *c.a0) : "a0 = none\n";
  out += "\n[interaction]\nlaw = custom\n";
  out += fmt::format("c_a = {}\nexponent = {}\ndelta = {}\nangular = {}\n", c.law.c_a,
                     c.law.exponent, c.law.delta, c.law.angular ? "true" : "false");
  if (c.cutoff_um) out += fmt::format("cutoff_um = {}\n", *c.cutoff_um);
  out += "\n[sweep]\n";
  out += "omegas = " + list(c.omegas) + "\n";
  out += fmt::format("rescale = {}\nt_late = {}\nlate_mode = {}\nwindow_fraction = {}\n", c.rescale,
                     c.t_late, c.window_mode ? "window" : "last", c.window_fraction);
  if (!c.times.empty()) out += "\n[time]\ntimes = " + list(c.times) + "\n";
  out += "\n[dtwa]\n";
  out += fmt::format("n_traj = {}\ntol = {}\nbatch_size = {}\nsingle_precision_field = {}\n", c.n_traj,
                     c.dtwa_tol, c.batch_size, c.dtwa_single_precision);
  out += "\n[pairs]\n";
  const char* method = c.matching.method == pairs::MatchingMethod::Exact    ? "exact"
                       : c.matching.method == pairs::MatchingMethod::Greedy ? "greedy"
                                                                            : "auto";
  out += fmt::format("matching = {}\nexact_limit = {}\ndamping = {}\ntol = {}\nmax_iter = {}\n",
                     method, c.matching.exact_limit, c.mean_field.damping, c.mean_field.tol,
                     c.mean_field.max_iter);
  return out;
}

}  // namespace pairloc
