#include "specdiff/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace specdiff {

namespace pt = boost::property_tree;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    boost::algorithm::trim(item);
    if (item.empty()) throw InvalidInput(fmt::format("empty entry in list '{}'", text));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidInput(fmt::format("'{}' is not a number (in list '{}')", item, text));
    out.push_back(v);
  }
  return out;
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"law", {"A", "B"}},
      {"baseline", {"T0", "sigma0_GHz", "lambdaJ0_Hz", "sigmaJ0_GHz", "tau_sd_ns", "omega0_GHz"}},
      {"grid", {"dt_ns", "window_ns", "burn_in_ns", "n_traj", "seed", "scheme", "max_samples"}},
      {"simplex",
       {"grid_points", "box_min", "box_max", "tolerance_GHz", "max_evals", "mc_n_traj", "tie_weights", "initial",
        "distance_weight"}},
      {"emitter", {"T1_ns", "T2_ns"}},
      {"dephasing", {"kappa", "reference_T_K", "table", "nodes_K", "sweep_T_K", "sweep_omega_r_GHz"}},
      {"output", {"dir", "svg", "calibration_file"}},
  };
  return s;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> text(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    std::string s = *v;
    boost::algorithm::trim(s);
    return s;
  }

  template <class T>
  void get(const std::string& section, const std::string& key, T& target) const {
    const auto s = text(section, key);
    if (!s) return;
    std::istringstream in(*s);
    T v{};
    in >> v;
    if (in.fail() || !(in >> std::ws).eof())
      throw InvalidInput(fmt::format("[{}] {} = '{}' is not a valid value", section, key, *s));
    target = v;
  }

  void get_bool(const std::string& section, const std::string& key, bool& target) const {
    const auto s = text(section, key);
    if (!s) return;
    if (*s == "true" || *s == "1" || *s == "yes") target = true;
    else if (*s == "false" || *s == "0" || *s == "no") target = false;
    else throw InvalidInput(fmt::format("[{}] {} = '{}' is not a boolean", section, key, *s));
  }

  void get_list(const std::string& section, const std::string& key, std::vector<double>& target) const {
    if (const auto s = text(section, key)) target = parse_list(*s);
  }

 private:
  const pt::ptree& tree_;
};

Eigen::Vector3d three(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) throw InvalidInput(fmt::format("{} needs three comma-separated values", what));
  return {v[0], v[1], v[2]};
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput(fmt::format("config: {}", e.what()));
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) {
      if (body.empty()) throw InvalidInput(fmt::format("config: key '{}' outside any section", section));
      throw InvalidInput(fmt::format("config: unknown section [{}]", section));
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw InvalidInput(fmt::format("config: unknown key '{}' in [{}]", key, section));
  }

  const Reader r(tree);
  RunConfig c;
  r.get("law", "A", c.law.A);
  r.get("law", "B", c.law.B);
  validate(c.law);

  c.baseline = Baseline::reference(c.law);
  r.get("baseline", "T0", c.baseline.T0);
  if (r.text("baseline", "T0")) {
    // Keep the reference construction consistent with a moved T0.
    const Baseline ref = Baseline::reference(c.law, c.baseline.T0);
    c.baseline.sigma0 = ref.sigma0;
    c.baseline.sigmaJ0 = ref.sigmaJ0;
  }
  r.get("baseline", "sigma0_GHz", c.baseline.sigma0);
  r.get("baseline", "lambdaJ0_Hz", c.baseline.lambdaJ0_hz);
  r.get("baseline", "sigmaJ0_GHz", c.baseline.sigmaJ0);
  r.get("baseline", "tau_sd_ns", c.baseline.tau_sd);
  r.get("baseline", "omega0_GHz", c.baseline.omega0);

  r.get("grid", "dt_ns", c.grid.dt);
  r.get("grid", "window_ns", c.grid.window);
  r.get("grid", "burn_in_ns", c.grid.burn_in);
  r.get("grid", "n_traj", c.grid.n_traj);
  r.get("grid", "seed", c.grid.seed);
  if (const auto s = r.text("grid", "scheme")) c.scheme = parse_jump_scheme(*s);
  r.get("grid", "max_samples", c.max_samples);

  r.get("simplex", "grid_points", c.calib.grid_points);
  r.get("simplex", "box_min", c.calib.box_min);
  r.get("simplex", "box_max", c.calib.box_max);
  r.get("simplex", "tolerance_GHz", c.calib.tolerance);
  r.get("simplex", "max_evals", c.calib.max_evals);
  r.get("simplex", "mc_n_traj", c.mc_n_traj);
  r.get("simplex", "distance_weight", c.calib.distance_weight);
  if (const auto s = r.text("simplex", "tie_weights")) c.calib.tie_weights = three(parse_list(*s), "tie_weights");
  if (const auto s = r.text("simplex", "initial")) {
    const Eigen::Vector3d m = three(parse_list(*s), "initial");
    c.calib.initial = MultiplierSet::from_vector(m, 0.0);
  }

  double v = 0.0;
  if (r.text("emitter", "T1_ns")) {
    r.get("emitter", "T1_ns", v);
    c.T1 = v;
  }
  if (r.text("emitter", "T2_ns")) {
    r.get("emitter", "T2_ns", v);
    c.T2 = v;
  }

  r.get("dephasing", "kappa", c.kappa);
  r.get("dephasing", "reference_T_K", c.reference_T);
  r.get_list("dephasing", "nodes_K", c.nodes_K);
  r.get_list("dephasing", "sweep_T_K", c.sweep_T_K);
  r.get_list("dephasing", "sweep_omega_r_GHz", c.sweep_omega_r_GHz);
  if (const auto s = r.text("dephasing", "table")) {
    std::vector<double> T, g;
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw InvalidInput(fmt::format("dephasing table entry '{}' is not T:value", item));
      const auto a = parse_list(item.substr(0, colon));
      const auto b = parse_list(item.substr(colon + 1));
      T.push_back(a.at(0));
      g.push_back(b.at(0));
    }
    c.dephasing_table = std::make_pair(Eigen::Map<Eigen::VectorXd>(T.data(), static_cast<Eigen::Index>(T.size())),
                                       Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size())));
  }

  if (const auto s = r.text("output", "dir")) c.out_dir = *s;
  r.get_bool("output", "svg", c.svg);
  if (const auto s = r.text("output", "calibration_file"); s && !s->empty()) c.calibration_file = *s;

  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open config file '{}'", path.string()));
  return parse_config(in);
}

void validate(const RunConfig& c) {
  validate(c.law);
  validate(c.baseline);
  validate(c.grid);
  if (c.max_samples < 1) throw InvalidInput("[grid] max_samples must be >= 1");
  if (c.mc_n_traj < 1) throw InvalidInput("[simplex] mc_n_traj must be >= 1");
  validate(c.calibration_config());
  if (c.T1 || c.T2) {
    if (!c.T1 || !c.T2) throw InvalidInput("[emitter] needs both T1_ns and T2_ns");
    validate(EmitterParams{*c.T1, *c.T2, 0.0});
  }
  if (!(c.kappa >= 0.0)) throw InvalidInput("[dephasing] kappa must be >= 0");
  if (c.nodes_K.size() < 2) throw InvalidInput("[dephasing] nodes_K needs at least two temperatures");
  for (std::size_t i = 1; i < c.nodes_K.size(); ++i)
    if (!(c.nodes_K[i] > c.nodes_K[i - 1])) throw InvalidInput("[dephasing] nodes_K must be strictly increasing");
  for (double w : c.sweep_omega_r_GHz)
    if (!(w >= 0.0)) throw InvalidInput("[dephasing] sweep_omega_r_GHz entries must be >= 0");
  if (c.dephasing_table) DephasingModel::from_table(c.dephasing_table->first, c.dephasing_table->second);
}

CalibConfig RunConfig::calibration_config() const {
  CalibConfig c = calib;
  c.mc_grid = grid;
  c.mc_grid.n_traj = mc_n_traj;
  c.scheme = scheme;
  return c;
}

RunOptions RunConfig::run_options(unsigned threads) const {
  RunOptions o;
  o.threads = threads;
  o.max_stored_samples = max_samples;
  return o;
}

std::optional<EmitterParams> RunConfig::emitter(double omega_R) const {
  if (!T1 || !T2) return std::nullopt;
  return EmitterParams{*T1, *T2, omega_R};
}

}  // namespace specdiff
