#include "dictdescent/config.hpp"

#include <cmath>
#include <set>

#include "dictdescent/errors.hpp"
#include "dictdescent/rng.hpp"

namespace dictdescent {

namespace {

// Reads one JSON object and rejects keys that nobody asked for.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + " must be an object");
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }

  const Json* find(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& need(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError("missing required field " + at(key));
    return *v;
  }

  double number(const std::string& key) { return as_number(need(key), at(key)); }
  double number(const std::string& key, double fallback) {
    const Json* v = find(key);
    return v ? as_number(*v, at(key)) : fallback;
  }

  long long integer(const std::string& key) { return as_integer(need(key), at(key)); }
  long long integer(const std::string& key, long long fallback) {
    const Json* v = find(key);
    return v ? as_integer(*v, at(key)) : fallback;
  }

  std::string text(const std::string& key) {
    const Json& v = need(key);
    if (!v.is_string()) throw ConfigError(at(key) + " must be a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError("unknown key " + at(k));
  }

  static double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + " must be finite");
    return x;
  }

  static long long as_integer(const Json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
    return v.get<long long>();
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<double> number_list(const Json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(Fields::as_number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<double>> number_rows(const Json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + " must be a non-empty array of arrays");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(number_list(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

// array | {"constant": c} | {"uniform": [lo, hi]} | {"normal": std}
void check_vector_spec(const Json& v, const std::string& where, std::size_t n) {
  if (v.is_array()) {
    if (number_list(v, where).size() != n)
      throw ConfigError(where + " must have " + std::to_string(n) + " entries");
    return;
  }
  if (!v.is_object() || v.size() != 1)
    throw ConfigError(where + " must be an array or one of {constant, uniform, normal}");
  Fields f(v, where);
  if (const Json* c = f.find("constant")) {
    Fields::as_number(*c, f.at("constant"));
  } else if (const Json* u = f.find("uniform")) {
    const auto lohi = number_list(*u, f.at("uniform"));
    if (lohi.size() != 2 || !(lohi[0] < lohi[1]))
      throw ConfigError(f.at("uniform") + " must be [lo, hi] with lo < hi");
  } else if (const Json* s = f.find("normal")) {
    if (!(Fields::as_number(*s, f.at("normal")) > 0.0))
      throw ConfigError(f.at("normal") + " must be a positive standard deviation");
  }
  f.finish();
}

std::vector<double> make_vector(const Json& v, std::size_t n, Rng& rng) {
  if (v.is_array()) return v.get<std::vector<double>>();
  std::vector<double> out(n);
  if (v.contains("constant")) {
    std::fill(out.begin(), out.end(), v["constant"].get<double>());
  } else if (v.contains("uniform")) {
    const double lo = v["uniform"][0].get<double>(), hi = v["uniform"][1].get<double>();
    for (auto& x : out) x = rng.uniform(lo, hi);
  } else {
    const double sd = v["normal"].get<double>();
    for (auto& x : out) x = sd * rng.normal();
  }
  return out;
}

SmoothnessMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "global") return SmoothnessMode::global;
  if (s == "bounded") return SmoothnessMode::bounded;
  throw ConfigError(where + " must be \"global\" or \"bounded\"");
}

std::size_t checked_index(const Json& v, const std::string& where, std::size_t n) {
  const long long k = Fields::as_integer(v, where);
  if (k < 0 || static_cast<std::size_t>(k) >= n)
    throw ConfigError(where + " is out of range [0, " + std::to_string(n) + ")");
  return static_cast<std::size_t>(k);
}

void parse_space(const Json& j, SpaceSpec& out) {
  Fields f(j, "space");
  const long long n = f.integer("n");
  if (n < 1) throw ConfigError("space.n must be >= 1");
  out.n = static_cast<std::size_t>(n);
  out.q = f.number("q");
  if (!(out.q > 1.0)) throw ConfigError("space.q must be > 1");
  if (const Json* w = f.find("weights")) {
    if (w->is_string()) {
      out.weights = w->get<std::string>();
      if (out.weights != "unit" && out.weights != "uniform" && out.weights != "grid")
        throw ConfigError("space.weights must be \"unit\", \"uniform\", \"grid\" or a list");
    } else {
      out.weights = "explicit";
      out.explicit_weights = number_list(*w, "space.weights");
      if (out.explicit_weights.size() != out.n)
        throw ConfigError("space.weights must have space.n entries");
      for (double x : out.explicit_weights)
        if (!(x > 0.0)) throw ConfigError("space.weights must be positive");
    }
  }
  f.finish();
}

void parse_declared(const Json& j, EnergySpec& e) {
  Fields f(j, "energy.declared");
  SmoothnessParams sp;
  sp.p = f.number("p");
  sp.s = f.number("s");
  if (f.find("lip")) sp.lip = f.number("lip");
  if (f.find("alpha")) sp.alpha = f.number("alpha");
  if (f.find("mode")) sp.mode = parse_mode(f.text("mode"), "energy.declared.mode");
  f.finish();
  try {
    sp.validate();
  } catch (const InconsistentAssumptions& ex) {
    throw InconsistentAssumptions(std::string("energy.declared: ") + ex.what() +
                                  " (exponent relation between Hoelder order p and ellipticity order s)");
  } catch (const Error& ex) {
    throw ConfigError(std::string("energy.declared: ") + ex.what());
  }
  e.declared = sp;
}

void parse_energy(const Json& j, const SpaceSpec& space, EnergySpec& e) {
  Fields f(j, "energy");
  e.kind = f.text("kind");
  e.seed = static_cast<std::uint64_t>(f.integer("seed", 0));
  if (e.kind == "power") {
    e.p = f.number("p");
    if (!(e.p > 0.0 && e.p <= 1.0)) throw ConfigError("energy.p must lie in (0, 1]");
    if (std::abs(space.q - (e.p + 1.0)) > 1e-12)
      throw ConfigError("space.q must equal energy.p + 1 for a power energy (got space.q = " +
                        format17(space.q) + ", energy.p = " + format17(e.p) + ")");
    e.target = f.need("target");
    check_vector_spec(e.target, "energy.target", space.n);
  } else if (e.kind == "quadratic") {
    if (std::abs(space.q - 2.0) > 1e-12) throw ConfigError("space.q must be 2 for a quadratic energy");
    e.matrix = f.need("matrix");
    if (e.matrix.is_string()) {
      const auto m = e.matrix.get<std::string>();
      if (m != "identity" && m != "dirichlet_laplacian")
        throw ConfigError("energy.matrix must be \"identity\", \"dirichlet_laplacian\", {diagonal} or rows");
    } else if (e.matrix.is_object()) {
      Fields mf(e.matrix, "energy.matrix");
      if (number_list(mf.need("diagonal"), "energy.matrix.diagonal").size() != space.n)
        throw ConfigError("energy.matrix.diagonal must have space.n entries");
      mf.finish();
    } else {
      const auto rows = number_rows(e.matrix, "energy.matrix");
      if (rows.size() != space.n) throw ConfigError("energy.matrix must have space.n rows");
      for (const auto& r : rows)
        if (r.size() != space.n) throw ConfigError("energy.matrix rows must have space.n entries");
    }
    e.source = f.need("source");
    check_vector_spec(e.source, "energy.source", space.n);
  } else if (e.kind == "plaplacian") {
    e.q_exp = f.number("q_exp");
    if (!(e.q_exp >= 2.0)) throw ConfigError("energy.q_exp must be >= 2");
    if (std::abs(space.q - e.q_exp) > 1e-12)
      throw ConfigError("space.q must equal energy.q_exp for a plaplacian energy");
    if (space.weights != "grid")
      throw ConfigError("space.weights must be \"grid\" for a plaplacian energy");
    e.source = f.need("source");
    check_vector_spec(e.source, "energy.source", space.n);
  } else {
    throw ConfigError("energy.kind must be one of power, quadratic, plaplacian (got \"" + e.kind + "\")");
  }
  if (const Json* d = f.find("declared")) parse_declared(*d, e);
  f.finish();
}

void check_neural(const Json& j, std::size_t n) {
  Fields f(j, "dictionary.atoms.neural");
  const auto act = f.text("activation");
  if (act != "tanh" && act != "sigmoid")
    throw ConfigError("dictionary.atoms.neural.activation must be \"tanh\" or \"sigmoid\"");
  const Json& pts = f.need("points");
  std::size_t dim = 1;
  if (pts.is_object()) {
    Fields pf(pts, "dictionary.atoms.neural.points");
    const auto ab = number_list(pf.need("linspace"), "dictionary.atoms.neural.points.linspace");
    if (ab.size() != 2) throw ConfigError("dictionary.atoms.neural.points.linspace must be [a, b]");
    pf.finish();
  } else {
    const auto rows = number_rows(pts, "dictionary.atoms.neural.points");
    if (rows.size() != n) throw ConfigError("dictionary.atoms.neural.points must have space.n points");
    dim = rows[0].size();
    for (const auto& r : rows)
      if (r.size() != dim || dim == 0)
        throw ConfigError("dictionary.atoms.neural.points must all have the same positive dimension");
  }
  const auto params = number_rows(f.need("params"), "dictionary.atoms.neural.params");
  for (const auto& r : params)
    if (r.size() != dim + 1)
      throw ConfigError("dictionary.atoms.neural.params entries must be [w_1..w_d, b] with d = " +
                        std::to_string(dim));
  f.finish();
}

void parse_dictionary(const Json& j, const SpaceSpec& space, DictionarySpec& d) {
  Fields f(j, "dictionary");
  d.kind = f.text("kind");
  d.params = Json::object();
  if (d.kind == "finite-atoms") {
    const Json& atoms = f.need("atoms");
    if (atoms.is_string()) {
      if (atoms.get<std::string>() != "axes")
        throw ConfigError("dictionary.atoms must be \"axes\", a list of vectors or {neural}");
    } else if (atoms.is_object()) {
      Fields af(atoms, "dictionary.atoms");
      check_neural(af.need("neural"), space.n);
      af.finish();
    } else {
      for (const auto& r : number_rows(atoms, "dictionary.atoms"))
        if (r.size() != space.n) throw ConfigError("dictionary.atoms vectors must have space.n entries");
    }
    d.params["atoms"] = atoms;
  } else if (d.kind == "coordinate-cone") {
    const double c = f.number("c");
    if (!(c > 0.0 && c < 1.0)) throw ConfigError("dictionary.c must lie in (0, 1)");
    d.params["c"] = c;
  } else if (d.kind == "subspace-union") {
    const Json* blocks = f.find("blocks");
    const Json* bases = f.find("bases");
    if ((blocks != nullptr) == (bases != nullptr))
      throw ConfigError("dictionary needs exactly one of dictionary.blocks, dictionary.bases");
    if (blocks) {
      if (!blocks->is_array() || blocks->empty())
        throw ConfigError("dictionary.blocks must be a non-empty array of index lists");
      for (std::size_t b = 0; b < blocks->size(); ++b) {
        const std::string where = "dictionary.blocks[" + std::to_string(b) + "]";
        const Json& blk = (*blocks)[b];
        if (!blk.is_array() || blk.empty()) throw ConfigError(where + " must be a non-empty index list");
        for (std::size_t i = 0; i < blk.size(); ++i)
          checked_index(blk[i], where + "[" + std::to_string(i) + "]", space.n);
      }
      d.params["blocks"] = *blocks;
    } else {
      if (std::abs(space.q - 2.0) > 1e-12) throw ConfigError("dictionary.bases requires space.q = 2");
      if (!bases->is_array() || bases->empty())
        throw ConfigError("dictionary.bases must be a non-empty array of vector lists");
      for (std::size_t b = 0; b < bases->size(); ++b) {
        const std::string where = "dictionary.bases[" + std::to_string(b) + "]";
        for (const auto& r : number_rows((*bases)[b], where))
          if (r.size() != space.n) throw ConfigError(where + " vectors must have space.n entries");
      }
      d.params["bases"] = *bases;
    }
  } else if (d.kind != "full-space") {
    throw ConfigError(
        "dictionary.kind must be one of finite-atoms, coordinate-cone, subspace-union, full-space (got \"" +
        d.kind + "\")");
  }
  f.finish();
}

void parse_greedy(const Json& j, const DictionarySpec& dict, GreedyConfig& g) {
  Fields f(j, "greedy");
  if (f.find("mode")) {
    const auto mode = f.text("mode");
    if (mode == "sigma-line") g.mode = GreedyMode::sigma_line;
    else if (mode == "exact-union") g.mode = GreedyMode::exact_union;
    else throw ConfigError("greedy.mode must be \"sigma-line\" or \"exact-union\"");
  }
  g.max_iter = static_cast<int>(f.integer("max_iter", g.max_iter));
  g.sigma_stop = f.number("sigma_stop", g.sigma_stop);
  g.line_tol = f.number("line_tol", g.line_tol);
  g.bracket_growth = f.number("bracket_growth", g.bracket_growth);
  g.ball_radius_r = f.number("ball_radius_r", g.ball_radius_r);
  f.finish();
  g.validate();
  if (g.mode == GreedyMode::exact_union && dict.kind != "finite-atoms" && dict.kind != "subspace-union")
    throw ConfigError("greedy.mode exact-union needs a finite-atoms or subspace-union dictionary");
}

void parse_analysis(const Json& j, AnalysisSpec& a) {
  Fields f(j, "analysis");
  a.burn_in = static_cast<int>(f.integer("burn_in", a.burn_in));
  a.floor = f.number("floor", a.floor);
  a.trials = static_cast<int>(f.integer("trials", a.trials));
  a.seed = static_cast<std::uint64_t>(f.integer("seed", 0));
  a.samples = static_cast<int>(f.integer("samples", a.samples));
  a.region_radius = f.number("region_radius", a.region_radius);
  f.finish();
  if (a.burn_in < 0) throw ConfigError("analysis.burn_in must be >= 0");
  if (!(a.floor > 0.0 && a.floor < 1.0)) throw ConfigError("analysis.floor must lie in (0, 1)");
  if (a.trials < 1) throw ConfigError("analysis.trials must be >= 1");
  if (a.samples < 20) throw ConfigError("analysis.samples must be >= 20");
}

void parse_output(const Json& j, OutputSpec& o) {
  Fields f(j, "output");
  o.trace_path = f.text("trace_path");
  o.report_path = f.text("report_path");
  if (f.find("plot_path")) o.plot_path = f.text("plot_path");
  f.finish();
  if (o.trace_path.empty() || o.report_path.empty())
    throw ConfigError("output.trace_path and output.report_path must be non-empty");
}

}  // namespace

ExperimentConfig parse_config(const Json& doc) {
  ExperimentConfig cfg;
  cfg.raw = doc;
  Fields f(doc, "config");
  const long long version = f.integer("version");
  if (version != kConfigVersion)
    throw ConfigError("config.version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kConfigVersion) + ")");
  cfg.version = static_cast<int>(version);
  cfg.name = f.text("name");
  if (cfg.name.empty()) throw ConfigError("config.name must be non-empty");
  parse_space(f.need("space"), cfg.space);
  parse_energy(f.need("energy"), cfg.space, cfg.energy);
  parse_dictionary(f.need("dictionary"), cfg.space, cfg.dictionary);
  if (const Json* g = f.find("greedy")) parse_greedy(*g, cfg.dictionary, cfg.greedy);
  if (const Json* a = f.find("analysis")) parse_analysis(*a, cfg.analysis);
  parse_output(f.need("output"), cfg.output);
  f.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

SpacePtr build_space(const ExperimentConfig& cfg) {
  const auto& s = cfg.space;
  if (s.weights == "unit") return Space::uniform(s.n, s.q, 1.0);
  if (s.weights == "uniform") return Space::uniform(s.n, s.q, 1.0 / static_cast<double>(s.n));
  if (s.weights == "grid") return grid_space(s.n, s.q);
  return Space::create(s.explicit_weights, s.q);
}

EnergyPtr build_energy(const ExperimentConfig& cfg, const SpacePtr& space) {
  const auto& e = cfg.energy;
  Rng rng(e.seed);
  const std::size_t n = space->dim();
  if (e.kind == "power") return power_energy(SpaceVector(space, make_vector(e.target, n, rng)), e.p);
  if (e.kind == "plaplacian")
    return plaplacian_energy(n, e.q_exp, SpaceVector(space, make_vector(e.source, n, rng)));

  Eigen::MatrixXd a;
  const auto ni = static_cast<Eigen::Index>(n);
  if (e.matrix.is_string()) {
    a = e.matrix.get<std::string>() == "identity" ? Eigen::MatrixXd::Identity(ni, ni)
                                                  : dirichlet_laplacian(n);
  } else if (e.matrix.is_object()) {
    const auto d = e.matrix["diagonal"].get<std::vector<double>>();
    a = Eigen::Map<const Eigen::VectorXd>(d.data(), ni).asDiagonal();
  } else {
    a.resize(ni, ni);
    for (Eigen::Index i = 0; i < ni; ++i)
      for (Eigen::Index k = 0; k < ni; ++k)
        a(i, k) = e.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  return quadratic_energy(a, SpaceVector(space, make_vector(e.source, n, rng)));
}

Dictionary build_dictionary(const ExperimentConfig& cfg, const SpacePtr& space) {
  const auto& d = cfg.dictionary;
  const std::size_t n = space->dim();
  if (d.kind == "full-space") return Dictionary::full_space(space);
  if (d.kind == "coordinate-cone") return Dictionary::cone(space, d.params["c"].get<double>());
  if (d.kind == "subspace-union") {
    SubspaceUnionData data;
    if (d.params.contains("blocks")) {
      data = coordinate_blocks(space, d.params["blocks"].get<std::vector<std::vector<std::size_t>>>());
    } else {
      std::vector<Eigen::MatrixXd> bases;
      for (const auto& b : d.params["bases"]) {
        const auto cols = b.get<std::vector<std::vector<double>>>();
        Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c)
          m.col(static_cast<Eigen::Index>(c)) =
              Eigen::Map<const Eigen::VectorXd>(cols[c].data(), static_cast<Eigen::Index>(n));
        bases.push_back(std::move(m));
      }
      data = subspace_bases(space, bases);
    }
    return Dictionary::subspaces(space, std::move(data), cfg.analysis.trials, cfg.analysis.seed);
  }

  const Json& atoms = d.params["atoms"];
  if (atoms.is_string()) return Dictionary::finite_atoms(space, axis_atoms(space));
  if (atoms.is_array())
    return Dictionary::finite_atoms(space,
                                    make_finite_atoms(space, atoms.get<std::vector<std::vector<double>>>()));
  const Json& nn = atoms["neural"];
  std::vector<std::vector<double>> points;
  if (nn["points"].is_object()) {
    const double a = nn["points"]["linspace"][0].get<double>();
    const double b = nn["points"]["linspace"][1].get<double>();
    for (std::size_t i = 0; i < n; ++i)
      points.push_back({n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1)});
  } else {
    points = nn["points"].get<std::vector<std::vector<double>>>();
  }
  std::vector<std::pair<std::vector<double>, double>> params;
  for (const auto& row : nn["params"]) {
    auto v = row.get<std::vector<double>>();
    const double bias = v.back();
    v.pop_back();
    params.emplace_back(std::move(v), bias);
  }
  const Activation act = nn["activation"].get<std::string>() == "tanh" ? Activation::tanh
                                                                       : Activation::sigmoid;
  return Dictionary::finite_atoms(space, build_neural_atoms(space, points, params, act));
}

}  // namespace dictdescent
