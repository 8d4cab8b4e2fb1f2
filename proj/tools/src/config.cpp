#include "fpksl_cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fpksl::cli {

namespace pt = boost::property_tree;

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Oscillator: return "oscillator";
    case Experiment::LotkaVolterra: return "lotka_volterra";
    case Experiment::Mfg: return "mfg";
    case Experiment::Hughes: return "hughes";
    case Experiment::CustomLinear: return "custom_linear";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& s) {
  for (auto e : {Experiment::Oscillator, Experiment::LotkaVolterra, Experiment::Mfg, Experiment::Hughes,
                 Experiment::CustomLinear}) {
    if (to_string(e) == s) return e;
  }
  throw ConfigError("run.experiment: unknown experiment '" + s + "'");
}

int RunConfig::resolved_stride() const { return stride > 0 ? stride : std::max(1, steps / 50); }

std::pair<double, double> RunConfig::averaging_window() const {
  return {average_from >= 0.0 ? average_from : h * std::round(2.0 * steps / 3.0),
          average_to >= 0.0 ? average_to : horizon + h};
}

std::shared_ptr<const Lattice> RunConfig::make_lattice() const {
  try {
    return std::make_shared<const Lattice>(dim, rho, lo, hi, boundary);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("lattice: ") + e.what());
  }
}

namespace {

int steps_for(double horizon, double h, const std::string& key) {
  const double n = horizon / h;
  const double r = std::round(n);
  if (r < 1.0 || std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
    std::ostringstream msg;
    msg << key << ": T / h = " << n << " is not a positive integer";
    throw ConfigError(msg.str());
  }
  return static_cast<int>(r);
}

}  // namespace

RunConfig RunConfig::at_resolution(double new_rho, double new_h) const {
  RunConfig c = *this;
  c.rho = new_rho;
  c.h = new_h;
  c.steps = steps_for(horizon, new_h, "study.ladder");
  c.h = horizon / c.steps;
  return c;
}

RunConfig defaults_for(Experiment e) {
  RunConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::Oscillator:
      c.initial = {"dirac", {1.0, 1.0, 0.0}, 0.0};
      c.ladder = {{0.1, 0.05}, {0.05, 0.025}, {0.025, 0.0125}};
      break;
    case Experiment::LotkaVolterra:
      c.rho = 0.06;
      c.lo = {-1.5, -1.5, 0.0};
      c.hi = {1.5, 1.5, 0.0};
      c.boundary = Boundary::Reflect;
      c.horizon = 10.0;
      c.steps = 21;
      c.h = c.horizon / c.steps;
      c.initial = {"gaussian", {0.4, 0.4, 0.0}, 0.05};
      break;
    case Experiment::Mfg:
    case Experiment::Hughes:
      c.dim = 1;
      c.rho = 0.05;
      c.lo = {-3.0, 0.0, 0.0};
      c.hi = {3.0, 0.0, 0.0};
      c.boundary = Boundary::Reflect;
      c.horizon = 2.0;
      c.h = 0.05;
      c.steps = 40;
      c.crowd.meeting = {Box{{-2.5, 0.0, 0.0}, {-2.0, 0.0, 0.0}}, Box{{1.0, 0.0, 0.0}, {1.5, 0.0, 0.0}}};
      c.initial = {"gaussian", {0.0, 0.0, 0.0}, 0.2};
      break;
    case Experiment::CustomLinear:
      c.dim = 1;
      c.rho = 0.05;
      c.lo = {-3.0, 0.0, 0.0};
      c.hi = {3.0, 0.0, 0.0};
      c.horizon = 1.0;
      c.h = 0.05;
      c.steps = 20;
      c.linear.drift = {-1.0};
      c.linear.offset = {0.0};
      c.linear.diffusion = {Point{0.5, 0.0, 0.0}};
      c.initial = {"gaussian", {0.5, 0.0, 0.0}, 0.1};
      break;
  }
  c.output = "out/" + to_string(e);
  return c;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (seps.find(ch) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Key lookup within one section; remembers which keys were consumed so
/// unknown keys can be reported.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool present() const { return tree_ != nullptr; }
  std::string key(const std::string& k) const { return name_ + "." + k; }

  std::optional<std::string> raw(const std::string& k) {
    allowed_.insert(k);
    if (tree_ == nullptr) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(k, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  void read(const std::string& k, double& out) {
    if (auto v = raw(k)) out = to_double(k, *v);
  }
  void read(const std::string& k, int& out) {
    if (auto v = raw(k)) {
      int x = 0;
      auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
      if (ec != std::errc() || p != v->data() + v->size()) throw ConfigError(key(k) + ": expected an integer, got '" + *v + "'");
      out = x;
    }
  }
  void read(const std::string& k, std::string& out) {
    if (auto v = raw(k)) out = *v;
  }
  std::optional<std::vector<double>> list(const std::string& k) {
    auto v = raw(k);
    if (!v) return std::nullopt;
    std::vector<double> out;
    for (const auto& tok : split(*v, " \t,")) out.push_back(to_double(k, tok));
    return out;
  }
  void read_point(const std::string& k, int dim, Point& out) {
    if (auto v = list(k)) {
      if (static_cast<int>(v->size()) != dim) {
        throw ConfigError(key(k) + ": expected " + std::to_string(dim) + " values, got " + std::to_string(v->size()));
      }
      out = Point{0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a) out[a] = (*v)[a];
    }
  }
  /// Groups separated by ';', numbers within a group by spaces or commas.
  std::optional<std::vector<std::vector<double>>> groups(const std::string& k) {
    auto v = raw(k);
    if (!v) return std::nullopt;
    std::vector<std::vector<double>> out;
    for (const auto& g : split(*v, ";")) {
      std::vector<double> nums;
      for (const auto& tok : split(g, " \t,")) nums.push_back(to_double(k, tok));
      if (!nums.empty()) out.push_back(std::move(nums));
    }
    return out;
  }

  void reject_unknown() const {
    if (tree_ == nullptr) return;
    for (const auto& [k, child] : *tree_) {
      if (!allowed_.count(k)) throw ConfigError(key(k) + ": unknown key");
    }
  }

 private:
  double to_double(const std::string& k, const std::string& s) const {
    double x = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(x)) {
      throw ConfigError(key(k) + ": expected a number, got '" + s + "'");
    }
    return x;
  }

  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> allowed_;
};

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": line " + std::to_string(e.line()) + ": " + e.message());
  }

  std::map<std::string, Section> sections;
  auto section = [&](const std::string& name) -> Section& {
    auto it = sections.find(name);
    if (it == sections.end()) {
      auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
      it = sections.emplace(name, Section(name, child ? &*child : nullptr)).first;
    }
    return it->second;
  };
  for (const auto& [name, child] : tree) {
    if (!child.data().empty()) throw ConfigError(name + ": key outside of any section");
  }

  Section& run = section("run");
  std::string experiment;
  run.read("experiment", experiment);
  check(!experiment.empty(), "run.experiment: missing");
  RunConfig c = defaults_for(experiment_from_string(experiment));
  run.read("output", c.output);
  run.read("stride", c.stride);
  check(c.stride >= 0, "run.stride: must be >= 1 (or 0 for the default)");

  Section& lat = section("lattice");
  lat.read("dim", c.dim);
  check(c.dim >= 1 && c.dim <= kMaxDim, "lattice.dim: must be between 1 and " + std::to_string(kMaxDim));
  lat.read("rho", c.rho);
  check(c.rho > 0.0, "lattice.rho: must be positive");
  lat.read_point("lo", c.dim, c.lo);
  lat.read_point("hi", c.dim, c.hi);
  for (int a = c.dim; a < kMaxDim; ++a) c.lo[a] = c.hi[a] = 0.0;
  if (auto b = lat.raw("boundary")) {
    try {
      c.boundary = boundary_from_string(*b);
    } catch (const InvalidArgument&) {
      throw ConfigError("lattice.boundary: expected truncate or reflect, got '" + *b + "'");
    }
  }
  c.make_lattice();

  Section& time = section("time");
  time.read("T", c.horizon);
  check(c.horizon > 0.0, "time.T: must be positive");
  const bool has_h = time.raw("h").has_value();
  const bool has_n = time.raw("N").has_value();
  if (has_h) {
    time.read("h", c.h);
    check(c.h > 0.0, "time.h: must be positive");
    c.steps = steps_for(c.horizon, c.h, "time.h");
  }
  if (has_n) {
    int n = 0;
    time.read("N", n);
    check(n >= 1, "time.N: must be >= 1");
    if (has_h) check(n == c.steps, "time.N: inconsistent with T / h");
    c.steps = n;
  }
  if (has_h || has_n) {
    c.h = c.horizon / c.steps;
  } else {
    c.steps = steps_for(c.horizon, c.h, "time.h");
  }

  Section& init = section("initial");
  Section& osc = section("oscillator");
  Section& lv = section("lotka_volterra");
  Section& crowd = section(c.experiment == Experiment::Hughes ? "hughes" : "mfg");
  Section& lin = section("linear");
  Section& study = section("study");

  switch (c.experiment) {
    case Experiment::Oscillator: {
      check(c.dim == 2, "lattice.dim: the oscillator is 2-dimensional");
      check(!init.present(), "initial: the oscillator starts from a Dirac at oscillator.x0");
      osc.read("gamma", c.oscillator.gamma);
      osc.read("sigma", c.oscillator.sigma);
      osc.read_point("x0", 2, c.oscillator.x0);
      try {
        c.oscillator.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("oscillator: ") + e.what());
      }
      c.initial = {"dirac", c.oscillator.x0, 0.0};
      break;
    }
    case Experiment::LotkaVolterra: {
      check(c.dim == 2, "lattice.dim: the Lotka-Volterra model is 2-dimensional");
      lv.read("lambda", c.lotka_volterra.lambda);
      lv.read("gamma", c.lotka_volterra.gamma);
      lv.read("substeps", c.lotka_volterra.substeps);
      lv.read("delta", c.lotka_volterra.delta);
      lv.read("average_from", c.average_from);
      lv.read("average_to", c.average_to);
      try {
        c.lotka_volterra.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("lotka_volterra: ") + e.what());
      }
      if (c.lotka_volterra.delta > 0.0) {
        check(std::abs(c.lotka_volterra.delta * c.lotka_volterra.substeps - c.h) <= 1e-12 * c.h,
              "lotka_volterra.delta: h must equal substeps * delta");
      }
      const auto [from, to] = c.averaging_window();
      check(to > from, "lotka_volterra.average_to: must exceed average_from");
      check(to <= c.horizon + c.h * (1.0 + 1e-9), "lotka_volterra.average_to: beyond T + h");
      break;
    }
    case Experiment::Mfg:
    case Experiment::Hughes: {
      auto& s = c.crowd;
      crowd.read("sigma", s.sigma);
      check(s.sigma > 0.0, crowd.key("sigma") + ": must be positive");
      crowd.read("epsilon", s.mollifier.epsilon);
      if (auto k = crowd.raw("kernel")) {
        try {
          s.mollifier.kernel = kernel_from_string(*k);
        } catch (const InvalidArgument&) {
          throw ConfigError(crowd.key("kernel") + ": expected gaussian or bump, got '" + *k + "'");
        }
      }
      crowd.read("kernel_radius", s.mollifier.radius);
      try {
        s.mollifier.validate(c.rho);
      } catch (const InvalidArgument& e) {
        throw ConfigError(crowd.key("epsilon") + ": " + e.what());
      }
      crowd.read("delta", s.delta);
      check(s.delta >= c.rho, crowd.key("delta") + ": must be >= lattice.rho");
      if (auto g = crowd.groups("meeting")) {
        s.meeting.clear();
        for (const auto& nums : *g) {
          check(static_cast<int>(nums.size()) == 2 * c.dim,
                crowd.key("meeting") + ": each box needs " + std::to_string(2 * c.dim) + " numbers (lo then hi)");
          Box b;
          for (int a = 0; a < c.dim; ++a) {
            b.lo[a] = nums[a];
            b.hi[a] = nums[c.dim + a];
          }
          s.meeting.push_back(b);
        }
      }
      crowd.read("a_max", s.control.a_max);
      crowd.read("controls", s.control.points_per_axis);
      crowd.read("refine_passes", s.control.refine_passes);
      try {
        s.control.validate();
        MeetingCostParams{s.meeting, s.delta}.validate(*c.make_lattice());
      } catch (const InvalidArgument& e) {
        throw ConfigError(to_string(c.experiment) + ": " + e.what());
      }
      if (c.experiment == Experiment::Mfg) {
        crowd.read("tol", s.tol);
        crowd.read("max_iters", s.max_iters);
        check(s.tol > 0.0, "mfg.tol: must be positive");
        check(s.max_iters >= 1, "mfg.max_iters: must be >= 1");
      }
      break;
    }
    case Experiment::CustomLinear: {
      auto& l = c.linear;
      if (auto v = lin.list("drift")) l.drift = *v;
      if (auto v = lin.list("offset")) l.offset = *v;
      if (auto g = lin.groups("diffusion")) {
        l.diffusion.clear();
        for (const auto& col : *g) {
          check(static_cast<int>(col.size()) == c.dim,
                "linear.diffusion: each column needs " + std::to_string(c.dim) + " numbers");
          Point p{0.0, 0.0, 0.0};
          for (int a = 0; a < c.dim; ++a) p[a] = col[a];
          l.diffusion.push_back(p);
        }
      }
      check(static_cast<int>(l.drift.size()) == c.dim * c.dim,
            "linear.drift: expected " + std::to_string(c.dim * c.dim) + " numbers (row-major matrix)");
      if (l.offset.empty()) l.offset.assign(c.dim, 0.0);
      check(static_cast<int>(l.offset.size()) == c.dim, "linear.offset: expected " + std::to_string(c.dim) + " numbers");
      check(static_cast<int>(l.diffusion.size()) <= kMaxRank,
            "linear.diffusion: at most " + std::to_string(kMaxRank) + " columns");
      break;
    }
  }

  if (c.experiment != Experiment::Oscillator) {
    init.read("type", c.initial.type);
    init.read_point("center", c.dim, c.initial.center);
    init.read("width", c.initial.width);
    check(c.initial.type == "dirac" || c.initial.type == "gaussian",
          "initial.type: expected dirac or gaussian, got '" + c.initial.type + "'");
    if (c.initial.type == "gaussian") check(c.initial.width > 0.0, "initial.width: must be positive");
    if (c.initial.type == "dirac") {
      check(c.make_lattice()->contains(c.initial.center), "initial.center: Dirac location outside the box");
    }
  }

  if (auto g = study.groups("ladder")) {
    c.ladder.clear();
    for (const auto& pair : *g) {
      check(pair.size() == 2, "study.ladder: entries are 'rho h' pairs separated by ';'");
      check(pair[0] > 0.0 && pair[1] > 0.0, "study.ladder: rho and h must be positive");
      steps_for(c.horizon, pair[1], "study.ladder");
      c.ladder.emplace_back(pair[0], pair[1]);
    }
  }

  // Sections belonging to another experiment are rejected rather than ignored.
  auto owned = [&](const std::string& name) {
    if (name == "run" || name == "lattice" || name == "time" || name == "study" || name == "initial") return true;
    switch (c.experiment) {
      case Experiment::Oscillator: return name == "oscillator";
      case Experiment::LotkaVolterra: return name == "lotka_volterra";
      case Experiment::Mfg: return name == "mfg";
      case Experiment::Hughes: return name == "hughes";
      case Experiment::CustomLinear: return name == "linear";
    }
    return false;
  };
  for (const auto& [name, child] : tree) {
    check(owned(name), name + ": section does not apply to experiment " + to_string(c.experiment));
  }
  for (const auto& [name, child] : tree) {
    if (!sections.count(name)) throw ConfigError(name + ": unknown section");
  }
  for (const auto& [name, s] : sections) s.reject_unknown();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

namespace {

std::string join(const double* v, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += fmt(v[i]);
  }
  return s;
}

}  // namespace

std::string to_ini(const RunConfig& c) {
  std::ostringstream o;
  const int d = c.dim;
  o << "[run]\n"
    << "experiment = " << to_string(c.experiment) << "\n"
    << "output = " << c.output << "\n"
    << "stride = " << c.resolved_stride() << "\n\n";
  o << "[lattice]\n"
    << "dim = " << d << "\n"
    << "rho = " << fmt(c.rho) << "\n"
    << "lo = " << join(c.lo.data(), d) << "\n"
    << "hi = " << join(c.hi.data(), d) << "\n"
    << "boundary = " << to_string(c.boundary) << "\n\n";
  o << "[time]\n"
    << "T = " << fmt(c.horizon) << "\n"
    << "N = " << c.steps << "\n"
    << "# h = " << fmt(c.h) << "\n\n";
  switch (c.experiment) {
    case Experiment::Oscillator:
      o << "[oscillator]\n"
        << "gamma = " << fmt(c.oscillator.gamma) << "\n"
        << "sigma = " << fmt(c.oscillator.sigma) << "\n"
        << "x0 = " << join(c.oscillator.x0.data(), 2) << "\n\n";
      break;
    case Experiment::LotkaVolterra:
      o << "[lotka_volterra]\n"
        << "lambda = " << fmt(c.lotka_volterra.lambda) << "\n"
        << "gamma = " << fmt(c.lotka_volterra.gamma) << "\n"
        << "substeps = " << c.lotka_volterra.substeps << "\n"
        << "delta = " << fmt(c.lotka_volterra.delta > 0.0 ? c.lotka_volterra.delta : c.h / c.lotka_volterra.substeps)
        << "\n"
        << "average_from = " << fmt(c.averaging_window().first) << "\n"
        << "average_to = " << fmt(c.averaging_window().second) << "\n\n";
      break;
    case Experiment::Mfg:
    case Experiment::Hughes: {
      const auto& s = c.crowd;
      o << "[" << to_string(c.experiment) << "]\n"
        << "sigma = " << fmt(s.sigma) << "\n"
        << "epsilon = " << fmt(s.mollifier.epsilon) << "\n"
        << "kernel = " << to_string(s.mollifier.kernel) << "\n"
        << "kernel_radius = " << fmt(s.mollifier.radius) << "\n"
        << "delta = " << fmt(s.delta) << "\n"
        << "meeting = ";
      for (std::size_t i = 0; i < s.meeting.size(); ++i) {
        if (i) o << "; ";
        o << join(s.meeting[i].lo.data(), d) << " " << join(s.meeting[i].hi.data(), d);
      }
      o << "\n"
        << "a_max = " << fmt(s.control.a_max) << "\n"
        << "controls = " << s.control.points_per_axis << "\n"
        << "refine_passes = " << s.control.refine_passes << "\n";
      if (c.experiment == Experiment::Mfg) {
        o << "tol = " << fmt(s.tol) << "\n"
          << "max_iters = " << s.max_iters << "\n";
      }
      o << "\n";
      break;
    }
    case Experiment::CustomLinear: {
      const auto& l = c.linear;
      o << "[linear]\n"
        << "drift = " << join(l.drift.data(), static_cast<int>(l.drift.size())) << "\n"
        << "offset = " << join(l.offset.data(), static_cast<int>(l.offset.size())) << "\n"
        << "diffusion = ";
      for (std::size_t i = 0; i < l.diffusion.size(); ++i) {
        if (i) o << "; ";
        o << join(l.diffusion[i].data(), d);
      }
      o << "\n\n";
      break;
    }
  }
  if (c.experiment != Experiment::Oscillator) {
    o << "[initial]\n"
      << "type = " << c.initial.type << "\n"
      << "center = " << join(c.initial.center.data(), d) << "\n"
      << "width = " << fmt(c.initial.width) << "\n\n";
  }
  if (!c.ladder.empty()) {
    o << "[study]\nladder = ";
    for (std::size_t i = 0; i < c.ladder.size(); ++i) {
      if (i) o << "; ";
      o << fmt(c.ladder[i].first) << " " << fmt(c.ladder[i].second);
    }
    o << "\n";
  }
  return o.str();
}

std::filesystem::path output_directory(const RunConfig& c) {
  std::filesystem::path out(c.output);
  if (out.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
      return std::filesystem::path(root) / out;
    }
  }
  return out;
}

}  // namespace fpksl::cli
