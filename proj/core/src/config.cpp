#include "slowtrack/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "slowtrack/errors.hpp"

namespace slowtrack::config {
namespace {

namespace pt = boost::property_tree;

struct Field {
  const char* section;
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string name(const char* section, const char* key) { return std::string(section) + "." + key; }

template <typename T>
T parse_number(const std::string& raw, const std::string& field) {
  const std::string text = trim(raw);
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw FormatError("config value for " + field + " is not a number: '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& raw, const std::string& field) {
  const std::string text = trim(raw);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw FormatError("config value for " + field + " is not a boolean: '" + text + "'");
}

std::string show(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
std::string show(int v) { return std::to_string(v); }
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }

template <typename T, typename Access>
Field field(const char* section, const char* key, Access access) {
  return Field{
      section, key,
      [access, n = name(section, key)](RunConfig& c, const std::string& raw) {
        if constexpr (std::is_same_v<T, bool>) {
          access(c) = parse_bool(raw, n);
        } else {
          access(c) = parse_number<T>(raw, n);
        }
      },
      [access](const RunConfig& c) { return show(access(const_cast<RunConfig&>(c))); }};
}

template <typename Access>
Field path_field(const char* section, const char* key, Access access) {
  return Field{section, key,
               [access](RunConfig& c, const std::string& raw) { access(c) = trim(raw); },
               [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)).string(); }};
}

const std::vector<Field>& schema() {
  using R = RunConfig;
  static const std::vector<Field> fields = {
      field<double>("dataset", "diff_threshold", [](R& c) -> auto& { return c.dataset.diffThreshold; }),
      field<int>("dataset", "min_component_area", [](R& c) -> auto& { return c.dataset.minComponentArea; }),
      field<int>("dataset", "sessions", [](R& c) -> auto& { return c.tracker.sessions; }),
      field<int>("dataset", "frames_per_session", [](R& c) -> auto& { return c.tracker.framesPerSession; }),
      field<double>("dataset", "max_shift", [](R& c) -> auto& { return c.dataset.maxShift; }),
      field<double>("dataset", "max_rotation_deg", [](R& c) -> auto& { return c.dataset.maxRotationDeg; }),

      field<int>("layer1", "edge", [](R& c) -> auto& { return c.tracker.layer1.edge; }),
      field<int>("layer1", "hidden", [](R& c) -> auto& { return c.tracker.layer1.hidden; }),
      field<double>("layer1", "alpha", [](R& c) -> auto& { return c.tracker.layer1.alpha; }),
      field<double>("layer1", "gamma", [](R& c) -> auto& { return c.tracker.layer1.gamma; }),
      field<int>("layer2", "edge", [](R& c) -> auto& { return c.tracker.layer2.edge; }),
      field<int>("layer2", "hidden", [](R& c) -> auto& { return c.tracker.layer2.hidden; }),
      field<double>("layer2", "alpha", [](R& c) -> auto& { return c.tracker.layer2.alpha; }),
      field<double>("layer2", "gamma", [](R& c) -> auto& { return c.tracker.layer2.gamma; }),

      field<int>("features", "k1", [](R& c) -> auto& { return c.tracker.k1; }),
      field<int>("features", "k2", [](R& c) -> auto& { return c.tracker.k2; }),
      field<double>("features", "eps_l1", [](R& c) -> auto& { return c.tracker.epsL1; }),
      field<double>("features", "eps_pool", [](R& c) -> auto& { return c.tracker.epsPool; }),

      field<int>("optimizer", "max_iter", [](R& c) -> auto& { return c.tracker.optimizer.maxIter; }),
      field<int>("optimizer", "history", [](R& c) -> auto& { return c.tracker.optimizer.history; }),
      field<double>("optimizer", "gradient_tolerance",
                    [](R& c) -> auto& { return c.tracker.optimizer.gradientTolerance; }),
      field<double>("optimizer", "init_std", [](R& c) -> auto& { return c.tracker.initStd; }),

      field<int>("tracker", "particles", [](R& c) -> auto& { return c.tracker.particles; }),
      field<double>("tracker", "q_x", [](R& c) -> auto& { return c.tracker.dynamics.variance[0]; }),
      field<double>("tracker", "q_y", [](R& c) -> auto& { return c.tracker.dynamics.variance[1]; }),
      field<double>("tracker", "q_scale", [](R& c) -> auto& { return c.tracker.dynamics.variance[2]; }),
      field<double>("tracker", "q_aspect", [](R& c) -> auto& { return c.tracker.dynamics.variance[3]; }),
      field<double>("tracker", "likelihood_scale", [](R& c) -> auto& { return c.tracker.likelihoodScale; }),
      field<int>("tracker", "jitter", [](R& c) -> auto& { return c.tracker.jitter; }),
      field<int>("tracker", "first_positives", [](R& c) -> auto& { return c.tracker.firstPositives; }),
      field<double>("tracker", "eta", [](R& c) -> auto& { return c.tracker.eta; }),
      field<double>("tracker", "varphi", [](R& c) -> auto& { return c.tracker.varphi; }),
      field<int>("tracker", "early_frames", [](R& c) -> auto& { return c.tracker.retention.earlyFrames; }),
      field<int>("tracker", "recent_positive", [](R& c) -> auto& { return c.tracker.retention.recentPositive; }),
      field<int>("tracker", "recent_negative", [](R& c) -> auto& { return c.tracker.retention.recentNegative; }),
      field<int>("tracker", "negatives_per_frame",
                 [](R& c) -> auto& { return c.tracker.retention.negativesPerFrame; }),
      field<int>("tracker", "check_every", [](R& c) -> auto& { return c.tracker.schedule.checkEvery; }),
      field<int>("tracker", "early_update_frames", [](R& c) -> auto& { return c.tracker.schedule.earlyFrames; }),
      field<int>("tracker", "stale_frames", [](R& c) -> auto& { return c.tracker.schedule.stale; }),
      field<double>("tracker", "upsilon", [](R& c) -> auto& { return c.tracker.schedule.upsilon; }),
      field<double>("tracker", "lambda", [](R& c) -> auto& { return c.tracker.classifier.lambda; }),
      field<int>("tracker", "classifier_max_iter", [](R& c) -> auto& { return c.tracker.classifier.maxIter; }),
      field<double>("tracker", "classifier_gradient_tolerance",
                    [](R& c) -> auto& { return c.tracker.classifier.gradientTolerance; }),
      field<int>("tracker", "threads", [](R& c) -> auto& { return c.tracker.threads; }),
      field<bool>("tracker", "check_invariants", [](R& c) -> auto& { return c.tracker.checkInvariants; }),

      path_field("paths", "layer1_weights", [](R& c) -> auto& { return c.paths.layer1Weights; }),
      path_field("paths", "layer2_weights", [](R& c) -> auto& { return c.paths.layer2Weights; }),

      field<std::uint64_t>("run", "seed", [](R& c) -> auto& { return c.seed; }),
  };
  return fields;
}

}  // namespace

void RunConfig::validate() const {
  tracker.validate();
  if (!(dataset.diffThreshold > 0.0)) throw InvalidInput("dataset.diff_threshold must be > 0");
  if (dataset.minComponentArea < 1) throw InvalidInput("dataset.min_component_area must be >= 1");
  if (!(dataset.maxShift >= 0.0) || !(dataset.maxRotationDeg >= 0.0)) {
    throw InvalidInput("dataset.max_shift and max_rotation_deg must be >= 0");
  }
}

RunConfig parse(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError("malformed config: " + e.message() + " on line " + std::to_string(e.line()));
  }

  RunConfig config;
  std::set<std::string> sections;
  for (const auto& f : schema()) sections.insert(f.section);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw FormatError("config key outside a section: " + section);
    }
    if (!sections.contains(section)) throw FormatError("unknown config section: " + section);
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto& fields = schema();
      const auto it = std::find_if(fields.begin(), fields.end(),
                                   [&](const Field& f) { return name(f.section, f.key) == full; });
      if (it == fields.end()) throw FormatError("unknown config key: " + full);
      it->set(config, value.data());
    }
  }
  config.validate();
  return config;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::string format(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : schema()) {
    if (section != f.section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(config) << '\n';
  }
  return out.str();
}

std::vector<std::string> keys() {
  std::vector<std::string> out;
  for (const auto& f : schema()) out.push_back(name(f.section, f.key));
  return out;
}

}  // namespace slowtrack::config
