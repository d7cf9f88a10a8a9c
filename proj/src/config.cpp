#include "tangle/config.hpp"

#include "tangle/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace tangle {

std::string_view to_string(GridMode mode) { return mode == GridMode::Full ? "full" : "single"; }
std::string_view to_string(ReturnMode mode) { return mode == ReturnMode::Restore ? "restore" : "redrop"; }

std::vector<TargetConfig> RunConfig::targets() const {
  if (grid == GridMode::Full) return full_grid();
  return {single};
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// Thrown by value parsers; the caller attaches line and key.
struct BadValue {
  std::string what;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) throw BadValue{"expected a number"};
  return v;
}

template <typename Int>
Int to_int(std::string_view s) {
  Int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw BadValue{"expected an integer"};
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw BadValue{"expected true or false"};
}

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(std::string_view)> set;
};

Field real(std::string key, double& x) {
  return {std::move(key), [&x] { return fmt(x); }, [&x](std::string_view s) { x = to_double(s); }};
}

template <typename Int>
Field integer(std::string key, Int& x) {
  return {std::move(key), [&x] { return std::to_string(x); }, [&x](std::string_view s) { x = to_int<Int>(s); }};
}

Field boolean(std::string key, bool& x) {
  return {std::move(key), [&x] { return std::string(x ? "true" : "false"); },
          [&x](std::string_view s) { x = to_bool(s); }};
}

template <typename Wrap>
auto wrap_errors(Wrap&& f) {
  return [f = std::forward<Wrap>(f)](std::string_view s) {
    try {
      f(s);
    } catch (const Error& e) {
      throw BadValue{e.what()};
    }
  };
}

std::vector<Field> fields(RunConfig& c) {
  StudySpec& st = c.study;
  SimParams& p = st.params;
  std::vector<Field> f;
  f.push_back(integer("seed", c.seed));
  f.push_back({"grid", [&c] { return std::string(to_string(c.grid)); }, [&c](std::string_view s) {
                 if (s == "full") c.grid = GridMode::Full;
                 else if (s == "single") c.grid = GridMode::Single;
                 else throw BadValue{"expected full or single"};
               }});
  f.push_back(real("target.tau_mm", c.single.tau));
  f.push_back(real("target.lambda_mm", c.single.lambda));
  f.push_back(integer("target.spikes", c.single.spikes));

  f.push_back({"protocol", [&st] { return std::string(to_string(st.protocol)); },
               wrap_errors([&st](std::string_view s) { st.protocol = parse_protocol(s); })});
  f.push_back({"return_mode", [&st] { return std::string(to_string(st.return_mode)); }, [&st](std::string_view s) {
                 if (s == "restore") st.return_mode = ReturnMode::Restore;
                 else if (s == "redrop") st.return_mode = ReturnMode::Redrop;
                 else throw BadValue{"expected restore or redrop"};
               }});
  f.push_back(integer("iterations", st.iterations));
  f.push_back(integer("grain_count", st.grain_count));
  f.push_back(integer("units", st.units));
  f.push_back(integer("bed_relax_steps", st.bed_relax_steps));
  f.push_back(integer("bed_settle_steps", st.bed_settle_steps));
  f.push_back(integer("return_relax_steps", st.return_relax_steps));
  f.push_back(integer("return_settle_steps", st.return_settle_steps));

  f.push_back(real("magnet.face_diameter_mm", st.magnet.face_diameter));
  f.push_back(real("magnet.capture_gap_mm", st.magnet.capture_gap));
  f.push_back(real("magnet.max_pull_n", st.magnet.max_pull));
  f.push_back(real("gripper.jaw_width_mm", st.gripper.jaw_width));
  f.push_back(real("gripper.jaw_depth_mm", st.gripper.jaw_depth));
  f.push_back(real("gripper.closing_stroke_mm", st.gripper.closing_stroke));
  f.push_back(real("gripper.finger_length_mm", st.gripper.finger_length));

  f.push_back({"supply.type", [&st] { return std::string(to_string(st.supply.type)); },
               wrap_errors([&st](std::string_view s) { st.supply.type = parse_grain_type(s); })});
  f.push_back(real("supply.density_gcc", st.supply.density_gcc));
  f.push_back(integer("supply.relax_steps", st.supply.relax_steps));
  f.push_back(integer("supply.settle_steps", st.supply.settle_steps));
  f.push_back(real("supply.settle_reach_mm", st.supply.settle_reach));

  f.push_back(real("link.d0_mm", st.link_model.d0));
  f.push_back({"link.constant",
               [&st] { return st.link_model.constant ? fmt(*st.link_model.constant) : std::string("none"); },
               [&st](std::string_view s) {
                 if (s == "none") st.link_model.constant.reset();
                 else st.link_model.constant = to_double(s);
               }});

  f.push_back(real("sim.dt_s", p.dt));
  f.push_back(real("sim.contact_stiffness", p.contact_stiffness));
  f.push_back(real("sim.contact_damping", p.contact_damping));
  f.push_back(real("sim.tangential_ratio", p.tangential_ratio));
  f.push_back(real("sim.friction", p.friction));
  f.push_back(real("sim.local_damping", p.local_damping));
  f.push_back(real("sim.rolling_friction", p.rolling_friction));
  f.push_back(real("sim.joint_stiffness", p.joint_stiffness));
  f.push_back(real("sim.settle_ke_threshold", p.settle_ke_threshold));
  f.push_back(integer("sim.max_steps", p.max_steps));
  f.push_back(integer("sim.settle_window", p.settle_window));
  f.push_back(real("sim.penetration_tol_mm", p.penetration_tol));
  f.push_back(real("sim.max_speed", p.max_speed));
  f.push_back(real("sim.min_inertial_mass_g", p.min_inertial_mass));

  f.push_back({"pack.types",
               [&c] {
                 std::string s;
                 for (GrainType t : c.grain_types) s += (s.empty() ? "" : ",") + std::string(to_string(t));
                 return s;
               },
               wrap_errors([&c](std::string_view s) {
                 std::vector<GrainType> out;
                 while (!s.empty()) {
                   const auto comma = s.find(',');
                   std::string_view tok = s.substr(0, comma);
                   while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
                   while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
                   out.push_back(parse_grain_type(tok));
                   s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
                 }
                 if (out.empty()) throw BadValue{"empty type list"};
                 c.grain_types = out;
               })});
  f.push_back(integer("pack.segments", c.segments));
  f.push_back(real("pack.density_gcc", c.grain_density_gcc));
  f.push_back(integer("integrity.seeds", c.integrity_seeds));
  f.push_back(boolean("integrity.shake", c.shake));
  f.push_back(real("shake.duration_s", c.shake_spec.duration));
  f.push_back(real("shake.amplitude_mm", c.shake_spec.amplitude));
  f.push_back(real("shake.frequency_hz", c.shake_spec.frequency));
  f.push_back(real("removal.lift_speed_mm_s", c.removal.lift_speed));
  f.push_back(real("removal.clearance_mm", c.removal.clearance));

  f.push_back(integer("fit.grid_theta1", c.fit.grid_theta1));
  f.push_back(real("fit.theta1_min", c.fit.theta1_min));
  f.push_back(real("fit.theta1_max", c.fit.theta1_max));
  f.push_back(integer("fit.grid_theta2", c.fit.grid_theta2));
  f.push_back(real("fit.theta2_min", c.fit.theta2_min));
  f.push_back(real("fit.theta2_max", c.fit.theta2_max));
  f.push_back(real("fit.train_fraction", c.fit.train_fraction));
  f.push_back(integer("fit.polish_iterations", c.fit.polish_iterations));
  f.push_back(real("fit.sigma", c.fit.sigma));
  return f;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

RunConfig parse_config(std::istream& is) {
  RunConfig c;
  std::vector<Field> table = fields(c);
  std::set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string_view s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line, std::string(s), "expected key = value");
    const std::string key(trim(s.substr(0, eq)));
    const std::string_view value = trim(s.substr(eq + 1));
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw ConfigError(line, key, "unknown key");
    if (!seen.insert(key).second) throw ConfigError(line, key, "repeated key");
    try {
      it->set(value);
    } catch (const BadValue& e) {
      throw ConfigError(line, key, e.what + " (got '" + std::string(value) + "')");
    }
  }
  try {
    c.study.magnet.validate();
    c.study.gripper.validate();
    if (c.study.iterations < 1) throw InvalidArgument("config", "iterations must be at least 1");
    if (c.study.grain_count < 0) throw InvalidArgument("config", "grain_count must be non-negative");
    if (c.study.units < 1) throw InvalidArgument("config", "units must be at least 1");
    if (c.segments < 1) throw InvalidArgument("config", "pack.segments must be at least 1");
    if (c.integrity_seeds < 1) throw InvalidArgument("config", "integrity.seeds must be at least 1");
    if (!(c.study.params.dt > 0.0)) throw InvalidArgument("config", "sim.dt_s must be positive");
    if (!(c.study.link_model.d0 > 0.0)) throw InvalidArgument("config", "link.d0_mm must be positive");
  } catch (const Error& e) {
    throw ConfigError(0, "-", e.what());
  }
  return c;
}

RunConfig parse_config(std::string_view text) {
  std::istringstream is{std::string(text)};
  return parse_config(is);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "-", "cannot open " + path.string());
  return parse_config(in);
}

std::string to_text(const RunConfig& config) {
  RunConfig copy = config;
  std::string out;
  for (const Field& f : fields(copy)) out += f.key + " = " + f.get() + "\n";
  return out;
}

}  // namespace tangle
