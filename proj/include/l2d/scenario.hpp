// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario files (YAML), seeded debris sampling and breakup fragments.
// See docs/scenario-format.md for the schema.

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "l2d/astro.hpp"
#include "l2d/errors.hpp"
#include "l2d/grid.hpp"
#include "l2d/pla.hpp"
#include "l2d/rhs.hpp"
#include "l2d/teg.hpp"

namespace l2d {

enum class Conops { kBaseline, kPlaneChange, kAltitudeChange };

inline const char* to_string(Conops c) {
  switch (c) {
    case Conops::kBaseline: return "baseline";
    case Conops::kPlaneChange: return "plane_change";
    case Conops::kAltitudeChange: return "altitude_change";
  }
  return "?";
}

inline std::optional<Conops> parse_conops(const std::string& s) {
  if (s == "baseline") return Conops::kBaseline;
  if (s == "plane_change") return Conops::kPlaneChange;
  if (s == "altitude_change") return Conops::kAltitudeChange;
  return std::nullopt;
}

struct ConopsConfig {
  Conops kind = Conops::kBaseline;
  int phases = 36;
  int planes = 5;
  int layers = 7;
  double layer_step_km = 50;
  LayerDirection layer_direction = LayerDirection::kSymmetric;
  double beta = 0.8;
  RaanRule raan_rule = RaanRule::kSphericalTrig;
};

struct AltitudeBin {
  double low_km = 0;
  double high_km = 0;
  double frequency = 0;
};

struct DebrisPopulationSpec {
  int count = 0;
  std::vector<AltitudeBin> altitude_bins;
  double inclination_min_deg = 0;
  double inclination_max_deg = 180;
  int inclination_steps = 181;
  int raan_steps = 360;
  int arg_lat_steps = 360;
  double surface_density = 0.2;  // kg/m^2
};

struct BreakupEvent {
  KeplerianElements parent;
  double trigger_seconds = 0;
  int fragments = 0;
  double max_sma_deviation_km = 0;
  double max_angle_deviation_deg = 0;
  double surface_density = 0.2;
};

struct ActiveSpacecraftConfig {
  std::string id;
  KeplerianElements elements;
  Vec3 ellipsoid_km{1, 1, 1};
};

struct EngagementConfig {
  double r_deorbit_km = 6578.137;
  double grazing_altitude_km = 100;
  double alpha = 1e6;
  int k_max = 3;
  int node_cap = 50000;
  OverflowPolicy overflow = OverflowPolicy::kTruncate;
  bool strict_consistency = true;
  double time_limit_s = 0;  // 0: unlimited, per window
};

enum class SweepAxis { kWindowLength, kBudget };

struct SweepConfig {
  SweepAxis axis = SweepAxis::kWindowLength;
  std::vector<double> values;
  std::vector<Conops> conops;
};

struct ScenarioConfig {
  std::string name;
  std::string epoch = "2025-08-01T12:00:00.000Z";
  int steps = 0;
  double step_seconds = 180;
  LaserSystem laser;
  std::vector<KeplerianElements> platforms;
  ConopsConfig conops;
  double budget_km_s = 0;
  int window_length = 3;
  std::optional<DebrisPopulationSpec> population;
  std::optional<BreakupEvent> breakup;
  EngagementConfig engagement;
  std::vector<ActiveSpacecraftConfig> active;
  std::optional<SweepConfig> sweep;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Seeded substreams.

enum class Substream : std::uint32_t { kPopulation = 1, kBreakup = 2 };

class Rng {
 public:
  Rng(std::uint64_t seed, Substream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    gen_.seed(seq);
  }
  // Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  // Uniform integer in [0, n).
  int index(int n) { return std::min(n - 1, static_cast<int>(uniform() * n)); }

 private:
  std::mt19937_64 gen_;
};

inline void validate(const DebrisPopulationSpec& spec, const EarthConstants& earth = {}) {
  if (spec.count <= 0) throw ConfigError("debris.population.count", "must be > 0");
  if (spec.altitude_bins.empty()) throw ConfigError("debris.population.altitude_bins", "empty histogram");
  double total = 0;
  for (size_t i = 0; i < spec.altitude_bins.size(); ++i) {
    const auto& b = spec.altitude_bins[i];
    const std::string field = fmt::format("debris.population.altitude_bins[{}]", i);
    if (!(b.low_km <= b.high_km)) throw ConfigError(field, "low must not exceed high");
    if (!(b.frequency >= 0)) throw ConfigError(field, "frequency must be >= 0");
    if (!(earth.radius + b.low_km > earth.grazing_radius()))
      throw ConfigError(field, "altitude must exceed the grazing altitude");
    total += b.frequency;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("debris.population.altitude_bins", "frequencies must sum to 1");
  if (!(spec.inclination_min_deg >= 0 && spec.inclination_min_deg <= spec.inclination_max_deg &&
        spec.inclination_max_deg <= 180))
    throw ConfigError("debris.population.inclination_range_deg", "need 0 <= min <= max <= 180");
  if (spec.inclination_steps < 1) throw ConfigError("debris.population.inclination_steps", "must be >= 1");
  if (spec.raan_steps < 1) throw ConfigError("debris.population.raan_steps", "must be >= 1");
  if (spec.arg_lat_steps < 1) throw ConfigError("debris.population.arg_lat_steps", "must be >= 1");
  if (!(spec.surface_density > 0))
    throw ConfigError("debris.population.surface_density_kg_m2", "must be > 0");
}

// Circular debris: altitude by inverse CDF over the histogram (uniform inside
// the chosen bin), angles from the uniform grids.
inline std::vector<DebrisBody> sample_debris_population(const DebrisPopulationSpec& spec,
                                                        std::uint64_t seed,
                                                        const EarthConstants& earth = {}) {
  validate(spec, earth);
  Rng rng(seed, Substream::kPopulation);
  std::vector<double> cdf;
  double acc = 0;
  for (const auto& b : spec.altitude_bins) cdf.push_back(acc += b.frequency);
  std::vector<DebrisBody> out;
  for (int d = 0; d < spec.count; ++d) {
    const double u = rng.uniform() * acc;
    size_t bin = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    bin = std::min(bin, cdf.size() - 1);
    const auto& b = spec.altitude_bins[bin];
    KeplerianElements el;
    el.semi_major_axis = earth.radius + rng.uniform(b.low_km, b.high_km);
    el.eccentricity = 0;
    const int ni = spec.inclination_steps;
    const int i_idx = rng.index(ni);
    el.inclination = ni == 1 ? spec.inclination_min_deg
                             : spec.inclination_min_deg + (spec.inclination_max_deg -
                                                           spec.inclination_min_deg) *
                                                              i_idx / (ni - 1);
    el.raan = 360.0 * rng.index(spec.raan_steps) / spec.raan_steps;
    el.argument_of_latitude = 360.0 * rng.index(spec.arg_lat_steps) / spec.arg_lat_steps;
    DebrisBody body;
    body.id = d;
    body.surface_density = spec.surface_density;
    body.appear_step = 0;
    body.state_at_appearance = astro::elements_to_state(el, earth);
    out.push_back(body);
  }
  return out;
}

struct Fragment {
  KeplerianElements elements;  // at the trigger time
  DebrisBody body;
};

// Fragments scattered uniformly around the parent's elements at the trigger
// time. They enter the mission at the first step at or after the trigger.
inline std::vector<Fragment> generate_breakup(const BreakupEvent& event, std::uint64_t seed,
                                              double step_seconds, int first_id = 0,
                                              const EarthConstants& earth = {}) {
  if (event.fragments < 0) throw ConfigError("debris.breakup.fragments", "must be >= 0");
  if (!(event.max_sma_deviation_km >= 0) || !(event.max_angle_deviation_deg >= 0))
    throw ConfigError("debris.breakup", "deviations must be >= 0");
  if (!(event.trigger_seconds >= 0)) throw ConfigError("debris.breakup.trigger_s", "must be >= 0");
  Rng rng(seed, Substream::kBreakup);
  const StateVector parent_now = astro::propagate_two_body(
      astro::elements_to_state(event.parent, earth), event.trigger_seconds, earth);
  const KeplerianElements at_trigger = astro::state_to_elements(parent_now, earth);
  const int appear = static_cast<int>(std::ceil(event.trigger_seconds / step_seconds - 1e-12));
  const double wait = appear * step_seconds - event.trigger_seconds;
  std::vector<Fragment> out;
  const double da = event.max_sma_deviation_km, dq = event.max_angle_deviation_deg;
  for (int f = 0; f < event.fragments; ++f) {
    KeplerianElements el = at_trigger;
    el.eccentricity = 0;
    el.arg_perigee = 0;
    el.semi_major_axis += rng.uniform(-da, da);
    el.inclination = std::clamp(el.inclination + rng.uniform(-dq, dq), 0.0, 180.0);
    el.raan = astro::wrap_deg(el.raan + rng.uniform(-dq, dq));
    el.argument_of_latitude = astro::wrap_deg(el.argument_of_latitude + rng.uniform(-dq, dq));
    Fragment frag;
    frag.elements = el;
    frag.body.id = first_id + f;
    frag.body.surface_density = event.surface_density;
    frag.body.appear_step = appear;
    frag.body.state_at_appearance =
        astro::propagate_two_body(astro::elements_to_state(el, earth), wait, earth);
    out.push_back(frag);
  }
  return out;
}

// ---------------------------------------------------------------------------
// YAML reading with strict key checking.

namespace detail {

inline void check_keys(const YAML::Node& node, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ConfigError(path.empty() ? "<root>" : path, "expected a mapping");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!ok.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
  }
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

template <typename T>
T get(const YAML::Node& node, const std::string& path, const char* key) {
  const YAML::Node v = node[key];
  if (!v) throw ConfigError(join(path, key), "required field missing");
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(join(path, key), "wrong type");
  }
}

template <typename T>
T get_or(const YAML::Node& node, const std::string& path, const char* key, T fallback) {
  if (!node[key]) return fallback;
  return get<T>(node, path, key);
}

inline void positive(double v, const std::string& field) {
  if (!(v > 0)) throw ConfigError(field, "must be > 0");
}

inline KeplerianElements read_elements(const YAML::Node& n, const std::string& path) {
  check_keys(n, path, {"sma_km", "eccentricity", "inclination_deg", "raan_deg", "arg_lat_deg"});
  KeplerianElements el;
  el.semi_major_axis = get<double>(n, path, "sma_km");
  el.eccentricity = get_or<double>(n, path, "eccentricity", 0.0);
  el.inclination = get<double>(n, path, "inclination_deg");
  el.raan = get_or<double>(n, path, "raan_deg", 0.0);
  el.argument_of_latitude = get_or<double>(n, path, "arg_lat_deg", 0.0);
  positive(el.semi_major_axis, join(path, "sma_km"));
  if (!(el.eccentricity >= 0 && el.eccentricity < 1))
    throw ConfigError(join(path, "eccentricity"), "must lie in [0, 1)");
  if (!(el.inclination >= 0 && el.inclination <= 180))
    throw ConfigError(join(path, "inclination_deg"), "must lie in [0, 180]");
  if (!(el.raan >= 0 && el.raan < 360)) throw ConfigError(join(path, "raan_deg"), "must lie in [0, 360)");
  if (!(el.argument_of_latitude >= 0 && el.argument_of_latitude < 360))
    throw ConfigError(join(path, "arg_lat_deg"), "must lie in [0, 360)");
  return el;
}

}  // namespace detail

inline void validate(const ScenarioConfig& c);

inline ScenarioConfig parse_scenario(const YAML::Node& root) {
  using namespace detail;
  if (!root || root.IsNull()) throw ConfigError("<root>", "empty scenario file");
  check_keys(root, "", {"name", "epoch", "horizon", "laser", "platforms", "conops", "budget_km_s",
                        "rhs", "debris", "engagement", "active_spacecraft", "sweep", "seed"});
  ScenarioConfig c;
  c.name = get<std::string>(root, "", "name");
  c.epoch = get_or<std::string>(root, "", "epoch", c.epoch);
  {
    const YAML::Node h = root["horizon"];
    if (!h) throw ConfigError("horizon", "required field missing");
    check_keys(h, "horizon", {"steps", "step_s"});
    c.steps = get<int>(h, "horizon", "steps");
    c.step_seconds = get_or<double>(h, "horizon", "step_s", c.step_seconds);
  }
  if (const YAML::Node l = root["laser"]) {
    check_keys(l, "laser", {"u_max_km", "u_min_km", "mirror_diameter_m", "beam_quality",
                            "diffraction_constant", "wavelength_nm", "coupling_n_per_mw",
                            "pulse_energy_j", "efficiency", "eta1", "eta2", "pulses_per_step"});
    auto& L = c.laser;
    L.u_max = get_or<double>(l, "laser", "u_max_km", L.u_max);
    L.u_min = get_or<double>(l, "laser", "u_min_km", L.u_min);
    L.mirror_diameter = get_or<double>(l, "laser", "mirror_diameter_m", L.mirror_diameter);
    L.beam_quality = get_or<double>(l, "laser", "beam_quality", L.beam_quality);
    L.diffraction_constant = get_or<double>(l, "laser", "diffraction_constant", L.diffraction_constant);
    if (l["wavelength_nm"]) L.wavelength = get<double>(l, "laser", "wavelength_nm") / 1e9;
    L.coupling = get_or<double>(l, "laser", "coupling_n_per_mw", L.coupling);
    L.pulse_energy = get_or<double>(l, "laser", "pulse_energy_j", L.pulse_energy);
    const double eta = get_or<double>(l, "laser", "efficiency", L.eta1);
    L.eta1 = get_or<double>(l, "laser", "eta1", eta);
    L.eta2 = get_or<double>(l, "laser", "eta2", eta);
    L.pulses_per_step = get_or<int>(l, "laser", "pulses_per_step", L.pulses_per_step);
  }
  {
    const YAML::Node ps = root["platforms"];
    if (!ps || !ps.IsSequence() || ps.size() == 0)
      throw ConfigError("platforms", "need a nonempty list of platform orbits");
    for (size_t i = 0; i < ps.size(); ++i)
      c.platforms.push_back(read_elements(ps[i], fmt::format("platforms[{}]", i)));
  }
  if (const YAML::Node k = root["conops"]) {
    check_keys(k, "conops", {"kind", "phases", "planes", "layers", "layer_step_km",
                             "layer_direction", "beta", "raan_rule"});
    auto& K = c.conops;
    const auto kind = get_or<std::string>(k, "conops", "kind", "baseline");
    const auto parsed = parse_conops(kind);
    if (!parsed) throw ConfigError("conops.kind", "expected baseline, plane_change or altitude_change");
    K.kind = *parsed;
    K.phases = get_or<int>(k, "conops", "phases", K.phases);
    K.planes = get_or<int>(k, "conops", "planes", K.planes);
    K.layers = get_or<int>(k, "conops", "layers", K.layers);
    K.layer_step_km = get_or<double>(k, "conops", "layer_step_km", K.layer_step_km);
    const auto dir = get_or<std::string>(k, "conops", "layer_direction", "symmetric");
    if (dir == "symmetric") K.layer_direction = LayerDirection::kSymmetric;
    else if (dir == "up") K.layer_direction = LayerDirection::kUp;
    else if (dir == "down") K.layer_direction = LayerDirection::kDown;
    else throw ConfigError("conops.layer_direction", "expected symmetric, up or down");
    K.beta = get_or<double>(k, "conops", "beta", K.beta);
    const auto rule = get_or<std::string>(k, "conops", "raan_rule", "spherical");
    if (rule == "spherical") K.raan_rule = RaanRule::kSphericalTrig;
    else if (rule == "verbatim") K.raan_rule = RaanRule::kVerbatim;
    else throw ConfigError("conops.raan_rule", "expected spherical or verbatim");
  }
  c.budget_km_s = get_or<double>(root, "", "budget_km_s", 0.0);
  if (const YAML::Node r = root["rhs"]) {
    check_keys(r, "rhs", {"window_length"});
    c.window_length = get_or<int>(r, "rhs", "window_length", c.window_length);
  }
  if (const YAML::Node d = root["debris"]) {
    check_keys(d, "debris", {"population", "breakup"});
    if (const YAML::Node p = d["population"]) {
      const std::string path = "debris.population";
      check_keys(p, path, {"count", "altitude_bins", "inclination_range_deg", "inclination_steps",
                           "raan_steps", "arg_lat_steps", "surface_density_kg_m2"});
      DebrisPopulationSpec s;
      s.count = get<int>(p, path, "count");
      const YAML::Node bins = p["altitude_bins"];
      if (!bins || !bins.IsSequence()) throw ConfigError(join(path, "altitude_bins"), "need a list");
      for (size_t i = 0; i < bins.size(); ++i) {
        const std::string bp = fmt::format("{}.altitude_bins[{}]", path, i);
        check_keys(bins[i], bp, {"low_km", "high_km", "frequency"});
        s.altitude_bins.push_back({get<double>(bins[i], bp, "low_km"),
                                   get<double>(bins[i], bp, "high_km"),
                                   get<double>(bins[i], bp, "frequency")});
      }
      if (const YAML::Node inc = p["inclination_range_deg"]) {
        if (!inc.IsSequence() || inc.size() != 2)
          throw ConfigError(join(path, "inclination_range_deg"), "need [min, max]");
        s.inclination_min_deg = inc[0].as<double>();
        s.inclination_max_deg = inc[1].as<double>();
      }
      s.inclination_steps = get_or<int>(p, path, "inclination_steps", s.inclination_steps);
      s.raan_steps = get_or<int>(p, path, "raan_steps", s.raan_steps);
      s.arg_lat_steps = get_or<int>(p, path, "arg_lat_steps", s.arg_lat_steps);
      s.surface_density = get_or<double>(p, path, "surface_density_kg_m2", s.surface_density);
      c.population = s;
    }
    if (const YAML::Node b = d["breakup"]) {
      const std::string path = "debris.breakup";
      check_keys(b, path, {"parent", "trigger_s", "fragments", "max_sma_deviation_km",
                           "max_angle_deviation_deg", "surface_density_kg_m2"});
      BreakupEvent e;
      if (!b["parent"]) throw ConfigError(join(path, "parent"), "required field missing");
      e.parent = read_elements(b["parent"], join(path, "parent"));
      e.trigger_seconds = get<double>(b, path, "trigger_s");
      e.fragments = get<int>(b, path, "fragments");
      e.max_sma_deviation_km = get_or<double>(b, path, "max_sma_deviation_km", 0.0);
      e.max_angle_deviation_deg = get_or<double>(b, path, "max_angle_deviation_deg", 0.0);
      e.surface_density = get_or<double>(b, path, "surface_density_kg_m2", e.surface_density);
      c.breakup = e;
    }
  }
  if (const YAML::Node e = root["engagement"]) {
    check_keys(e, "engagement", {"r_deorbit_km", "grazing_altitude_km", "alpha", "k_max",
                                 "node_cap", "overflow", "strict_consistency", "time_limit_s"});
    auto& E = c.engagement;
    E.r_deorbit_km = get_or<double>(e, "engagement", "r_deorbit_km", E.r_deorbit_km);
    E.grazing_altitude_km = get_or<double>(e, "engagement", "grazing_altitude_km", E.grazing_altitude_km);
    E.alpha = get_or<double>(e, "engagement", "alpha", E.alpha);
    E.k_max = get_or<int>(e, "engagement", "k_max", E.k_max);
    E.node_cap = get_or<int>(e, "engagement", "node_cap", E.node_cap);
    const auto ov = get_or<std::string>(e, "engagement", "overflow", "truncate");
    if (ov == "truncate") E.overflow = OverflowPolicy::kTruncate;
    else if (ov == "error") E.overflow = OverflowPolicy::kError;
    else throw ConfigError("engagement.overflow", "expected truncate or error");
    E.strict_consistency = get_or<bool>(e, "engagement", "strict_consistency", E.strict_consistency);
    E.time_limit_s = get_or<double>(e, "engagement", "time_limit_s", E.time_limit_s);
  }
  if (const YAML::Node a = root["active_spacecraft"]) {
    if (!a.IsSequence()) throw ConfigError("active_spacecraft", "need a list");
    for (size_t i = 0; i < a.size(); ++i) {
      const std::string path = fmt::format("active_spacecraft[{}]", i);
      check_keys(a[i], path, {"id", "elements", "ellipsoid_km"});
      ActiveSpacecraftConfig s;
      s.id = get<std::string>(a[i], path, "id");
      if (!a[i]["elements"]) throw ConfigError(join(path, "elements"), "required field missing");
      s.elements = read_elements(a[i]["elements"], join(path, "elements"));
      const YAML::Node ax = a[i]["ellipsoid_km"];
      if (!ax || !ax.IsSequence() || ax.size() != 3)
        throw ConfigError(join(path, "ellipsoid_km"), "need [radial, along_track, cross_track]");
      s.ellipsoid_km = {ax[0].as<double>(), ax[1].as<double>(), ax[2].as<double>()};
      c.active.push_back(s);
    }
  }
  if (const YAML::Node s = root["sweep"]) {
    check_keys(s, "sweep", {"axis", "values", "conops"});
    SweepConfig sw;
    const auto axis = get<std::string>(s, "sweep", "axis");
    if (axis == "window_length") sw.axis = SweepAxis::kWindowLength;
    else if (axis == "budget") sw.axis = SweepAxis::kBudget;
    else throw ConfigError("sweep.axis", "expected window_length or budget");
    sw.values = get<std::vector<double>>(s, "sweep", "values");
    for (const auto& name : get_or<std::vector<std::string>>(
             s, "sweep", "conops", {"baseline", "plane_change", "altitude_change"})) {
      const auto k = parse_conops(name);
      if (!k) throw ConfigError("sweep.conops", "unknown CONOPS '" + name + "'");
      sw.conops.push_back(*k);
    }
    c.sweep = sw;
  }
  if (!root["seed"]) throw ConfigError("seed", "required field missing");
  c.seed = get<std::uint64_t>(root, "", "seed");
  validate(c);
  return c;
}

inline void validate(const ScenarioConfig& c) {
  using detail::positive;
  if (c.name.empty()) throw ConfigError("name", "must not be empty");
  if (c.steps < 3) throw ConfigError("horizon.steps", "must be >= 3");
  positive(c.step_seconds, "horizon.step_s");
  const auto& L = c.laser;
  positive(L.u_min, "laser.u_min_km");
  positive(L.u_max, "laser.u_max_km");
  if (!(L.u_min < L.u_max)) throw ConfigError("laser.u_min_km", "must be below laser.u_max_km");
  positive(L.mirror_diameter, "laser.mirror_diameter_m");
  positive(L.beam_quality, "laser.beam_quality");
  positive(L.diffraction_constant, "laser.diffraction_constant");
  positive(L.wavelength, "laser.wavelength_nm");
  positive(L.coupling, "laser.coupling_n_per_mw");
  positive(L.pulse_energy, "laser.pulse_energy_j");
  if (!(L.eta1 > 0 && L.eta1 <= 1)) throw ConfigError("laser.eta1", "must lie in (0, 1]");
  if (!(L.eta2 > 0 && L.eta2 <= 1)) throw ConfigError("laser.eta2", "must lie in (0, 1]");
  if (L.pulses_per_step <= 0) throw ConfigError("laser.pulses_per_step", "must be > 0");
  EarthConstants earth;
  earth.grazing_altitude = c.engagement.grazing_altitude_km;
  positive(earth.grazing_altitude, "engagement.grazing_altitude_km");
  for (size_t i = 0; i < c.platforms.size(); ++i)
    if (!(c.platforms[i].semi_major_axis * (1 - c.platforms[i].eccentricity) > earth.grazing_radius()))
      throw ConfigError(fmt::format("platforms[{}].sma_km", i), "periapsis below the grazing altitude");
  const auto& K = c.conops;
  if (K.phases < 1) throw ConfigError("conops.phases", "must be >= 1");
  if (K.planes < 1 || K.planes % 2 == 0) throw ConfigError("conops.planes", "must be a positive odd count");
  if (K.layers < 1) throw ConfigError("conops.layers", "must be >= 1");
  if (K.layer_direction == LayerDirection::kSymmetric && K.layers % 2 == 0)
    throw ConfigError("conops.layers", "must be odd for symmetric layering");
  if (K.layers > 1) positive(K.layer_step_km, "conops.layer_step_km");
  if (!(K.beta > 0 && K.beta <= 1)) throw ConfigError("conops.beta", "must lie in (0, 1]");
  if (!(c.budget_km_s >= 0)) throw ConfigError("budget_km_s", "must be >= 0");
  if (c.window_length < 2 || c.window_length > c.steps - 1)
    throw ConfigError("rhs.window_length", "must satisfy 2 <= L <= steps - 1");
  if (!c.population && !c.breakup) throw ConfigError("debris", "need a population or a breakup event");
  if (c.population) validate(*c.population, earth);
  if (c.breakup) {
    const auto& b = *c.breakup;
    if (b.fragments <= 0) throw ConfigError("debris.breakup.fragments", "must be > 0");
    if (!(b.trigger_seconds >= 0 && b.trigger_seconds < c.steps * c.step_seconds))
      throw ConfigError("debris.breakup.trigger_s", "must fall inside the horizon");
    if (!(b.max_sma_deviation_km >= 0)) throw ConfigError("debris.breakup.max_sma_deviation_km", "must be >= 0");
    if (!(b.max_angle_deviation_deg >= 0))
      throw ConfigError("debris.breakup.max_angle_deviation_deg", "must be >= 0");
    positive(b.surface_density, "debris.breakup.surface_density_kg_m2");
  }
  const auto& E = c.engagement;
  positive(E.r_deorbit_km, "engagement.r_deorbit_km");
  positive(E.alpha, "engagement.alpha");
  if (E.k_max < 1) throw ConfigError("engagement.k_max", "must be >= 1");
  if (E.node_cap < 1) throw ConfigError("engagement.node_cap", "must be >= 1");
  if (!(E.time_limit_s >= 0)) throw ConfigError("engagement.time_limit_s", "must be >= 0");
  for (size_t i = 0; i < c.active.size(); ++i)
    for (int a = 0; a < 3; ++a)
      positive(c.active[i].ellipsoid_km[a], fmt::format("active_spacecraft[{}].ellipsoid_km", i));
  if (c.sweep) {
    if (c.sweep->values.empty()) throw ConfigError("sweep.values", "must not be empty");
    if (c.sweep->conops.empty()) throw ConfigError("sweep.conops", "must not be empty");
    for (double v : c.sweep->values) {
      if (c.sweep->axis == SweepAxis::kWindowLength &&
          (v != std::floor(v) || v < 2 || v > c.steps - 1))
        throw ConfigError("sweep.values", "window lengths must be integers in [2, steps - 1]");
      if (c.sweep->axis == SweepAxis::kBudget && !(v >= 0))
        throw ConfigError("sweep.values", "budgets must be >= 0");
    }
  }
}

inline ScenarioConfig load_scenario_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<root>", std::string("YAML syntax error: ") + e.what());
  }
  return parse_scenario(root);
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_text(ss.str());
}

// ---------------------------------------------------------------------------
// Canonical YAML output: every field, fixed order, shortest round-trip numbers.

namespace detail {

inline std::string num(double v) { return fmt::format("{}", v); }

inline void emit_elements(YAML::Emitter& out, const KeplerianElements& el) {
  out << YAML::BeginMap;
  out << YAML::Key << "sma_km" << YAML::Value << num(el.semi_major_axis);
  out << YAML::Key << "eccentricity" << YAML::Value << num(el.eccentricity);
  out << YAML::Key << "inclination_deg" << YAML::Value << num(el.inclination);
  out << YAML::Key << "raan_deg" << YAML::Value << num(el.raan);
  out << YAML::Key << "arg_lat_deg" << YAML::Value << num(el.argument_of_latitude);
  out << YAML::EndMap;
}

}  // namespace detail

inline std::string to_yaml(const ScenarioConfig& c) {
  using detail::num;
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << c.name;
  out << YAML::Key << "epoch" << YAML::Value << YAML::DoubleQuoted << c.epoch;
  out << YAML::Key << "horizon" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "steps" << YAML::Value << c.steps;
  out << YAML::Key << "step_s" << YAML::Value << num(c.step_seconds);
  out << YAML::EndMap;
  const auto& L = c.laser;
  out << YAML::Key << "laser" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "u_max_km" << YAML::Value << num(L.u_max);
  out << YAML::Key << "u_min_km" << YAML::Value << num(L.u_min);
  out << YAML::Key << "mirror_diameter_m" << YAML::Value << num(L.mirror_diameter);
  out << YAML::Key << "beam_quality" << YAML::Value << num(L.beam_quality);
  out << YAML::Key << "diffraction_constant" << YAML::Value << num(L.diffraction_constant);
  out << YAML::Key << "wavelength_nm" << YAML::Value << fmt::format("{:.15g}", L.wavelength * 1e9);
  out << YAML::Key << "coupling_n_per_mw" << YAML::Value << num(L.coupling);
  out << YAML::Key << "pulse_energy_j" << YAML::Value << num(L.pulse_energy);
  out << YAML::Key << "eta1" << YAML::Value << num(L.eta1);
  out << YAML::Key << "eta2" << YAML::Value << num(L.eta2);
  out << YAML::Key << "pulses_per_step" << YAML::Value << L.pulses_per_step;
  out << YAML::EndMap;
  out << YAML::Key << "platforms" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : c.platforms) detail::emit_elements(out, p);
  out << YAML::EndSeq;
  const auto& K = c.conops;
  out << YAML::Key << "conops" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << to_string(K.kind);
  out << YAML::Key << "phases" << YAML::Value << K.phases;
  out << YAML::Key << "planes" << YAML::Value << K.planes;
  out << YAML::Key << "layers" << YAML::Value << K.layers;
  out << YAML::Key << "layer_step_km" << YAML::Value << num(K.layer_step_km);
  out << YAML::Key << "layer_direction" << YAML::Value
      << (K.layer_direction == LayerDirection::kSymmetric ? "symmetric"
          : K.layer_direction == LayerDirection::kUp      ? "up"
                                                           : "down");
  out << YAML::Key << "beta" << YAML::Value << num(K.beta);
  out << YAML::Key << "raan_rule" << YAML::Value
      << (K.raan_rule == RaanRule::kSphericalTrig ? "spherical" : "verbatim");
  out << YAML::EndMap;
  out << YAML::Key << "budget_km_s" << YAML::Value << num(c.budget_km_s);
  out << YAML::Key << "rhs" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "window_length" << YAML::Value << c.window_length;
  out << YAML::EndMap;
  out << YAML::Key << "debris" << YAML::Value << YAML::BeginMap;
  if (c.population) {
    const auto& s = *c.population;
    out << YAML::Key << "population" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "count" << YAML::Value << s.count;
    out << YAML::Key << "altitude_bins" << YAML::Value << YAML::BeginSeq;
    for (const auto& b : s.altitude_bins) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "low_km" << YAML::Value << num(b.low_km);
      out << YAML::Key << "high_km" << YAML::Value << num(b.high_km);
      out << YAML::Key << "frequency" << YAML::Value << num(b.frequency);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "inclination_range_deg" << YAML::Value << YAML::Flow << YAML::BeginSeq
        << num(s.inclination_min_deg) << num(s.inclination_max_deg) << YAML::EndSeq;
    out << YAML::Key << "inclination_steps" << YAML::Value << s.inclination_steps;
    out << YAML::Key << "raan_steps" << YAML::Value << s.raan_steps;
    out << YAML::Key << "arg_lat_steps" << YAML::Value << s.arg_lat_steps;
    out << YAML::Key << "surface_density_kg_m2" << YAML::Value << num(s.surface_density);
    out << YAML::EndMap;
  }
  if (c.breakup) {
    const auto& b = *c.breakup;
    out << YAML::Key << "breakup" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "parent" << YAML::Value;
    detail::emit_elements(out, b.parent);
    out << YAML::Key << "trigger_s" << YAML::Value << num(b.trigger_seconds);
    out << YAML::Key << "fragments" << YAML::Value << b.fragments;
    out << YAML::Key << "max_sma_deviation_km" << YAML::Value << num(b.max_sma_deviation_km);
    out << YAML::Key << "max_angle_deviation_deg" << YAML::Value << num(b.max_angle_deviation_deg);
    out << YAML::Key << "surface_density_kg_m2" << YAML::Value << num(b.surface_density);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  const auto& E = c.engagement;
  out << YAML::Key << "engagement" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "r_deorbit_km" << YAML::Value << num(E.r_deorbit_km);
  out << YAML::Key << "grazing_altitude_km" << YAML::Value << num(E.grazing_altitude_km);
  out << YAML::Key << "alpha" << YAML::Value << num(E.alpha);
  out << YAML::Key << "k_max" << YAML::Value << E.k_max;
  out << YAML::Key << "node_cap" << YAML::Value << E.node_cap;
  out << YAML::Key << "overflow" << YAML::Value
      << (E.overflow == OverflowPolicy::kTruncate ? "truncate" : "error");
  out << YAML::Key << "strict_consistency" << YAML::Value << E.strict_consistency;
  out << YAML::Key << "time_limit_s" << YAML::Value << num(E.time_limit_s);
  out << YAML::EndMap;
  if (!c.active.empty()) {
    out << YAML::Key << "active_spacecraft" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : c.active) {
      out << YAML::BeginMap;
      out << YAML::Key << "id" << YAML::Value << YAML::DoubleQuoted << a.id;
      out << YAML::Key << "elements" << YAML::Value;
      detail::emit_elements(out, a.elements);
      out << YAML::Key << "ellipsoid_km" << YAML::Value << YAML::Flow << YAML::BeginSeq
          << num(a.ellipsoid_km.x()) << num(a.ellipsoid_km.y()) << num(a.ellipsoid_km.z())
          << YAML::EndSeq;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (c.sweep) {
    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "axis" << YAML::Value
        << (c.sweep->axis == SweepAxis::kWindowLength ? "window_length" : "budget");
    out << YAML::Key << "values" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double v : c.sweep->values) out << num(v);
    out << YAML::EndSeq;
    out << YAML::Key << "conops" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto k : c.sweep->conops) out << to_string(k);
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// From a config to a runnable mission.

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> window_length;
  std::optional<double> budget;
  std::optional<Conops> conops;
};

inline ScenarioConfig apply_overrides(ScenarioConfig c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.window_length) c.window_length = *o.window_length;
  if (o.budget) c.budget_km_s = *o.budget;
  if (o.conops) c.conops.kind = *o.conops;
  validate(c);
  return c;
}

inline std::vector<std::vector<KeplerianElements>> build_catalogs(const ScenarioConfig& c,
                                                                  const EarthConstants& earth) {
  std::vector<std::vector<KeplerianElements>> out;
  const auto& K = c.conops;
  for (const auto& p : c.platforms) {
    switch (K.kind) {
      case Conops::kBaseline:
        out.push_back(grid::baseline_catalog(p));
        break;
      case Conops::kPlaneChange:
        out.push_back(grid::plane_change_catalog(p, c.budget_km_s, K.beta, K.phases, K.planes,
                                                 K.raan_rule, earth));
        break;
      case Conops::kAltitudeChange:
        out.push_back(grid::altitude_change_catalog(p, K.phases, K.layers, K.layer_step_km,
                                                    K.layer_direction, earth));
        break;
    }
  }
  return out;
}

inline std::vector<DebrisBody> build_debris(const ScenarioConfig& c, const EarthConstants& earth) {
  std::vector<DebrisBody> debris;
  if (c.population) debris = sample_debris_population(*c.population, c.seed, earth);
  if (c.breakup) {
    for (auto& f : generate_breakup(*c.breakup, c.seed, c.step_seconds,
                                    static_cast<int>(debris.size()), earth))
      debris.push_back(f.body);
  }
  return debris;
}

inline Mission build_mission(const ScenarioConfig& c) {
  Mission m;
  m.earth.grazing_altitude = c.engagement.grazing_altitude_km;
  m.catalogs = build_catalogs(c, m.earth);
  m.debris = build_debris(c, m.earth);
  for (const auto& a : c.active)
    m.active.push_back({a.id, astro::elements_to_state(a.elements, m.earth), a.ellipsoid_km});
  m.laser = c.laser;
  m.horizon = c.steps;
  m.step_seconds = c.step_seconds;
  m.budgets.assign(c.platforms.size(), c.conops.kind == Conops::kBaseline ? 0.0 : c.budget_km_s);
  m.r_deorbit = c.engagement.r_deorbit_km;
  m.alpha = c.engagement.alpha;
  return m;
}

inline RhsConfig build_rhs_config(const ScenarioConfig& c) {
  RhsConfig r;
  r.window_length = c.window_length;
  r.teg.k_max = c.engagement.k_max;
  r.teg.node_cap = static_cast<size_t>(c.engagement.node_cap);
  r.teg.overflow = c.engagement.overflow;
  r.model.strict_consistency = c.engagement.strict_consistency;
  if (c.engagement.time_limit_s > 0) r.solve.time_limit = c.engagement.time_limit_s;
  return r;
}

}  // namespace l2d
