// Copyright 2026 The dtebd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dtebd/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace dtebd {

using nlohmann::json;

std::string toString(InteractionMode m) {
  switch (m) {
    case InteractionMode::PureDissipative:
      return "pureDissipative";
    case InteractionMode::PredominantlyRepulsive:
      return "predominantlyRepulsive";
    case InteractionMode::Custom:
      return "custom";
  }
  return "?";
}

InteractionMode interactionModeFromString(const std::string& s) {
  if (s == "pureDissipative") return InteractionMode::PureDissipative;
  if (s == "predominantlyRepulsive") return InteractionMode::PredominantlyRepulsive;
  if (s == "custom") return InteractionMode::Custom;
  throw ConfigError("interaction.mode must be pureDissipative, predominantlyRepulsive or custom (got '" + s + "')");
}

namespace {

void rejectUnknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

double readNumber(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

void readInteraction(const json& j, Interaction& it, const std::string& where, bool allowLabel) {
  if (allowLabel) {
    rejectUnknown(j, where, {"label", "mode", "G", "ratio", "gReal", "gImag"});
  } else {
    rejectUnknown(j, where, {"mode", "G", "ratio", "gReal", "gImag"});
  }
  if (j.contains("mode")) {
    std::string m;
    read(j, "mode", m, where);
    it.mode = interactionModeFromString(m);
  }
  it.G = readNumber(j, "G", it.G, where);
  it.ratio = readNumber(j, "ratio", it.ratio, where);
  it.gReal = readNumber(j, "gReal", it.gReal, where);
  it.gImag = readNumber(j, "gImag", it.gImag, where);
}

json interactionJson(const Interaction& it) {
  json j;
  j["mode"] = toString(it.mode);
  if (it.mode == InteractionMode::Custom) {
    j["gReal"] = it.gReal;
    j["gImag"] = it.gImag;
  } else {
    j["G"] = it.G;
    if (it.mode == InteractionMode::PredominantlyRepulsive) j["ratio"] = it.ratio;
  }
  return j;
}

std::string formatNumber(double x) {
  std::ostringstream ss;
  ss << x;
  return ss.str();
}

std::string defaultLabel(const Interaction& it) {
  switch (it.mode) {
    case InteractionMode::PureDissipative:
      return "G" + formatNumber(it.G) + "_dissipative";
    case InteractionMode::PredominantlyRepulsive:
      return "G" + formatNumber(it.G) + "_repulsive" + formatNumber(it.ratio);
    case InteractionMode::Custom:
      return "custom_gr" + formatNumber(it.gReal) + "_gi" + formatNumber(it.gImag);
  }
  return "run";
}

void validateInteraction(const Interaction& it, const std::string& where) {
  if (it.mode == InteractionMode::Custom) {
    if (!std::isfinite(it.gReal) || !std::isfinite(it.gImag)) throw ConfigError(where + ".gReal/gImag must be finite");
    if (it.gImag > 0.0) throw ConfigError(where + ".gImag must be <= 0 (loss, not gain)");
  } else {
    if (!(it.G > 0.0) || !std::isfinite(it.G)) throw ConfigError(where + ".G must be positive");
    if (it.mode == InteractionMode::PredominantlyRepulsive && !(it.ratio > 0.0)) {
      throw ConfigError(where + ".ratio must be positive");
    }
  }
}

}  // namespace

ExperimentConfig parseConfig(const json& j) {
  ExperimentConfig c;
  rejectUnknown(j, "", {"name", "physical", "grid", "interaction", "sweep", "profile", "schedule", "observables",
                        "outputs", "deterministic"});
  read(j, "name", c.name, "");
  read(j, "deterministic", c.deterministic, "");

  if (j.contains("physical")) {
    const auto& p = j.at("physical");
    rejectUnknown(p, "physical", {"hbar", "mass", "diffusionD", "boxLength", "meanN0"});
    c.physical.hbar = readNumber(p, "hbar", c.physical.hbar, "physical");
    c.physical.mass = readNumber(p, "mass", c.physical.mass, "physical");
    c.physical.meanN0 = readNumber(p, "meanN0", 2.5, "physical");
    if (p.contains("diffusionD")) {
      c.physical.diffusionD = readNumber(p, "diffusionD", 0.0, "physical");
      c.diffusionSet = true;
    }
    if (p.contains("boxLength")) {
      c.physical.boxLength = readNumber(p, "boxLength", 0.0, "physical");
      c.boxLengthSet = true;
    }
  } else {
    c.physical.meanN0 = 2.5;
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    rejectUnknown(g, "grid", {"nSites", "fockCutoff"});
    read(g, "nSites", c.nSites, "grid");
    read(g, "fockCutoff", c.fockCutoff, "grid");
  }

  if (j.contains("interaction")) readInteraction(j.at("interaction"), c.interaction, "interaction", false);

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (!s.is_array()) throw ConfigError("sweep must be a list");
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::string where = "sweep[" + std::to_string(k) + "]";
      SweepPoint pt;
      pt.interaction = c.interaction;
      if (s[k].is_number()) {
        pt.interaction.G = s[k].get<double>();
      } else if (s[k].is_object()) {
        readInteraction(s[k], pt.interaction, where, true);
        read(s[k], "label", pt.label, where);
      } else {
        throw ConfigError(where + " must be a number or an object");
      }
      validateInteraction(pt.interaction, where);
      if (pt.label.empty()) pt.label = defaultLabel(pt.interaction);
      c.sweep.push_back(pt);
    }
  }

  if (j.contains("profile")) {
    const auto& p = j.at("profile");
    rejectUnknown(p, "profile", {"kind", "center", "width", "edge", "table", "tableFile"});
    if (p.contains("kind")) {
      std::string k;
      read(p, "kind", k, "profile");
      try {
        c.profile.kind = profileKindFromString(k);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    c.profile.center = readNumber(p, "center", c.profile.center, "profile");
    c.profile.width = readNumber(p, "width", c.profile.width, "profile");
    c.profile.edge = readNumber(p, "edge", c.profile.edge, "profile");
    read(p, "tableFile", c.profileTable, "profile");
    if (p.contains("table")) {
      const auto& t = p.at("table");
      if (!t.is_array()) throw ConfigError("profile.table must be a list of [position, density] pairs");
      for (const auto& row : t) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
          throw ConfigError("profile.table must be a list of [position, density] pairs");
        }
        c.profile.table.emplace_back(row[0].get<double>(), row[1].get<double>());
      }
    }
  }

  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    rejectUnknown(s, "schedule", {"tEnd", "dt", "recordEvery", "recordTimes", "order", "chiMax", "epsCut", "selfTest",
                                  "selfTestTolerance", "abortDiscard", "wallClockSeconds", "progressEvery"});
    auto& sc = c.schedule;
    sc.tEnd = readNumber(s, "tEnd", sc.tEnd, "schedule");
    if (s.contains("dt") && !s.at("dt").is_null()) sc.dt = readNumber(s, "dt", 0.0, "schedule");
    sc.recordEvery = readNumber(s, "recordEvery", sc.recordEvery, "schedule");
    read(s, "recordTimes", sc.recordTimes, "schedule");
    read(s, "order", sc.order, "schedule");
    read(s, "chiMax", sc.chiMax, "schedule");
    sc.epsCut = readNumber(s, "epsCut", sc.epsCut, "schedule");
    read(s, "selfTest", sc.selfTest, "schedule");
    sc.selfTestTolerance = readNumber(s, "selfTestTolerance", sc.selfTestTolerance, "schedule");
    sc.abortDiscard = readNumber(s, "abortDiscard", sc.abortDiscard, "schedule");
    sc.wallClockSeconds = readNumber(s, "wallClockSeconds", sc.wallClockSeconds, "schedule");
    read(s, "progressEvery", sc.progressEvery, "schedule");
  }

  if (j.contains("observables")) {
    const auto& o = j.at("observables");
    rejectUnknown(o, "observables", {"referenceSite", "densityFloor"});
    read(o, "referenceSite", c.referenceSite, "observables");
    c.densityFloor = readNumber(o, "densityFloor", c.densityFloor, "observables");
  }

  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    rejectUnknown(o, "outputs", {"dir", "checkpoint"});
    read(o, "dir", c.outDir, "outputs");
    read(o, "checkpoint", c.checkpoint, "outputs");
  }

  // structural checks; physical ones live in resolvePlans
  if (c.nSites < 2) throw ConfigError("grid.nSites must be >= 2");
  if (c.fockCutoff < 1) throw ConfigError("grid.fockCutoff must be >= 1");
  if (c.sweep.empty()) validateInteraction(c.interaction, "interaction");
  const auto& sc = c.schedule;
  if (!(sc.tEnd >= 0.0) || !std::isfinite(sc.tEnd)) throw ConfigError("schedule.tEnd must be >= 0");
  if (sc.dt && !(*sc.dt > 0.0)) throw ConfigError("schedule.dt must be positive");
  if (!(sc.recordEvery > 0.0)) throw ConfigError("schedule.recordEvery must be positive");
  if (sc.order != 1 && sc.order != 2) throw ConfigError("schedule.order must be 1 or 2");
  if (sc.chiMax < 1) throw ConfigError("schedule.chiMax must be >= 1");
  if (!(sc.epsCut >= 0.0)) throw ConfigError("schedule.epsCut must be >= 0");
  if (!(sc.abortDiscard > 0.0)) throw ConfigError("schedule.abortDiscard must be positive");
  if (!(sc.selfTestTolerance > 0.0)) throw ConfigError("schedule.selfTestTolerance must be positive");
  if (!(sc.wallClockSeconds >= 0.0)) throw ConfigError("schedule.wallClockSeconds must be >= 0");
  for (double t : sc.recordTimes) {
    if (!(t >= 0.0) || t > sc.tEnd) throw ConfigError("schedule.recordTimes must lie in [0, tEnd]");
  }
  if (!(c.densityFloor > 0.0)) throw ConfigError("observables.densityFloor must be positive");
  if (c.referenceSite >= c.nSites) throw ConfigError("observables.referenceSite must be < grid.nSites");
  if (c.outDir.empty()) throw ConfigError("outputs.dir must not be empty");

  // dependent defaults
  if (!c.diffusionSet) c.physical.diffusionD = defaultDiffusion(c.physical.hbar, c.physical.mass);
  if (!c.boxLengthSet) c.physical.boxLength = static_cast<double>(c.nSites);
  return c;
}

ExperimentConfig parseConfigText(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parseConfig(j);
}

ExperimentConfig loadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c = parseConfigText(ss.str());
  if (!c.profileTable.empty() && c.profile.table.empty()) {
    try {
      c.profile.table = readProfileTable(c.profileTable);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return c;
}

json toJson(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["deterministic"] = c.deterministic;
  j["physical"] = {{"hbar", c.physical.hbar},
                   {"mass", c.physical.mass},
                   {"diffusionD", c.physical.diffusionD},
                   {"boxLength", c.physical.boxLength},
                   {"meanN0", c.physical.meanN0}};
  j["grid"] = {{"nSites", c.nSites}, {"fockCutoff", c.fockCutoff}};
  j["interaction"] = interactionJson(c.interaction);
  json sweep = json::array();
  for (const auto& pt : c.sweep) {
    json e = interactionJson(pt.interaction);
    e["label"] = pt.label;
    sweep.push_back(e);
  }
  j["sweep"] = sweep;
  json prof = {{"kind", toString(c.profile.kind)},
               {"center", c.profile.center},
               {"width", c.profile.width},
               {"edge", c.profile.edge}};
  if (!c.profile.table.empty()) {
    json t = json::array();
    for (const auto& [x, y] : c.profile.table) t.push_back({x, y});
    prof["table"] = t;
  }
  j["profile"] = prof;
  const auto& s = c.schedule;
  j["schedule"] = {{"tEnd", s.tEnd},
                   {"dt", s.dt ? json(*s.dt) : json(nullptr)},
                   {"recordEvery", s.recordEvery},
                   {"recordTimes", s.recordTimes},
                   {"order", s.order},
                   {"chiMax", s.chiMax},
                   {"epsCut", s.epsCut},
                   {"selfTest", s.selfTest},
                   {"selfTestTolerance", s.selfTestTolerance},
                   {"abortDiscard", s.abortDiscard},
                   {"wallClockSeconds", s.wallClockSeconds},
                   {"progressEvery", s.progressEvery}};
  j["observables"] = {{"referenceSite", c.referenceSite}, {"densityFloor", c.densityFloor}};
  j["outputs"] = {{"dir", c.outDir}, {"checkpoint", c.checkpoint}};
  return j;
}

std::string configHash(const ExperimentConfig& c) {
  // run-control and output fields do not change results
  json j = toJson(c);
  j["schedule"].erase("wallClockSeconds");
  j["schedule"].erase("progressEvery");
  j.erase("outputs");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

std::vector<double> recordGrid(const ScheduleConfig& s) {
  std::vector<double> t;
  const long n = static_cast<long>(std::floor(s.tEnd / s.recordEvery + 1e-9));
  for (long k = 0; k <= n; ++k) t.push_back(static_cast<double>(k) * s.recordEvery);
  t.push_back(s.tEnd);
  t.insert(t.end(), s.recordTimes.begin(), s.recordTimes.end());
  std::sort(t.begin(), t.end());
  std::vector<double> out;
  for (double x : t) {
    if (x > s.tEnd) continue;
    if (out.empty() || x - out.back() > 1e-9 * std::max(1.0, s.tEnd)) out.push_back(x);
  }
  return out;
}

double automaticTimeStep(const RunPlan& p, const ScheduleConfig& s) {
  const double target = p.dtAutoCap;
  const double k = std::max(1.0, std::ceil(s.recordEvery / target - 1e-9));
  return s.recordEvery / k;
}

std::vector<RunPlan> resolvePlans(const ExperimentConfig& c) {
  std::vector<SweepPoint> points = c.sweep;
  if (points.empty()) points.push_back(SweepPoint{defaultLabel(c.interaction), c.interaction});

  std::set<std::string> labels;
  std::vector<RunPlan> plans;
  for (const auto& pt : points) {
    if (!labels.insert(pt.label).second) throw ConfigError("duplicate sweep label '" + pt.label + "'");
    RunPlan plan;
    plan.label = pt.label;
    plan.physical = c.physical;
    const auto& it = pt.interaction;
    const double rho = c.physical.density();
    const double gAbs = it.G * c.physical.hbar * c.physical.hbar * rho / c.physical.mass;
    switch (it.mode) {
      case InteractionMode::PureDissipative:
        plan.physical.gReal = 0.0;
        plan.physical.gImag = -gAbs;
        break;
      case InteractionMode::PredominantlyRepulsive: {
        const double r = it.ratio;
        plan.physical.gReal = gAbs * r / std::sqrt(1.0 + r * r);
        plan.physical.gImag = -gAbs / std::sqrt(1.0 + r * r);
        break;
      }
      case InteractionMode::Custom:
        plan.physical.gReal = it.gReal;
        plan.physical.gImag = it.gImag;
        break;
    }
    try {
      plan.physical.validate();
      plan.model = buildLattice(plan.physical, c.nSites, c.fockCutoff);
      if (plan.physical.couplingMagnitude() > 0.0) {
        plan.groups = dimensionlessGroups(plan.physical, c.nSites);
        plan.timeUnit = plan.groups->tauC;
      }
      PulseProfile prof = c.profile;
      plan.amplitudes = buildProfile(prof, plan.model, c.physical.meanN0);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(pt.label + ": " + e.what());
    }

    double cap = 0.01;  // tau_c / 100
    if (!plan.groups) cap = std::numeric_limits<double>::infinity();
    if (plan.model.J > 0.0) cap = std::min(cap, 0.05 * plan.model.hbar / plan.model.J / plan.timeUnit);
    if (!std::isfinite(cap)) cap = c.schedule.recordEvery;
    plan.dtAutoCap = cap;

    auto& sc = plan.schedule;
    sc.tStart = 0.0;
    sc.tEnd = c.schedule.tEnd;
    sc.recordTimes = recordGrid(c.schedule);
    sc.timeUnit = plan.timeUnit;
    sc.order = c.schedule.order;
    sc.chiMax = c.schedule.chiMax;
    sc.epsCut = c.schedule.epsCut;
    sc.dt = c.schedule.dt ? *c.schedule.dt : automaticTimeStep(plan, c.schedule);
    try {
      sc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(pt.label + ": " + e.what());
    }
    plan.referenceSite = c.referenceSite < 0 ? c.nSites / 2 : c.referenceSite;
    plans.push_back(std::move(plan));
  }
  return plans;
}

json describePlan(const RunPlan& p) {
  json j;
  j["label"] = p.label;
  j["gReal"] = p.physical.gReal;
  j["gImag"] = p.physical.gImag;
  j["J"] = p.model.J;
  j["U"] = p.model.U;
  j["gamma1"] = p.model.gamma1;
  j["gamma2"] = p.model.gamma2;
  j["deltaZ"] = p.model.deltaZ;
  if (p.groups) {
    j["G"] = p.groups->liebLinigerG;
    j["tLoc"] = p.groups->tLoc;
    j["tauC"] = p.groups->tauC;
  } else {
    j["G"] = 0.0;
    j["tLoc"] = nullptr;
    j["tauC"] = nullptr;
  }
  j["timeUnit"] = p.timeUnit;
  j["dt"] = p.schedule.dt;
  j["steps"] = p.schedule.stepsTo(p.schedule.tEnd);
  j["records"] = p.schedule.recordTimes.size();
  j["referenceSite"] = p.referenceSite;
  double n0 = 0.0;
  for (const auto& a : p.amplitudes) n0 += std::norm(a);
  j["initialN"] = n0;
  return j;
}

std::vector<std::string> presetNames() { return {"smoke", "fig3-desk", "fig4-desk", "fig5-desk", "fig6-desk"}; }

std::string presetDescription(const std::string& name) {
  if (name == "smoke") return "8 sites, |G| = 20, to 0.2 tau_c; a quick end-to-end check";
  if (name == "fig3-desk") return "g2(z0,z0; t) at the centre for |G| = 1, 10, 20, 100, pure loss, to 4 tau_c";
  if (name == "fig4-desk") return "centre density with the decay-relation check for |G| = 1, 10, 20, 100";
  if (name == "fig5-desk") return "g2(z0, z) snapshots for |G| = 20 and 100, pure loss";
  if (name == "fig6-desk") return "g2(z0, z) at |G| = 10, t = 0.77 tau_c, pure loss against |Re g / Im g| = 10";
  throw ConfigError("unknown preset '" + name + "'");
}

ExperimentConfig preset(const std::string& name) {
  json j = {{"name", name},
            {"physical", {{"meanN0", 2.5}}},
            {"grid", {{"nSites", 40}, {"fockCutoff", 3}}},
            {"interaction", {{"mode", "pureDissipative"}, {"G", 20.0}}},
            {"schedule", {{"tEnd", 4.0}, {"chiMax", 40}, {"recordEvery", 0.05}}},
            {"outputs", {{"dir", "out/" + name}}}};
  if (name == "smoke") {
    j["grid"]["nSites"] = 8;
    j["physical"]["meanN0"] = 0.5;
    j["schedule"] = {{"tEnd", 0.2}, {"chiMax", 16}, {"recordEvery", 0.05}};
  } else if (name == "fig3-desk" || name == "fig4-desk") {
    j["sweep"] = {1.0, 10.0, 20.0, 100.0};
  } else if (name == "fig5-desk") {
    j["sweep"] = {20.0, 100.0};
  } else if (name == "fig6-desk") {
    j["interaction"]["G"] = 10.0;
    j["sweep"] = json::array({json{{"mode", "pureDissipative"}, {"G", 10.0}},
                              json{{"mode", "predominantlyRepulsive"}, {"G", 10.0}, {"ratio", 10.0}}});
    j["schedule"] = {{"tEnd", 0.77}, {"chiMax", 40}, {"recordEvery", 0.07}};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return parseConfig(j);
}

}  // namespace dtebd
