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

#include "dtebd/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace dtebd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double numberOr(const json& j, double fallback = kUndefined) { return j.is_number() ? j.get<double>() : fallback; }

json vectorJson(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::vector<double> vectorFrom(const json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(numberOr(x));
  return v;
}

std::string fmt(double x) {
  std::ostringstream ss;
  ss << std::setprecision(17) << x;
  return ss.str();
}

class Logger {
 public:
  explicit Logger(std::ostream* os) : os_(os) {}
  void line(const std::string& s) {
    if (!os_) return;
    std::lock_guard<std::mutex> lock(mu_);
    *os_ << s << '\n' << std::flush;
  }

 private:
  std::ostream* os_;
  std::mutex mu_;
};

struct ResumePoint {
  SuperketMPS state;
  double tReached = 0.0;
  double dt = 0.0;
  std::vector<ObservableRecord> records;
};

std::string checkpointPath(const ExperimentConfig& c, const std::string& label) {
  return (fs::path(c.outDir) / (label + ".checkpoint")).string();
}

void writeCheckpoint(const std::string& path, const SuperketMPS& state, const json& meta) {
  std::ostringstream os(std::ios::binary);
  writeState(os, state, meta.dump());
  writeFileAtomic(path, os.str());
}

json summaryJson(const RunPlan& plan, const ObservableSeries& series, const RunResult& result, double dt,
                 const DecayCheckReport* decay, double seconds) {
  json s = describePlan(plan);
  s["dt"] = dt;
  s["dtAbsolute"] = dt * plan.timeUnit;
  s["status"] = result.status == RunStatus::Completed ? "completed" : "checkpointed";
  s["steps"] = result.steps;
  s["maxTraceDrift"] = result.maxTraceDrift;
  s["wallSeconds"] = seconds;
  if (!series.records.empty()) {
    const auto& first = series.records.front();
    const auto& last = series.records.back();
    s["finalTime"] = last.timeScaled;
    s["cumulativeDiscard"] = last.cumulativeDiscard;
    s["maxBond"] = last.maxBond;
    s["retainedFraction"] = first.totalN > 0.0 ? last.totalN / first.totalN : kUndefined;
    double gMin = std::numeric_limits<double>::infinity(), imag = 0.0;
    for (const auto& r : series.records) {
      const double g = r.g2Local[static_cast<std::size_t>(plan.referenceSite)];
      if (std::isfinite(g)) gMin = std::min(gMin, g);
      imag = std::max(imag, r.maxImaginary);
    }
    s["minG2Centre"] = number(gMin);
    s["maxImaginary"] = imag;
  }
  if (decay) {
    s["decayMaxRelDeviation"] = number(decay->maxRelDeviation);
    s["decayMaxBalanceResidual"] = number(decay->maxBalanceResidual);
    s["decayMaxLossResidual"] = number(decay->maxLossResidual);
  }
  if (plan.groups) s["tonksAsymptote"] = tonksAsymptote(plan.groups->liebLinigerG, plan.physical.meanN0);
  return s;
}

PlanOutcome runPlan(const ExperimentConfig& c, const RunPlan& plan, const std::string& hash, ResumePoint* resume,
                    Logger& log) {
  PlanOutcome out;
  out.label = plan.label;
  const auto wallStart = std::chrono::steady_clock::now();
  const TruncationPolicy policy{c.schedule.chiMax, c.schedule.epsCut, {}};
  RecorderOptions ropts;
  ropts.referenceSite = plan.referenceSite;
  ropts.densityFloor = c.densityFloor;
  ropts.timeUnit = plan.groups ? plan.timeUnit : kUndefined;
  const LatticeModel model = plan.model;
  const Recorder recorder = [&](const SuperketMPS& s, double t) { return recordObservables(s, model, t, ropts); };

  try {
    SuperketMPS state = resume ? resume->state : coherentProductState(plan.amplitudes, model, policy);
    EvolutionSchedule sched = plan.schedule;
    double dt = sched.dt;
    if (resume) {
      dt = resume->dt;
    } else if (!c.schedule.dt && c.schedule.selfTest && plan.groups && sched.tEnd > 0.0) {
      const double tried = dt;
      const double abs = selfTestTimeStep(state, model, dt * plan.timeUnit, 0.1 * plan.timeUnit, policy,
                                          plan.referenceSite, c.schedule.selfTestTolerance);
      dt = abs / plan.timeUnit;
      if (dt != tried) log.line("[" + plan.label + "] self-test halved dt to " + fmt(dt));
    }
    sched.dt = dt;
    out.dt = dt;

    std::vector<ObservableRecord> previous;
    if (resume) {
      sched.tStart = resume->tReached;
      previous = resume->records;
      std::vector<double> kept;
      for (double t : sched.recordTimes) {
        if (t > sched.tStart + 1e-12 * std::max(1.0, sched.tEnd)) kept.push_back(t);
      }
      sched.recordTimes = kept;
    }

    RunOptions ro;
    ro.step.abortDiscard = c.schedule.abortDiscard;
    ro.wallClockSeconds = c.schedule.wallClockSeconds;
    ro.progressEvery = c.schedule.progressEvery;
    ro.progress = [&](const ProgressInfo& p) {
      std::ostringstream ss;
      ss << "[" << plan.label << "] step " << p.step << " t/tau_c=" << std::setprecision(6) << p.time
         << " trace_drift=" << p.traceDrift << " max_bond=" << p.maxBond << " discard=" << p.cumulativeDiscard;
      log.line(ss.str());
    };

    RunResult result = run(state, model, sched, recorder, ro);
    ObservableSeries series;
    series.configHash = hash;
    series.modelEcho = describePlan(plan).dump();
    series.records = previous;
    series.records.insert(series.records.end(), result.series.records.begin(), result.series.records.end());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wallStart).count();

    if (result.status == RunStatus::WallClockExceeded) {
      json meta;
      meta["configHash"] = hash;
      meta["config"] = toJson(c);
      meta["label"] = plan.label;
      meta["tReached"] = result.tReached;
      meta["dt"] = dt;
      json recs = json::array();
      for (const auto& r : series.records) recs.push_back(recordToJson(r));
      meta["records"] = recs;
      out.checkpointPath = checkpointPath(c, plan.label);
      writeCheckpoint(out.checkpointPath, state, meta);
      out.exitCode = kExitCheckpoint;
      out.message = "wall-clock budget reached at t/tau_c = " + fmt(result.tReached) + "; checkpoint " +
                    out.checkpointPath;
      log.line("[" + plan.label + "] " + out.message);
      out.series = std::move(series);
      return out;
    }

    const fs::path dir(c.outDir);
    const std::string base = (dir / plan.label).string();
    writeFileAtomic(base + ".series.tsv", seriesTable(series, hash, plan.label));
    writeFileAtomic(base + ".density.tsv", profileTable(series, hash, plan.label, "density"));
    writeFileAtomic(base + ".g2local.tsv", profileTable(series, hash, plan.label, "g2local"));
    writeFileAtomic(base + ".g2row.tsv", profileTable(series, hash, plan.label, "g2row"));
    std::optional<DecayCheckReport> decay;
    if (series.records.size() >= 3) {
      decay = densityDecayCheck(series, model, plan.referenceSite);
      writeFileAtomic(base + ".decay.tsv", decayTable(*decay, hash, plan.label));
    }
    json summary = summaryJson(plan, series, result, dt, decay ? &*decay : nullptr, seconds);
    summary["configHash"] = hash;
    writeFileAtomic(base + ".summary.json", summary.dump(2) + "\n");
    if (resume) fs::remove(checkpointPath(c, plan.label));
    log.line("[" + plan.label + "] done in " + fmt(seconds) + " s, " + std::to_string(result.steps) + " steps");
    out.series = std::move(series);
    return out;
  } catch (const NumericalError& e) {
    out.exitCode = kExitNumerical;
    out.message = e.what();
    json diag = {{"configHash", hash}, {"label", plan.label}, {"error", e.what()}, {"plan", describePlan(plan)}};
    try {
      writeFileAtomic((fs::path(c.outDir) / (plan.label + ".diagnostic.json")).string(), diag.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    log.line("[" + plan.label + "] numerical abort: " + out.message);
    return out;
  }
}

ExperimentOutcome runPlans(const ExperimentConfig& c, const std::vector<RunPlan>& plans,
                           std::vector<ResumePoint*> resumes, const ExperimentOptions& options, bool writeEcho) {
  Logger log(options.log);
  const std::string hash = configHash(c);
  fs::create_directories(c.outDir);
  if (writeEcho) {
    json echo = {{"configHash", hash}, {"config", toJson(c)}, {"plans", json::array()}};
    for (const auto& p : plans) echo["plans"].push_back(describePlan(p));
    writeFileAtomic((fs::path(c.outDir) / "config.json").string(), echo.dump(2) + "\n");
  }

  ExperimentOutcome outcome;
  outcome.plans.resize(plans.size());
  std::atomic<std::size_t> next{0};
  std::mutex errMu;
  std::exception_ptr firstError;
  auto worker = [&] {
    for (std::size_t k = next++; k < plans.size(); k = next++) {
      try {
        outcome.plans[k] = runPlan(c, plans[k], hash, resumes[k], log);
      } catch (...) {
        std::lock_guard<std::mutex> lock(errMu);
        if (!firstError) firstError = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(options.threads, static_cast<int>(plans.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (firstError) std::rethrow_exception(firstError);

  for (const auto& p : outcome.plans) {
    if (p.exitCode == kExitNumerical) outcome.exitCode = kExitNumerical;
  }
  if (outcome.exitCode == kExitOk) {
    for (const auto& p : outcome.plans) {
      if (p.exitCode == kExitCheckpoint) outcome.exitCode = kExitCheckpoint;
    }
  }
  return outcome;
}

}  // namespace

int threadsFromEnvironment() {
  const char* v = std::getenv(kThreadsEnv);
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError(std::string(kThreadsEnv) + " must be a positive integer");
  return static_cast<int>(std::min(n, 256L));
}

json recordToJson(const ObservableRecord& r) {
  return json{{"time", r.time},
              {"timeScaled", number(r.timeScaled)},
              {"referenceSite", r.referenceSite},
              {"density", vectorJson(r.density)},
              {"g2Local", vectorJson(r.g2Local)},
              {"g2Row", vectorJson(r.g2Row)},
              {"totalN", r.totalN},
              {"trace", r.trace},
              {"cumulativeDiscard", r.cumulativeDiscard},
              {"maxBond", r.maxBond},
              {"maxImaginary", r.maxImaginary},
              {"lossRate", r.lossRate},
              {"fluxRate", r.fluxRate},
              {"diffusionRate", r.diffusionRate}};
}

ObservableRecord recordFromJson(const json& j) {
  ObservableRecord r;
  r.time = j.at("time").get<double>();
  r.timeScaled = numberOr(j.at("timeScaled"));
  r.referenceSite = j.at("referenceSite").get<int>();
  r.density = vectorFrom(j.at("density"));
  r.g2Local = vectorFrom(j.at("g2Local"));
  r.g2Row = vectorFrom(j.at("g2Row"));
  r.totalN = j.at("totalN").get<double>();
  r.trace = j.at("trace").get<double>();
  r.cumulativeDiscard = j.at("cumulativeDiscard").get<double>();
  r.maxBond = j.at("maxBond").get<Index>();
  r.maxImaginary = j.at("maxImaginary").get<double>();
  r.lossRate = j.at("lossRate").get<double>();
  r.fluxRate = j.at("fluxRate").get<double>();
  r.diffusionRate = j.at("diffusionRate").get<double>();
  return r;
}

void writeFileAtomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, target);
}

std::string seriesTable(const ObservableSeries& s, const std::string& hash, const std::string& label) {
  std::ostringstream os;
  os << "# config_hash=" << hash << " label=" << label
     << " columns: t_over_tauc t n_ref g2_ref totalN trace cumulative_discard max_bond max_imag loss_rate flux_rate "
        "diffusion_rate\n";
  os << std::setprecision(17);
  for (const auto& r : s.records) {
    const auto ref = static_cast<std::size_t>(r.referenceSite);
    os << r.timeScaled << '\t' << r.time << '\t' << r.density[ref] << '\t' << r.g2Local[ref] << '\t' << r.totalN
       << '\t' << r.trace << '\t' << r.cumulativeDiscard << '\t' << r.maxBond << '\t' << r.maxImaginary << '\t'
       << r.lossRate << '\t' << r.fluxRate << '\t' << r.diffusionRate << '\n';
  }
  return os.str();
}

std::string profileTable(const ObservableSeries& s, const std::string& hash, const std::string& label,
                         const std::string& what) {
  std::ostringstream os;
  const std::size_t n = s.records.empty() ? 0 : s.records.front().density.size();
  os << "# config_hash=" << hash << " label=" << label << " quantity=" << what << " columns: t_over_tauc t";
  for (std::size_t l = 0; l < n; ++l) os << " site" << l;
  os << '\n' << std::setprecision(17);
  for (const auto& r : s.records) {
    const auto& v = what == "density" ? r.density : what == "g2local" ? r.g2Local : r.g2Row;
    os << r.timeScaled << '\t' << r.time;
    for (double x : v) os << '\t' << x;
    os << '\n';
  }
  return os.str();
}

std::string decayTable(const DecayCheckReport& r, const std::string& hash, const std::string& label) {
  std::ostringstream os;
  os << "# config_hash=" << hash << " label=" << label << " site=" << r.site
     << " columns: t_over_tauc t n_recorded n_ode n_unity rel_deviation balance_residual loss_residual\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    os << r.timesScaled[i] << '\t' << r.times[i] << '\t' << r.recorded[i] << '\t' << r.odeDensity[i] << '\t'
       << r.unityDensity[i] << '\t' << r.relDeviation[i] << '\t' << r.balanceResidual[i] << '\t' << r.lossResidual[i] << '\n';
  }
  return os.str();
}

ExperimentOutcome runExperiment(const ExperimentConfig& c, const ExperimentOptions& options) {
  const std::vector<RunPlan> plans = resolvePlans(c);
  return runPlans(c, plans, std::vector<ResumePoint*>(plans.size(), nullptr), options, true);
}

ExperimentOutcome resumeExperiment(const std::string& path, const ExperimentOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  std::string metaText;
  ResumePoint rp;
  try {
    rp.state = readState(in, metaText);
  } catch (const std::runtime_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  ExperimentConfig c;
  std::string label;
  try {
    const json meta = json::parse(metaText);
    c = parseConfig(meta.at("config"));
    if (configHash(c) != meta.at("configHash").get<std::string>()) {
      throw ConfigError("checkpoint config hash does not match its embedded config");
    }
    label = meta.at("label").get<std::string>();
    rp.tReached = meta.at("tReached").get<double>();
    rp.dt = meta.at("dt").get<double>();
    for (const auto& r : meta.at("records")) rp.records.push_back(recordFromJson(r));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint metadata is malformed: ") + e.what());
  }
  if (options.wallClockSeconds) c.schedule.wallClockSeconds = *options.wallClockSeconds;
  if (options.progressEvery) c.schedule.progressEvery = *options.progressEvery;

  std::vector<RunPlan> all = resolvePlans(c);
  for (auto& p : all) {
    if (p.label != label) continue;
    return runPlans(c, {p}, {&rp}, options, false);
  }
  throw ConfigError("checkpoint label '" + label + "' not found in its config");
}

}  // namespace dtebd
