#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "contina/error.hpp"
#include "contina/harness.hpp"
#include "test_util.hpp"

using namespace contina;
using testutil::category_of;
using testutil::message_of;
using testutil::slurp;
using testutil::TempDir;

namespace {

ExperimentConfig small_config(Method method = Method::kContina) {
  ExperimentConfig c;
  c.method = method;
  c.predictor.kind = PredictorKind::kSeasonalWindow;
  c.synthetic.n_regions = 5;
  c.synthetic.horizon = 24 * 30;
  c.synthetic.regime = Heterogeneous{0.5, 2.0, 72};
  c.seed = 5;
  return c;
}

bool same_ledger(const RunLedger& a, const RunLedger& b) {
  if (a.records().size() != b.records().size()) return false;
  for (std::size_t k = 0; k < a.records().size(); ++k) {
    const auto& x = a.records()[k];
    const auto& y = b.records()[k];
    if (x.t != y.t || x.region != y.region || x.flow != y.flow || x.covered != y.covered ||
        x.length != y.length || x.empty != y.empty) {
      return false;
    }
  }
  return true;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    rows.push_back(f);
  }
  return rows;
}

// Dataset with a file-backed table: forecasts bracket y during training and
// calibration and sit far below it afterwards.
Dataset forced_miss_dataset(std::size_t n, std::int64_t steps, std::int64_t deploy_from) {
  Dataset data;
  auto table = std::make_shared<ForecastTable>();
  for (std::int64_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (Flow f : {Flow::kIn, Flow::kOut}) {
        const double y = 20.0 + static_cast<double>((t * 7 + i * 3) % 11);
        data.stream.push_back({t, i, f, y, {}});
        if (t < deploy_from) {
          table->insert({t, i, f}, y - 1.0, y + 1.0);
        } else {
          table->insert({t, i, f}, -500.0, -490.0);
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) data.region_names.push_back(std::to_string(i));
  data.forecasts = table;
  return data;
}

ExperimentConfig file_backed_config(Method method) {
  ExperimentConfig c;
  c.method = method;
  c.predictor.kind = PredictorKind::kFileBacked;
  c.demand_csv = "unused.csv";
  c.forecast_csv = "unused.csv";
  c.train_frac = 0.5;
  c.calib_frac = 0.25;
  c.record_trajectories = true;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// run_replay

TEST(RunReplay, QcpCoversExchangeableData) {
  ExperimentConfig c;
  c.method = Method::kQcp;
  c.predictor.kind = PredictorKind::kSeasonalWindow;
  c.synthetic.n_regions = 50;
  c.synthetic.horizon = 3000;
  c.synthetic.seasonal_amplitude = 0.0;
  c.train_frac = 1.0 / 3.0;
  c.calib_frac = 1.0 / 3.0;
  c.seed = 2;
  const RunResult r = run_replay(c);
  ASSERT_GE(r.ledger.records().size(), 100000u);
  const double cov = average_coverage(r.ledger);
  EXPECT_GE(cov, 0.89);
  EXPECT_LE(cov, 0.91);
  for (const auto& s : r.final_states) EXPECT_EQ(s, RegionAdaptState::initial(s.region, c.hp));
}

TEST(RunReplay, ForcedMissesDriveAlphaDownUntilInflated) {
  const Dataset data = forced_miss_dataset(2, 400, 300);
  ExperimentConfig c = file_backed_config(Method::kContina);
  c.hp.gamma1 = 0.05;
  const RunResult r = run_replay(c, data);
  const auto bounds = lemma_bounds(c.hp);
  const auto& recs = r.ledger.records();
  ASSERT_EQ(r.alpha_trajectories.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& traj = r.alpha_trajectories[i];
    ASSERT_EQ(traj.size(), r.ledger.horizon() + 1);
    // The first deployment step misses both flows and pushes alpha below zero.
    EXPECT_FALSE(recs[i * kFlowCount].covered);
    EXPECT_FALSE(recs[i * kFlowCount + 1].covered);
    EXPECT_LT(traj[1], 0.0);
    for (std::size_t t = 0; t < r.ledger.horizon(); ++t) {
      const auto base = (t * 2 + i) * kFlowCount;
      const bool both_missed = !recs[base].covered && !recs[base + 1].covered;
      if (both_missed && traj[t] < 1.0) ASSERT_LT(traj[t + 1], traj[t]) << "step " << t;
      if (traj[t] < 0.0) ASSERT_TRUE(recs[base].covered && recs[base + 1].covered) << "step " << t;
    }
    for (double a : traj) EXPECT_GE(a, bounds.lower);
  }
  EXPECT_GT(r.diagnostics.inflated_quantiles, 0u);
}

TEST(RunReplay, IdenticalRunsGiveIdenticalLedgers) {
  const ExperimentConfig c = small_config();
  const RunResult a = run_replay(c);
  const RunResult b = run_replay(c);
  EXPECT_TRUE(same_ledger(a.ledger, b.ledger));
  EXPECT_EQ(a.final_states, b.final_states);
}

TEST(RunReplay, ThreadCountDoesNotChangeResults) {
  for (Method m : {Method::kCp, Method::kQcp, Method::kAciFixed, Method::kContina}) {
    ExperimentConfig c = small_config(m);
    c.predictor.kind = PredictorKind::kOnlinePinballLinear;
    c.online_predictor = true;
    const RunResult one = run_replay(c);
    c.threads = 3;
    const RunResult three = run_replay(c);
    EXPECT_TRUE(same_ledger(one.ledger, three.ledger)) << to_string(m);
    EXPECT_EQ(one.final_states, three.final_states);
    EXPECT_EQ(one.rate_weighted_error, three.rate_weighted_error);
  }
}

TEST(RunReplay, LedgerIsComplete) {
  const RunResult r = run_replay(small_config());
  EXPECT_NO_THROW(r.ledger.check_complete());
  EXPECT_EQ(r.ledger.horizon(), r.info.step_times.size());
  EXPECT_EQ(r.window_capacity, r.calibration_steps);
}

TEST(RunReplay, AdaptiveRatesTelescope) {
  for (Method m : {Method::kContina, Method::kAciFixed}) {
    ExperimentConfig c = small_config(m);
    c.synthetic.horizon = 24 * 60;
    const RunResult r = run_replay(c);
    for (std::size_t i = 0; i < r.final_states.size(); ++i) {
      EXPECT_NEAR(r.rate_weighted_error[i], r.final_states[i].alpha - r.initial_states[i].alpha, 1e-9)
          << to_string(m) << " region " << i;
    }
  }
}

TEST(RunReplay, StaticMethodsSkipAdaptationAndFixedRateSkipsMoment) {
  for (Method m : {Method::kCp, Method::kQcp}) {
    const RunResult r = run_replay(small_config(m));
    for (const auto& s : r.final_states) {
      EXPECT_EQ(s.alpha, 0.1);
      EXPECT_EQ(s.moment, 0.0);
    }
  }
  const RunResult aci = run_replay(small_config(Method::kAciFixed));
  bool moved = false;
  for (const auto& s : aci.final_states) {
    EXPECT_EQ(s.moment, 0.0);
    moved |= s.alpha != 0.1;
  }
  EXPECT_TRUE(moved);
}

TEST(RunReplay, FutureDemandDoesNotAffectEarlierIntervals) {
  ExperimentConfig c = small_config(Method::kContina);
  c.predictor.kind = PredictorKind::kOnlinePinballLinear;
  c.online_predictor = true;
  Dataset data = load_dataset(c);
  const RunResult base = run_replay(c, data);

  const StreamSplit parts = split(data.stream, c.train_frac, c.calib_frac);
  const std::int64_t deploy_t0 = parts.deployment.front().t;
  const std::int64_t cut = 40;  // deployment step whose demand is perturbed onwards
  for (auto& o : data.stream) {
    if (o.t >= deploy_t0 + cut) o.y = o.y * 3.0 + 17.0;
  }
  const RunResult perturbed = run_replay(c, data);
  for (std::size_t k = 0; k < base.ledger.records().size(); ++k) {
    const auto& a = base.ledger.records()[k];
    const auto& b = perturbed.ledger.records()[k];
    if (a.t < cut) {
      ASSERT_EQ(a.covered, b.covered) << "step " << a.t;
      ASSERT_EQ(a.length, b.length) << "step " << a.t;
    } else if (a.t == cut) {
      // Same interval, different realized value.
      ASSERT_EQ(a.length, b.length);
    }
  }
}

TEST(RunReplay, AuditRecordRederivesEmittedInterval) {
  for (Method m : {Method::kCp, Method::kQcp, Method::kAciFixed, Method::kContina}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      ExperimentConfig c = small_config(m);
      c.audit = true;
      c.seed = seed;
      c.clamp_nonnegative = seed == 2;
      const RunResult r = run_replay(c);
      ASSERT_TRUE(r.audit.has_value());
      const AuditRecord& a = *r.audit;
      EXPECT_EQ(rederive_interval(a, c), a.emitted);
      EXPECT_EQ(a.window_scores.size(), a.window_capacity);
      const auto& rec = r.ledger.records()[(static_cast<std::size_t>(a.step) * r.ledger.n_regions() + a.region) *
                                               kFlowCount + flow_index(a.flow)];
      EXPECT_EQ(interval_length(a.emitted).length, rec.length);
    }
  }
}

TEST(RunReplay, RegionRelabelingPermutesRegionalOutputs) {
  ExperimentConfig c = small_config(Method::kContina);
  const Dataset data = load_dataset(c);
  const std::size_t n = data.region_names.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[0], perm[1]);

  Dataset swapped = data;
  for (auto& o : swapped.stream) o.region = perm[o.region];
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[perm[i]] = data.region_names[i];
  swapped.region_names = names;

  const RunResult a = run_replay(c, data);
  const RunResult b = run_replay(c, swapped);
  const auto ca = regional_coverages(a.ledger);
  const auto cb = regional_coverages(b.ledger);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(ca[i], cb[perm[i]]);
    EXPECT_EQ(a.final_states[i].alpha, b.final_states[perm[i]].alpha);
  }
  EXPECT_EQ(average_coverage(a.ledger), average_coverage(b.ledger));
  EXPECT_EQ(min_regional_coverage(a.ledger).value, min_regional_coverage(b.ledger).value);
  EXPECT_NEAR(mean_length(a.ledger), mean_length(b.ledger), 1e-12);
}

TEST(RunReplay, MissingForecastRowAbortsNamingCell) {
  Dataset data = forced_miss_dataset(2, 40, 30);
  auto table = std::make_shared<ForecastTable>();
  for (const auto& o : data.stream) {
    if (!(o.t == 33 && o.region == 1 && o.flow == Flow::kOut)) table->insert({o.t, o.region, o.flow}, 0, 50);
  }
  data.forecasts = table;
  const ExperimentConfig c = file_backed_config(Method::kQcp);
  EXPECT_EQ(category_of([&] { run_replay(c, data); }), ErrorCategory::kMissingData);
  const auto msg = message_of([&] { run_replay(c, data); });
  EXPECT_NE(msg.find("t=33, region=1, flow=out"), std::string::npos) << msg;
}

TEST(RunReplay, EmptyCalibrationAborts) {
  Dataset data = forced_miss_dataset(2, 40, 40);
  // Region 1 has no rows in the calibration segment [20, 30).
  std::erase_if(data.stream, [](const Observation& o) { return o.region == 1 && o.t >= 20 && o.t < 30; });
  const ExperimentConfig c = file_backed_config(Method::kQcp);
  EXPECT_EQ(category_of([&] { run_replay(c, data); }), ErrorCategory::kEmptyCalibration);
}

TEST(RunReplay, InvalidConfigurationRejected) {
  ExperimentConfig c = small_config(Method::kAciFixed);
  c.aci_gamma = 0.0;
  EXPECT_EQ(category_of([&] { run_replay(c); }), ErrorCategory::kInvalidArgument);
  c = small_config();
  c.hp.beta = 1.5;
  EXPECT_EQ(category_of([&] { run_replay(c); }), ErrorCategory::kInvalidArgument);
  c = small_config();
  c.predictor.kind = PredictorKind::kFileBacked;
  EXPECT_EQ(category_of([&] { c.validate(); }), ErrorCategory::kInvalidArgument);
}

TEST(RunReplay, CpUsesSymmetricBands) {
  ExperimentConfig c = small_config(Method::kCp);
  c.audit = true;
  const RunResult r = run_replay(c);
  ASSERT_TRUE(r.audit);
  const auto& a = *r.audit;
  const double mid = 0.5 * (a.forecast_lo + a.forecast_hi);
  EXPECT_NEAR(a.emitted.up() - mid, mid - a.emitted.low(), 1e-9);
  for (double s : a.window_scores) EXPECT_GE(s, 0.0);
}

// ---------------------------------------------------------------------------
// ingest_csv

TEST(IngestCsv, WellFormedRows) {
  TempDir dir;
  const auto p = dir.write("d.csv", "t,region,inflow,outflow\n0,7,3,4\n1,7,5,6\n2,7,8,9\n");
  const Dataset d = ingest_csv(p, "", {0.0});
  ASSERT_EQ(d.stream.size(), 3u * kFlowCount);
  EXPECT_EQ(d.region_names, std::vector<std::string>{"7"});
  EXPECT_EQ(d.stream[0].y, 3.0);
  EXPECT_EQ(d.stream[5].y, 9.0);
  // Causal lags: zero before any history, then padded with the oldest value.
  EXPECT_EQ(d.stream[0].lags, Lags{});
  EXPECT_EQ(d.stream[4].lags, (Lags{5, 3, 3, 3, 3, 3}));
}

TEST(IngestCsv, NegativeDemandRejectedWithLineNumber) {
  TempDir dir;
  const auto p = dir.write("d.csv", "t,region,inflow,outflow\n0,a,3,4\n1,a,-5,6\n");
  EXPECT_EQ(category_of([&] { ingest_csv(p, ""); }), ErrorCategory::kInvalidInput);
  EXPECT_NE(message_of([&] { ingest_csv(p, ""); }).find("d.csv:3"), std::string::npos);
}

TEST(IngestCsv, DuplicateCellAbortsNamingBothLines) {
  TempDir dir;
  const auto p = dir.write("d.csv", "t,region,inflow,outflow\n0,a,3,4\n1,a,3,4\n0,a,1,1\n");
  const auto msg = message_of([&] { ingest_csv(p, ""); });
  EXPECT_NE(msg.find("duplicate (t=0, region=a)"), std::string::npos) << msg;
  EXPECT_NE(msg.find(":4:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(IngestCsv, MalformedRowsReportLine) {
  TempDir dir;
  const auto short_row = dir.write("a.csv", "t,region,inflow,outflow\n0,a,3,4\n1,a,3\n");
  EXPECT_NE(message_of([&] { ingest_csv(short_row, ""); }).find("a.csv:3"), std::string::npos);
  const auto text = dir.write("b.csv", "t,region,inflow,outflow\n0,a,three,4\n");
  EXPECT_NE(message_of([&] { ingest_csv(text, ""); }).find("b.csv:2"), std::string::npos);
  const auto header = dir.write("c.csv", "time,region,in,out\n0,a,3,4\n");
  EXPECT_EQ(category_of([&] { ingest_csv(header, ""); }), ErrorCategory::kInvalidInput);
  const auto mixed = dir.write("e.csv", "t,region,inflow,outflow\n0,a,3,4\n2024-01-01 01:00,a,3,4\n");
  EXPECT_NE(message_of([&] { ingest_csv(mixed, ""); }).find("e.csv:3"), std::string::npos);
  EXPECT_EQ(category_of([&] { ingest_csv((dir / "missing.csv").string(), ""); }), ErrorCategory::kIo);
}

TEST(IngestCsv, SortsChronologicallyAndOrdersNumericRegions) {
  TempDir dir;
  const auto p = dir.write("d.csv",
                           "t,region,inflow,outflow\n"
                           "1,10,5,5\n0,10,4,4\n1,9,7,7\n0,9,6,6\n");
  const Dataset d = ingest_csv(p, "", {0.0});
  EXPECT_EQ(d.region_names, (std::vector<std::string>{"9", "10"}));
  ASSERT_EQ(d.stream.size(), 8u);
  for (std::size_t k = 1; k < d.stream.size(); ++k) EXPECT_LE(d.stream[k - 1].t, d.stream[k].t);
  EXPECT_EQ(d.stream[0].y, 6.0);  // t=0, region "9", inflow
}

TEST(IngestCsv, FiltersLowDemandRegions) {
  TempDir dir;
  std::string body = "t,region,inflow,outflow\n";
  for (int t = 0; t < 10; ++t) body += fmt::format("{},quiet,1,1\n{},busy,5,3\n{},edge,2,2\n", t, t, t);
  const Dataset d = ingest_csv(dir.write("d.csv", body), "");
  EXPECT_EQ(d.region_names, (std::vector<std::string>{"busy", "edge"}));
  EXPECT_EQ(d.dropped_region_names, std::vector<std::string>{"quiet"});
  for (const auto& o : d.stream) EXPECT_LT(o.region, 2u);
}

TEST(IngestCsv, GapPolicies) {
  TempDir dir;
  std::string body = "t,region,inflow,outflow\n";
  for (int t = 0; t < 72; ++t) {
    if (t == 30) continue;  // missing hour in day 1
    body += fmt::format("{},a,5,5\n", t);
    if (t != 60) body += fmt::format("{},b,6,6\n", t);  // missing cell in day 2
  }
  const auto p = dir.write("d.csv", body);
  EXPECT_EQ(category_of([&] { ingest_csv(p, ""); }), ErrorCategory::kStructural);
  const Dataset d = ingest_csv(p, "", {2.0, false, GapPolicy::kDropDay});
  ASSERT_FALSE(d.warnings.empty());
  EXPECT_NE(d.warnings[0].find("gap"), std::string::npos);
  EXPECT_EQ(d.stream.size(), 24u * 2 * kFlowCount);
  for (const auto& o : d.stream) EXPECT_LT(o.t, 24);
}

TEST(IngestCsv, DatedTimestampsBecomeHours) {
  TempDir dir;
  const auto p = dir.write("d.csv",
                           "t,region,inflow,outflow\n"
                           "2024-01-31 23:00,a,3,3\n2024-02-01T00:00:00,a,4,4\n2024-02-01 01,a,5,5\n");
  const Dataset d = ingest_csv(p, "", {0.0});
  EXPECT_TRUE(d.dated);
  ASSERT_EQ(d.stream.size(), 6u);
  EXPECT_EQ(d.stream[2].t - d.stream[0].t, 1);
  EXPECT_EQ(d.stream[0].t % 24, 23);
  const auto bad = dir.write("e.csv", "t,region,inflow,outflow\n2024-01-31 23:30,a,3,3\n");
  EXPECT_NE(message_of([&] { ingest_csv(bad, ""); }).find("whole hours"), std::string::npos);
}

TEST(IngestCsv, LoadsForecastsAgainstSurvivingRegions) {
  TempDir dir;
  const auto demand = dir.write("d.csv", "t,region,inflow,outflow\n0,a,3,3\n1,a,4,4\n0,z,0,0\n1,z,0,0\n");
  const auto fc = dir.write("f.csv", "t,region,flow,q_lo,q_hi\n0,a,in,1,5\n0,z,in,0,1\n");
  const Dataset d = ingest_csv(demand, fc);
  ASSERT_TRUE(d.forecasts);
  EXPECT_EQ(d.forecasts->size(), 1u);
  EXPECT_NE(d.forecasts->find({0, 0, Flow::kIn}), nullptr);
}

TEST(IngestCsv, WrittenStreamReingestsIdentically) {
  StreamSpec spec;
  spec.n_regions = 3;
  spec.horizon = 50;
  auto stream = generate(spec);
  TempDir dir;
  write_demand_csv(dir / "d.csv", stream);
  const Dataset d = ingest_csv((dir / "d.csv").string(), "", {0.0});
  ASSERT_EQ(d.stream.size(), stream.size());
  for (std::size_t k = 0; k < stream.size(); ++k) {
    ASSERT_EQ(d.stream[k].y, stream[k].y);
    ASSERT_EQ(d.stream[k].t, stream[k].t);
    if (stream[k].t >= static_cast<std::int64_t>(kLagCount)) ASSERT_EQ(d.stream[k].lags, stream[k].lags);
  }
}

// ---------------------------------------------------------------------------
// configuration

TEST(Config, ApplySettingCoversKeysAndRejectsUnknown) {
  ExperimentConfig c;
  apply_setting(c, "method", "aci_fixed");
  apply_setting(c, "gamma", "0.02");
  apply_setting(c, "alpha", "0.2");
  apply_setting(c, "regime", "abrupt_shift");
  apply_setting(c, "shift_scale", "3");
  apply_setting(c, "seed", "99");
  EXPECT_EQ(c.method, Method::kAciFixed);
  EXPECT_EQ(c.aci_gamma, 0.02);
  EXPECT_EQ(c.hp.target_alpha, 0.2);
  ASSERT_TRUE(std::holds_alternative<AbruptShift>(c.synthetic.regime));
  EXPECT_EQ(std::get<AbruptShift>(c.synthetic.regime).scale, 3.0);
  EXPECT_EQ(c.seed, 99u);
  apply_setting(c, "dependence_k", "6");
  EXPECT_EQ(std::get<KDependent>(c.synthetic.regime).k, 6u);
  EXPECT_EQ(category_of([&] { apply_setting(c, "colour", "red"); }), ErrorCategory::kInvalidArgument);
  EXPECT_EQ(category_of([&] { apply_setting(c, "alpha", "lots"); }), ErrorCategory::kInvalidArgument);
  EXPECT_EQ(category_of([&] { apply_setting(c, "method", "dtaci"); }), ErrorCategory::kInvalidArgument);
}

TEST(Config, ManifestTextRoundTrips) {
  for (const Regime& regime : {Regime{Stationary{}}, Regime{AbruptShift{100, 1.7}}, Regime{Drift{0.001}},
                               Regime{Heterogeneous{0.4, 2.5, 48}}, Regime{KDependent{24}}}) {
    ExperimentConfig c = small_config(Method::kAciFixed);
    c.synthetic.regime = regime;
    c.hp.epsilon = 3.3546262790251185e-04;
    c.aci_gamma = 0.0123;
    c.clamp_nonnegative = true;
    TempDir dir;
    const auto p = dir.write("m.toml", to_manifest_text(c));
    const ExperimentConfig back = load_config_file(p);
    EXPECT_EQ(to_manifest_text(back), to_manifest_text(c));
    EXPECT_EQ(back.hp.epsilon, c.hp.epsilon);
    EXPECT_EQ(back.synthetic.regime.index(), regime.index());
  }
}

TEST(Config, FileValuesAreOverriddenLater) {
  TempDir dir;
  const auto p = dir.write("c.toml", "method = \"qcp\"\nalpha = 0.2\nwindow = 50\n");
  ExperimentConfig c = load_config_file(p);
  EXPECT_EQ(c.method, Method::kQcp);
  EXPECT_EQ(c.window, 50u);
  apply_setting(c, "alpha", "0.05");
  EXPECT_EQ(c.hp.target_alpha, 0.05);
  const auto bad = dir.write("b.toml", "[other]\nalpha = 0.2\n");
  EXPECT_EQ(category_of([&] { load_config_file(bad); }), ErrorCategory::kInvalidArgument);
  EXPECT_EQ(category_of([&] { load_config_file(dir / "none.toml"); }), ErrorCategory::kIo);
}

// ---------------------------------------------------------------------------
// reports

TEST(WriteReport, AllCoveredLedgerSummarizesToOne) {
  RunResult r;
  r.ledger = RunLedger(2, 8);
  for (std::int64_t t = 0; t < 8; ++t) {
    for (std::size_t i = 0; i < 2; ++i) {
      for (Flow f : {Flow::kIn, Flow::kOut}) r.ledger.add({t, i, f, true, 4.0, false});
    }
  }
  r.initial_states = r.final_states = {RegionAdaptState{0}, RegionAdaptState{1}};
  r.rate_weighted_error = {0.0, 0.0};
  r.info.region_names = {"a", "b"};
  r.info.step_times = {0, 1, 2, 3, 4, 5, 6, 7};
  TempDir dir;
  write_report(r, ExperimentConfig{}, dir.path());
  const auto rows = read_csv(dir / "summary.csv");
  ASSERT_EQ(rows.size(), 6u);  // header, 4 epochs, AVG
  EXPECT_EQ(rows[0][0], "period");
  EXPECT_EQ(rows[5][0], "AVG");
  EXPECT_EQ(rows[5][2], "1.00000000");
  EXPECT_EQ(rows[5][4], "4.00000000");
}

TEST(WriteReport, SummaryCoverageMatchesDailyFile) {
  ExperimentConfig c = small_config();
  c.synthetic.horizon = 24 * 41 + 5;  // partial trailing day
  const RunResult r = run_replay(c);
  TempDir dir;
  write_report(r, c, dir.path());
  const auto summary = read_csv(dir / "summary.csv");
  const auto daily = read_csv(dir / "daily_region_coverage.csv");
  long covered = 0, cells = 0;
  double length_sum = 0.0;
  for (std::size_t k = 1; k < daily.size(); ++k) {
    covered += std::stol(daily[k][2]);
    cells += std::stol(daily[k][3]);
  }
  EXPECT_EQ(static_cast<std::size_t>(cells), r.ledger.records().size());
  EXPECT_EQ(summary.back()[2], fmt::format("{:.8f}", static_cast<double>(covered) / cells));
  EXPECT_EQ(summary.back()[2], fmt::format("{:.8f}", average_coverage(r.ledger)));
  (void)length_sum;

  // Bound column: c / steps for the adaptive method.
  const double c1 = theorem1_constant(c.hp).c;
  EXPECT_EQ(summary.back()[6], fmt::format("{:.8f}", c1 / r.ledger.horizon()));
}

TEST(WriteReport, ManifestReplayReproducesSummary) {
  ExperimentConfig c = small_config(Method::kAciFixed);
  c.aci_gamma = 0.01;
  c.synthetic.regime = Drift{0.0005};
  TempDir dir;
  write_report(run_replay(c), c, dir / "first");
  const ExperimentConfig again = load_config_file(dir / "first" / "run_manifest.toml");
  write_report(run_replay(again), again, dir / "second");
  for (const char* f : {"summary.csv", "daily_region_coverage.csv", "daily_summary.csv", "regions.csv",
                        "ledger.csv", "run_manifest.toml"}) {
    EXPECT_EQ(slurp(dir / "first" / f), slurp(dir / "second" / f)) << f;
  }
}

TEST(WriteReport, ReportFromFilesMatchesDirectReport) {
  ExperimentConfig c = small_config();
  TempDir dir;
  write_report(run_replay(c), c, dir / "run");
  report_from_files(dir / "run" / "ledger.csv", dir / "run" / "run_manifest.toml", dir / "again");
  for (const char* f : {"summary.csv", "daily_region_coverage.csv", "daily_summary.csv"}) {
    EXPECT_EQ(slurp(dir / "run" / f), slurp(dir / "again" / f)) << f;
  }
}

TEST(WriteReport, DatedRunsReportCalendarMonths) {
  TempDir dir;
  std::string body = "t,region,inflow,outflow\n";
  // 2024-01-20 00:00 through 2024-02-29 23:00.
  for (int day = 0; day < 41; ++day) {
    for (int h = 0; h < 24; ++h) {
      const int month = day < 12 ? 1 : 2;
      const int dom = day < 12 ? 20 + day : day - 11;
      for (const char* region : {"r1", "r2"}) {
        body += fmt::format("2024-{:02d}-{:02d} {:02d}:00,{},{},{}\n", month, dom, h, region, 10 + (h * 7 + day) % 9,
                            12 + (h * 5 + day) % 7);
      }
    }
  }
  ExperimentConfig c;
  c.demand_csv = dir.write("d.csv", body);
  c.predictor.kind = PredictorKind::kSeasonalWindow;
  c.train_frac = 0.1;
  c.calib_frac = 0.1;
  const RunResult r = run_replay(c);
  EXPECT_TRUE(r.info.dated);
  write_report(r, c, dir / "out");
  const auto rows = read_csv(dir / "out" / "summary.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1][0], "2024-01");
  EXPECT_EQ(rows[2][0], "2024-02");
  EXPECT_EQ(std::stoi(rows[1][1]) + std::stoi(rows[2][1]), std::stoi(rows[3][1]));
  report_from_files(dir / "out" / "ledger.csv", dir / "out" / "run_manifest.toml", dir / "again");
  EXPECT_EQ(slurp(dir / "out" / "summary.csv"), slurp(dir / "again" / "summary.csv"));
}

TEST(WriteReport, UnwritablePathIsIoError) {
  TempDir dir;
  std::ofstream(dir / "blocker") << "x";
  const ExperimentConfig c = small_config();
  const RunResult r = run_replay(c);
  EXPECT_EQ(category_of([&] { write_report(r, c, dir / "blocker" / "sub"); }), ErrorCategory::kIo);
}

TEST(ReportingPeriods, FourEpochsWhenUndated) {
  RunInfo info;
  const auto p = reporting_periods(info, 10);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_EQ(p[0].begin, 0);
  EXPECT_EQ(p[0].end, 2);
  EXPECT_EQ(p[3].end, 10);
  EXPECT_EQ(reporting_periods(info, 3).size(), 3u);
}
