#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mergelens/error.hpp"
#include "mergelens/external_predictor.hpp"
#include "report.hpp"

namespace mergelens::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct PredictorKindName {
  PredictorKind kind;
  std::string_view name;
};

constexpr PredictorKindName kPredictorNames[] = {
    {PredictorKind::kNone, "none"},
    {PredictorKind::kConstantVelocity, "constant_velocity"},
    {PredictorKind::kConstantAcceleration, "constant_acceleration"},
    {PredictorKind::kFrozen, "frozen"},
    {PredictorKind::kReplay, "replay"},
    {PredictorKind::kExternal, "external"},
};

}  // namespace

std::string_view to_string(PredictorKind k) noexcept {
  for (const auto& p : kPredictorNames) {
    if (p.kind == k) return p.name;
  }
  return "none";
}

PredictorKind parse_predictor_kind(std::string_view text) {
  for (const auto& p : kPredictorNames) {
    if (p.name == text) return p.kind;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown predictor '" + std::string(text) + "'");
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read run config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, path.string() + ": expected an object");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "road") c.road = resolve(v.get<std::string>());
      else if (key == "inputs") {
        for (const auto& p : v) c.inputs.push_back(resolve(p.get<std::string>()));
      } else if (key == "columns") c.columns = resolve(v.get<std::string>());
      else if (key == "output") c.output = resolve(v.get<std::string>());
      else if (key == "split") c.split = parse_split_tag(v.get<std::string>());
      else if (key == "taus") c.analysis.taus = v.get<std::vector<double>>();
      else if (key == "bin_edges") c.analysis.edges = BinEdges(v.get<std::vector<double>>());
      else if (key == "conflict_halfwidth") c.analysis.conflict_halfwidth = v.get<double>();
      else if (key == "persistence") c.analysis.persistence = v.get<std::size_t>();
      else if (key == "pairing_lookback") c.analysis.pairing_lookback = v.get<double>();
      else if (key == "lane_change_scope") c.analysis.lane_change_scope = parse_lane_change_scope(v.get<std::string>());
      else if (key == "jobs") c.analysis.jobs = v.get<unsigned>();
      else if (key == "speed_floor") c.analysis.kinematics.speed_floor = v.get<double>();
      else if (key == "smoothing_window") c.analysis.kinematics.smoothing_window = v.get<double>();
      else if (key == "difference_window") c.analysis.kinematics.difference_window = v.get<double>();
      else if (key == "use_speed_column") c.analysis.kinematics.use_speed_column = v.get<bool>();
      else if (key == "predictor") c.predictor = parse_predictor_kind(v.get<std::string>());
      else if (key == "predictor_command") c.predictor_command = v.get<std::string>();
      else if (key == "predictor_timeout") c.predictor_timeout = v.get<double>();
      else if (key == "history_len") c.prediction.history_len = v.get<double>();
      else if (key == "horizon") c.prediction.horizon = v.get<double>();
      else if (key == "predict_merger") c.prediction.predict_merger = v.get<bool>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "count") c.count = v.get<std::size_t>();
      else if (key == "policy") c.policy = parse_courtesy_policy(v.get<std::string>());
      else if (key == "courtesy_probability") c.courtesy_probability = v.get<double>();
      else throw Error(ErrorCode::kInvalidConfig, path.string() + ": unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  return c;
}

std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

namespace {

struct Loaded {
  RoadConfig road;
  ColumnMap columns;
  std::vector<fs::path> paths;
  std::vector<Dataset> datasets;
  std::vector<std::string> sources;
};

Loaded load_inputs(const RunConfig& cfg) {
  if (cfg.road.empty()) throw Error(ErrorCode::kInvalidConfig, "no road config given (--road)");
  Loaded l;
  l.road = load_road_config(cfg.road);
  if (cfg.columns) l.columns = load_column_map(*cfg.columns);
  l.paths = expand_inputs(cfg.inputs);
  if (l.paths.empty()) throw Error(ErrorCode::kEmptyInput, "no input files given");
  l.datasets = load_datasets(l.paths, l.columns, l.road, cfg.analysis.jobs);
  if (cfg.split != SplitTag::kAll) {
    for (auto& ds : l.datasets) ds = select_split(ds, cfg.split);
  }
  for (const auto& p : l.paths) l.sources.push_back(p.string());
  return l;
}

json analysis_manifest(const RunConfig& cfg, const Loaded& l) {
  const auto& a = cfg.analysis;
  json inputs = json::array();
  for (const auto& p : l.paths) inputs.push_back({{"path", p.string()}, {"fnv1a64", file_digest(p)}});
  const ColumnMap& c = l.columns;
  return {
      {"tool", "mergelens"},
      {"version", kVersion},
      {"road", {{"path", cfg.road.string()}, {"fnv1a64", file_digest(cfg.road)},
                {"config", json::parse(road_config_to_text(l.road))}}},
      {"inputs", inputs},
      {"columns", {{"vehicle_id", c.vehicle_id}, {"frame_id", c.frame_id}, {"timestamp", c.timestamp},
                   {"local_x", c.local_x}, {"local_y", c.local_y}, {"lane_id", c.lane_id}, {"speed", c.speed}}},
      {"split", to_string(cfg.split)},
      {"taus", a.taus},
      {"bin_edges", a.edges.edges()},
      {"conflict_halfwidth", a.conflict_halfwidth},
      {"persistence_frames", a.persistence},
      {"pairing_lookback", a.pairing_lookback},
      {"lane_change_scope", std::string(to_string(a.lane_change_scope))},
      {"kinematics",
       {{"velocity_source", a.kinematics.use_speed_column ? "speed column" : "smoothed position difference"},
        {"speed_floor", a.kinematics.speed_floor},
        {"smoothing_window", a.kinematics.smoothing_window},
        {"difference_window", a.kinematics.difference_window}}},
      {"jobs", a.jobs},
  };
}

void write_tables(OutputDir& out, const std::string& prefix, const std::vector<TauResult>& taus) {
  for (const auto& t : taus) {
    out.write(prefix + "pass_first_tau" + tau_label(t.tau) + ".csv", binned_csv(t.pass_first));
    out.write(prefix + "lane_changes_tau" + tau_label(t.tau) + ".csv", binned_csv(t.lane_changes));
  }
  out.write(prefix + "conflict_summary.csv", conflict_csv(taus));
  out.write(prefix + "exclusions.csv", exclusions_csv(taus));
}

void finish_manifest(OutputDir& out, json manifest, const std::string& command) {
  manifest["command"] = command;
  json files = out.written();
  files.push_back("manifest.json");
  manifest["outputs"] = files;
  out.write("manifest.json", manifest.dump(2) + "\n");
}

std::size_t paired_count(const AnalysisResult& r) {
  return static_cast<std::size_t>(
      std::count_if(r.events.begin(), r.events.end(), [](const EventRecord& e) { return e.event.highway_id.has_value(); }));
}

std::unique_ptr<PredictorSource> make_source(const RunConfig& cfg, double dt) {
  switch (cfg.predictor) {
    case PredictorKind::kConstantVelocity: return make_baseline_source(BaselineKind::kConstantVelocity);
    case PredictorKind::kConstantAcceleration: return make_baseline_source(BaselineKind::kConstantAcceleration);
    case PredictorKind::kFrozen: return make_frozen_source();
    case PredictorKind::kReplay: return make_replay_source();
    case PredictorKind::kExternal: {
      if (cfg.predictor_command.empty()) {
        throw Error(ErrorCode::kInvalidConfig, "the external predictor needs --predictor-command");
      }
      wire::Hello hello;
      hello.dt = dt;
      hello.history_len = cfg.prediction.history_len;
      hello.horizon = cfg.prediction.horizon;
      return make_external_source(cfg.predictor_command, hello, ChannelOptions{cfg.predictor_timeout});
    }
    case PredictorKind::kNone: break;
  }
  throw Error(ErrorCode::kInvalidConfig, "compare needs a predictor (--predictor)");
}

}  // namespace

int cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  cfg.analysis.check();
  const Loaded l = load_inputs(cfg);
  const AnalysisResult r = analyze(l.datasets, cfg.analysis);
  OutputDir out(cfg.output);
  write_tables(out, "", r.taus);
  out.write("events.csv", events_csv(r.events, l.sources));
  json m = analysis_manifest(cfg, l);
  m["counts"] = {{"datasets", l.datasets.size()}, {"merge_events", r.events.size()}, {"paired", paired_count(r)}};
  finish_manifest(out, std::move(m), "analyze");
  log << "analyze: " << l.datasets.size() << " dataset(s), " << r.events.size() << " merge event(s), "
      << paired_count(r) << " paired; tables in " << cfg.output.string() << '\n';
  return kExitOk;
}

int cmd_events(const RunConfig& cfg, std::ostream& log) {
  cfg.analysis.check();
  const Loaded l = load_inputs(cfg);
  const AnalysisResult r = analyze(l.datasets, cfg.analysis);
  OutputDir out(cfg.output);
  out.write("events.csv", events_csv(r.events, l.sources));
  json m = analysis_manifest(cfg, l);
  m["counts"] = {{"datasets", l.datasets.size()}, {"merge_events", r.events.size()}, {"paired", paired_count(r)}};
  finish_manifest(out, std::move(m), "events");
  log << "events: " << r.events.size() << " merge event(s), " << paired_count(r) << " paired\n";
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& log) {
  cfg.analysis.check();
  if (cfg.predictor == PredictorKind::kNone) {
    throw Error(ErrorCode::kInvalidConfig, "compare needs a predictor (--predictor)");
  }
  const Loaded l = load_inputs(cfg);
  const auto source = make_source(cfg, l.road.frame_interval);
  const AnalysisResult r = analyze(l.datasets, cfg.analysis);
  const ComparisonResult c = evaluate_predictor(l.datasets, r.events, *source, cfg.analysis, cfg.prediction);

  OutputDir out(cfg.output);
  write_tables(out, "observed/", c.observed);
  write_tables(out, "predicted/", c.predicted);
  for (std::size_t k = 0; k < c.observed.size(); ++k) {
    const auto l_tau = tau_label(c.observed[k].tau);
    out.write("diff_pass_first_tau" + l_tau + ".csv", diff_csv(c.observed[k].pass_first, c.predicted[k].pass_first));
    out.write("diff_lane_changes_tau" + l_tau + ".csv",
              diff_csv(c.observed[k].lane_changes, c.predicted[k].lane_changes));
  }
  out.write("diff_conflict_summary.csv", diff_conflict_csv(c.observed, c.predicted));
  out.write("displacement.csv", displacement_csv(c.displacement, cfg.analysis.taus, l.road.frame_interval));
  std::ostringstream failures;
  failures << "reason,count\n";
  for (const auto& [reason, n] : c.failures) failures << reason << ',' << n << '\n';
  out.write("predictor_failures.csv", failures.str());
  out.write("events.csv", events_csv(r.events, l.sources));

  json m = analysis_manifest(cfg, l);
  m["predictor"] = {{"kind", std::string(to_string(cfg.predictor))},
                    {"name", source->name()},
                    {"command", cfg.predictor_command},
                    {"timeout_s", cfg.predictor_timeout}};
  m["prediction"] = {{"history_len", cfg.prediction.history_len},
                     {"horizon", cfg.prediction.horizon},
                     {"issued_at", "t_m - tau"},
                     {"predict_merger", cfg.prediction.predict_merger}};
  std::size_t failed = 0;
  for (const auto& [reason, n] : c.failures) failed += n;
  m["counts"] = {{"datasets", l.datasets.size()}, {"merge_events", r.events.size()}, {"paired", paired_count(r)},
                 {"prediction_requests", c.requests}, {"failed_requests", failed}};
  finish_manifest(out, std::move(m), "compare");

  for (const auto& msg : c.failure_messages) log << "compare: prediction failed: " << msg << '\n';
  log << "compare: " << c.requests << " request(s), " << failed << " failed; tables in " << cfg.output.string()
      << '\n';
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  if (cfg.count == 0) throw Error(ErrorCode::kInvalidArgument, "--count must be at least 1");
  CorpusRanges ranges;
  ranges.policy = cfg.policy;
  ranges.courtesy_probability = cfg.courtesy_probability;
  if (!cfg.road.empty()) ranges.road = load_road_config(cfg.road);
  const auto corpus = generate_corpus(cfg.count, cfg.seed, ranges);

  OutputDir out(cfg.output);
  std::vector<GroundTruth> truths;
  std::vector<std::string> files;
  json scripts = json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scenario_%04zu.csv", i);
    out.write(name, dataset_to_csv(corpus[i].dataset));
    files.emplace_back(name);
    truths.push_back(corpus[i].truth);
    scripts.push_back(json::parse(script_to_json(corpus[i].script)));
  }
  out.write("road.json", road_config_to_text(corpus.front().dataset.road));
  out.write("scripts.json", scripts.dump(2) + "\n");
  out.write("ground_truth.json", ground_truth_to_json(truths, files));
  json m = {{"tool", "mergelens"},
            {"version", kVersion},
            {"count", cfg.count},
            {"seed", cfg.seed},
            {"policy", std::string(to_string(cfg.policy))},
            {"courtesy_probability", cfg.courtesy_probability},
            {"road", json::parse(road_config_to_text(ranges.road))}};
  finish_manifest(out, std::move(m), "synth");
  log << "synth: " << corpus.size() << " scenario(s) in " << cfg.output.string() << '\n';
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg, std::ostream& log) {
  const Loaded l = load_inputs(cfg);
  OutputDir out(cfg.output);
  json reports = json::array();
  std::size_t defects = 0;
  for (std::size_t i = 0; i < l.datasets.size(); ++i) {
    const ValidationReport rep = validate(l.datasets[i]);
    defects += rep.total_defects();
    reports.push_back({{"source", l.sources[i]}, {"report", json::parse(validation_report_to_json(rep))}});
    log << "validate: " << l.sources[i] << ": " << rep.vehicles << " vehicle(s), " << rep.samples << " sample(s), "
        << rep.total_defects() << " defect(s), " << rep.malformed_rows << " malformed row(s)\n";
  }
  out.write("validation.json", reports.dump(2) + "\n");
  (void)defects;
  return kExitOk;
}

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPredictorError:
    case ErrorCode::kProtocolViolation:
    case ErrorCode::kTimeout:
    case ErrorCode::kChildExited:
      return kExitPredictor;
    default:
      return kExitData;
  }
}

// Command-line values; each is applied only when given.
struct Flags {
  std::string config, road, columns, output, split, scope, predictor, predictor_command, policy;
  std::vector<std::string> inputs;
  std::vector<double> taus, bin_edges, bin_range;
  double bin_width = 0.5, conflict_halfwidth = 1.0, timeout = 10.0, history = 3.0, horizon = 5.0;
  double courtesy_probability = 1.0, speed_floor = 0.1, pairing_lookback = 5.0;
  std::size_t persistence = 10, count = 10;
  unsigned jobs = 1;
  std::uint64_t seed = 42;
  bool use_speed_column = false, predict_merger = false;
};

void add_data_options(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "Run configuration file (JSON); flags override it");
  sub.add_option("--road", f.road, "Road configuration file");
  sub.add_option("-i,--input", f.inputs, "Trajectory tables or directories of them");
  sub.add_option("--columns", f.columns, "Column map file");
  sub.add_option("-o,--out", f.output, "Output directory");
  sub.add_option("--split", f.split, "train, validation, test, all, or '+'-joined");
  sub.add_option("-j,--jobs", f.jobs, "Worker threads");
}

void add_analysis_options(CLI::App& sub, Flags& f) {
  sub.add_option("--taus", f.taus, "Look-back windows in seconds")->delimiter(',');
  sub.add_option("--bin-edges", f.bin_edges, "Explicit lead-time bin edges")->delimiter(',');
  sub.add_option("--bin-width", f.bin_width, "Uniform bin width over --bin-range");
  sub.add_option("--bin-range", f.bin_range, "Lowest and highest edge")->expected(2);
  sub.add_option("--conflict-halfwidth", f.conflict_halfwidth, "Half-width of the conflict zone in seconds");
  sub.add_option("--persistence", f.persistence, "Frames a new lane must be held");
  sub.add_option("--pairing-lookback", f.pairing_lookback, "Seconds before t_m at which vehicles are paired");
  sub.add_option("--lane-change-scope", f.scope, "paired or neighborhood");
  sub.add_option("--speed-floor", f.speed_floor, "Minimum speed for a usable time-to-arrival");
  sub.add_flag("--use-speed-column", f.use_speed_column, "Take speeds from the table instead of positions");
}

bool given(const CLI::App& sub, const char* name) { return sub.count(name) > 0; }

RunConfig resolve(const CLI::App& sub, const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (given(sub, "--road")) c.road = f.road;
  if (given(sub, "--input")) c.inputs.assign(f.inputs.begin(), f.inputs.end());
  if (given(sub, "--columns")) c.columns = fs::path(f.columns);
  if (given(sub, "--out")) c.output = f.output;
  if (given(sub, "--split")) c.split = parse_split_tag(f.split);
  if (given(sub, "--jobs")) c.analysis.jobs = f.jobs;
  if (sub.get_option_no_throw("--taus") == nullptr) return c;
  if (given(sub, "--taus")) c.analysis.taus = f.taus;
  if (given(sub, "--bin-edges")) c.analysis.edges = BinEdges(f.bin_edges);
  if (given(sub, "--bin-width") || given(sub, "--bin-range")) {
    const double lo = f.bin_range.size() == 2 ? f.bin_range[0] : -5.0;
    const double hi = f.bin_range.size() == 2 ? f.bin_range[1] : 5.0;
    c.analysis.edges = BinEdges::uniform(lo, hi, f.bin_width);
  }
  if (given(sub, "--conflict-halfwidth")) c.analysis.conflict_halfwidth = f.conflict_halfwidth;
  if (given(sub, "--persistence")) c.analysis.persistence = f.persistence;
  if (given(sub, "--pairing-lookback")) c.analysis.pairing_lookback = f.pairing_lookback;
  if (given(sub, "--lane-change-scope")) c.analysis.lane_change_scope = parse_lane_change_scope(f.scope);
  if (given(sub, "--speed-floor")) c.analysis.kinematics.speed_floor = f.speed_floor;
  if (given(sub, "--use-speed-column")) c.analysis.kinematics.use_speed_column = true;
  if (sub.get_option_no_throw("--predictor") == nullptr) return c;
  if (given(sub, "--predictor")) c.predictor = parse_predictor_kind(f.predictor);
  if (given(sub, "--predictor-command")) {
    c.predictor_command = f.predictor_command;
    if (!given(sub, "--predictor")) c.predictor = PredictorKind::kExternal;
  }
  if (given(sub, "--timeout")) c.predictor_timeout = f.timeout;
  if (given(sub, "--history")) c.prediction.history_len = f.history;
  if (given(sub, "--horizon")) c.prediction.horizon = f.horizon;
  if (given(sub, "--predict-merger")) c.prediction.predict_merger = true;
  return c;
}

RunConfig resolve_synth(const CLI::App& sub, const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (given(sub, "--road")) c.road = f.road;
  if (given(sub, "--out")) c.output = f.output;
  if (given(sub, "--count")) c.count = f.count;
  if (given(sub, "--seed")) c.seed = f.seed;
  if (given(sub, "--policy")) c.policy = parse_courtesy_policy(f.policy);
  if (given(sub, "--courtesy-probability")) c.courtesy_probability = f.courtesy_probability;
  return c;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Merging-behavior analytics for highway trajectory data", "mergelens"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Flags f;

  auto* analyze_cmd = app.add_subcommand("analyze", "Bin pass-first and lane-change outcomes by lead time");
  add_data_options(*analyze_cmd, f);
  add_analysis_options(*analyze_cmd, f);

  auto* compare_cmd = app.add_subcommand("compare", "Compare observed behavior with a predictor's");
  add_data_options(*compare_cmd, f);
  add_analysis_options(*compare_cmd, f);
  compare_cmd->add_option("--predictor", f.predictor,
                          "none, constant_velocity, constant_acceleration, frozen, replay or external");
  compare_cmd->add_option("--predictor-command", f.predictor_command,
                          "Shell command of an external predictor; {input} becomes the scene file");
  compare_cmd->add_option("--timeout", f.timeout, "Seconds to wait for each external response");
  compare_cmd->add_option("--history", f.history, "Seconds of history sent with each request");
  compare_cmd->add_option("--horizon", f.horizon, "Seconds predicted");
  compare_cmd->add_flag("--predict-merger", f.predict_merger, "Also predict the merging vehicle");

  auto* events_cmd = app.add_subcommand("events", "List merge events with their pairing and lead times");
  add_data_options(*events_cmd, f);
  add_analysis_options(*events_cmd, f);

  auto* validate_cmd = app.add_subcommand("validate", "Report gaps, duplicates and out-of-road samples");
  add_data_options(*validate_cmd, f);

  auto* synth_cmd = app.add_subcommand("synth", "Generate a scripted scenario corpus with ground truth");
  synth_cmd->add_option("--config", f.config, "Run configuration file (JSON); flags override it");
  synth_cmd->add_option("--road", f.road, "Road configuration file (default: built-in straight road)");
  synth_cmd->add_option("-o,--out", f.output, "Output directory");
  synth_cmd->add_option("-n,--count", f.count, "Number of scenarios");
  synth_cmd->add_option("--seed", f.seed, "Random seed");
  synth_cmd->add_option("--policy", f.policy, "inert, courtesy_always or courtesy_in_conflict");
  synth_cmd->add_option("--courtesy-probability", f.courtesy_probability,
                        "Yield probability for courtesy_in_conflict");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunConfig cfg;
  CLI::App* sub = app.get_subcommands().front();
  try {
    cfg = sub == synth_cmd ? resolve_synth(*sub, f) : resolve(*sub, f);
  } catch (const Error& e) {
    err << "mergelens: " << e.what() << '\n';
    return kExitUsage;
  }

  auto usage = [&](const std::string& msg) {
    err << "mergelens " << sub->get_name() << ": " << msg << '\n';
    return kExitUsage;
  };
  if (sub != synth_cmd) {
    if (cfg.road.empty()) return usage("a road config is required (--road)");
    if (cfg.inputs.empty()) return usage("at least one input is required (--input)");
  }
  if (sub == compare_cmd && cfg.predictor == PredictorKind::kNone) return usage("a predictor is required (--predictor)");
  if (sub == compare_cmd && cfg.predictor == PredictorKind::kExternal && cfg.predictor_command.empty()) {
    return usage("the external predictor needs --predictor-command");
  }
  if (sub == synth_cmd && cfg.count == 0) return usage("--count must be at least 1");

  try {
    if (sub == analyze_cmd) return cmd_analyze(cfg, out);
    if (sub == compare_cmd) return cmd_compare(cfg, out);
    if (sub == events_cmd) return cmd_events(cfg, out);
    if (sub == validate_cmd) return cmd_validate(cfg, out);
    if (sub == synth_cmd) return cmd_synth(cfg, out);
  } catch (const Error& e) {
    err << "mergelens: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "mergelens: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace mergelens::cli
