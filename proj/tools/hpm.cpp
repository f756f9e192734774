// Command-line front end for the hpm library. Every subcommand is a thin
// wrapper over library calls plus a provenance record, so runs are exactly
// reproducible from the recorded parameters and input fingerprints.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpm/error.hpp"
#include "hpm/evaluation.hpp"
#include "hpm/features.hpp"
#include "hpm/geoindex.hpp"
#include "hpm/hash.hpp"
#include "hpm/ingest.hpp"
#include "hpm/models/model.hpp"
#include "hpm/repeat_sales.hpp"
#include "hpm/selection.hpp"
#include "hpm/synth.hpp"

namespace fs = std::filesystem;
using hpm::json;

namespace {

const char* kVersionText =
    "hpm 1.0.0\n"
    "schemas: feature_matrix=1 cv_report=1 model=1 index_snapshot=1 report=1 selection=1 truth=1\n";

json schema_versions() {
  return json{{"feature_matrix", 1}, {"cv_report", 1}, {"model", 1},    {"index_snapshot", 1},
              {"report", 1},         {"selection", 1}, {"truth", 1}};
}

const char* errc_name(hpm::Errc c) {
  switch (c) {
    case hpm::Errc::usage: return "usage";
    case hpm::Errc::io: return "io";
    case hpm::Errc::schema: return "schema";
    case hpm::Errc::data: return "data";
  }
  return "internal";
}

void print_error(int code, const std::string& kind, const std::string& message) {
  json err{{"error", json{{"code", code}, {"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << std::endl;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) hpm::fail(hpm::Errc::io, "cannot open output file: " + path);
  out << j.dump(2) << '\n';
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) hpm::fail(hpm::Errc::io, "missing input file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    hpm::fail(hpm::Errc::schema, "JSON parse error in " + path + ": " + e.what());
  }
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    hpm::fail(hpm::Errc::usage, "cannot parse " + what + " as JSON: " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find(',', start);
    const std::string item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!item.empty()) out.push_back(item);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

// One provenance record per command, written next to the primary output.
// Parallelism flags are deliberately not recorded: they must not change any
// output byte.
json run_record(const std::string& command, const json& params,
                const std::vector<std::pair<std::string, std::string>>& inputs,
                const std::vector<std::string>& outputs) {
  json jin = json::object();
  for (const auto& [label, path] : inputs) {
    if (path.empty()) continue;
    jin[label] = json{{"path", path}, {"fingerprint", hpm::file_fingerprint(path)}};
  }
  return json{{"command", command}, {"params", params},           {"inputs", jin},
              {"outputs", outputs}, {"schemas", schema_versions()}};
}

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".json"; }

hpm::DatasetKind cli_kind(const std::string& s) {
  if (s == "311") return hpm::DatasetKind::complaint311;
  if (s == "crime") return hpm::DatasetKind::crime;
  if (s == "taxi") return hpm::DatasetKind::taxi_pickup;
  hpm::fail(hpm::Errc::usage, "kind must be one of 311, crime, taxi; got '" + s + "'");
}

hpm::ModelSpec resolve_model_spec(const std::string& model, const std::string& params_text) {
  json j = model.empty() || model[0] != '{' ? json{{"kind", model}} : parse_json_text(model, "--model");
  if (!params_text.empty()) {
    json p = parse_json_text(params_text, "--params");
    if (!p.is_object()) hpm::fail(hpm::Errc::usage, "--params must be a JSON object");
    for (auto it = p.begin(); it != p.end(); ++it) j[it.key()] = it.value();
  }
  return hpm::ModelSpec::from_json(j);
}

// --- subcommand option bags ---

struct SynthOpts {
  std::string config, out;
};

struct IngestOpts {
  std::string sales, pluto, config, out;
  std::vector<std::string> events, kinds;
};

struct IndexOpts {
  std::vector<std::string> events;
  std::string config, out;
};

struct FeatureOpts {
  std::string sales, index_dir, census, config, out;
  std::vector<std::string> index_files;
  std::string blocks = "hc,d,311,crime,taxi,tc";
  int jobs = 1;
};

struct FitOpts {
  std::string model = "ols", params, features, out;
};

struct CvOpts {
  std::string features, model = "ols", params, scheme = "standard", out;
  std::string aggregation = "per_fold";
  int k = 5, reps = 20;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct SelectOpts {
  std::string features, out;
  std::string alpha_grid = "1e-6:1e-1:0.5dex";
};

struct RepeatOpts {
  std::string sales, config, index_out, pairs_out;
};

struct ProfileOpts {
  std::string events, kind, config, out;
  std::string group = "tract_id";
};

struct ReportOpts {
  std::vector<std::string> cv;
  std::string out_json, out_csv;
};

// --- subcommand runners ---

int run_synth(const SynthOpts& o) {
  const hpm::SynthConfig cfg = hpm::SynthConfig::load(o.config);
  const hpm::SynthCity city = hpm::generate_city(cfg);
  hpm::write_city(city, o.out);
  const auto out = [&](const char* name) { return (fs::path(o.out) / name).string(); };
  write_json_file(out("run.json"),
                  run_record("synth", cfg.to_json(), {{"config", o.config}},
                             {out("sales.csv"), out("pluto.csv"), out("311.csv"), out("crime.csv"), out("taxi.csv"),
                              out("census.csv"), out("config.json"), out("truth.json"), out("synth_config.json")}));
  json summary{{"out", o.out},
               {"sales_rows", city.sales_rows.size()},
               {"properties", city.properties.size()},
               {"repeat_pairs", city.n_repeat_pairs},
               {"events", city.events.size()}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_ingest(const IngestOpts& o) {
  if (o.events.size() != o.kinds.size())
    hpm::fail(hpm::Errc::usage, "--events and --kind must be given the same number of times");
  if (!o.sales.empty() && o.pluto.empty()) hpm::fail(hpm::Errc::usage, "--sales requires --pluto");
  if (o.sales.empty() && o.events.empty()) hpm::fail(hpm::Errc::usage, "nothing to ingest: give --sales or --events");
  const hpm::IngestConfig cfg = hpm::IngestConfig::load(o.config);
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) hpm::fail(hpm::Errc::io, "cannot create output directory " + o.out);
  const auto out = [&](const std::string& name) { return (fs::path(o.out) / name).string(); };

  json report = json::object();
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> inputs{{"config", o.config}};
  json summary = json::object();

  if (!o.sales.empty()) {
    const hpm::PropertyTable props = hpm::parse_properties(o.pluto, cfg);
    const hpm::ParsedSales parsed = hpm::parse_sales(o.sales, cfg);
    auto [sales, rep] = hpm::clean_sales(parsed.records, props, cfg);
    hpm::write_cleaned_sales(out("cleaned_sales.csv"), sales);
    report["cleaning"] = hpm::cleaning_report_json(rep);
    report["sales_row_errors"] = hpm::row_errors_json(parsed.errors);
    report["pluto_row_errors"] = hpm::row_errors_json(props.errors);
    outputs.push_back(out("cleaned_sales.csv"));
    inputs.emplace_back("sales", o.sales);
    inputs.emplace_back("pluto", o.pluto);
    summary["cleaned_sales"] = sales.size();
  }

  json events_report = json::object();
  for (std::size_t i = 0; i < o.events.size(); ++i) {
    const hpm::DatasetKind kind = cli_kind(o.kinds[i]);
    const hpm::ParsedEvents parsed = hpm::parse_events(o.events[i], kind, cfg);
    const std::string name = "events_" + o.kinds[i] + ".csv";
    hpm::write_events_csv(out(name), parsed.events);
    events_report[o.kinds[i]] = parsed.report.to_json();
    outputs.push_back(out(name));
    inputs.emplace_back("events_" + o.kinds[i], o.events[i]);
    summary["events_" + o.kinds[i]] = parsed.events.size();
  }
  if (!events_report.empty()) report["events"] = std::move(events_report);

  write_json_file(out("ingest_report.json"), report);
  outputs.push_back(out("ingest_report.json"));
  json params{{"out", o.out}};
  if (!o.kinds.empty()) params["kinds"] = o.kinds;
  write_json_file(out("run.json"), run_record("ingest", params, inputs, outputs));
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_index(const IndexOpts& o) {
  if (o.events.empty()) hpm::fail(hpm::Errc::usage, "--events is required");
  const hpm::IngestConfig cfg = hpm::IngestConfig::load(o.config);
  std::vector<hpm::EventRecord> events;
  std::vector<std::pair<std::string, std::string>> inputs{{"config", o.config}};
  for (std::size_t i = 0; i < o.events.size(); ++i) {
    auto part = hpm::read_events_csv(o.events[i]);
    events.insert(events.end(), part.begin(), part.end());
    inputs.emplace_back("events_" + std::to_string(i), o.events[i]);
  }
  const auto index = hpm::SpatioTemporalIndex::build(std::move(events), cfg.aggregation.radius_m);
  index.save(o.out);
  write_json_file(o.out + ".run.json",
                  run_record("index", json{{"cell_size", cfg.aggregation.radius_m}}, inputs, {o.out}));
  json summary{{"events", index.events().size()}, {"out", o.out}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_features(const FeatureOpts& o) {
  const hpm::IngestConfig cfg = hpm::IngestConfig::load(o.config);
  const auto sales = hpm::read_cleaned_sales(o.sales, cfg.key_mode);

  const auto block_list = split_list(o.blocks);
  const std::set<std::string> blocks(block_list.begin(), block_list.end());
  if (blocks.empty()) hpm::fail(hpm::Errc::usage, "--blocks must name at least one block");
  const hpm::FeatureSchema schema = hpm::FeatureSchema::make(blocks, cfg);

  // Event index: either one directory of snapshots or explicit files; the
  // shards are merged into a single in-memory index.
  std::vector<std::string> index_files = o.index_files;
  if (!o.index_dir.empty()) {
    if (!fs::is_directory(o.index_dir)) hpm::fail(hpm::Errc::io, "--index-dir is not a directory: " + o.index_dir);
    for (const auto& entry : fs::directory_iterator(o.index_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".idx") index_files.push_back(entry.path().string());
    std::sort(index_files.begin(), index_files.end());
  }
  const bool needs_events = blocks.count("311") || blocks.count("crime") || blocks.count("taxi");
  if (needs_events && index_files.empty())
    hpm::fail(hpm::Errc::usage, "event blocks requested but no index snapshots given (--index-dir or --index)");
  std::vector<hpm::EventRecord> events;
  for (const auto& path : index_files) {
    const auto shard = hpm::SpatioTemporalIndex::load(path);
    events.insert(events.end(), shard.events().begin(), shard.events().end());
  }
  const auto index = hpm::SpatioTemporalIndex::build(std::move(events), cfg.aggregation.radius_m);

  hpm::TcJoin tc;
  const hpm::TcJoin* tc_ptr = nullptr;
  if (blocks.count("tc")) {
    if (o.census.empty()) hpm::fail(hpm::Errc::usage, "tc block requires --census");
    const hpm::CensusTable census = hpm::parse_census(o.census, cfg);
    tc = hpm::join_tract_census(sales, census);
    tc_ptr = &tc;
  }

  const hpm::FeatureMatrix fm = hpm::assemble_feature_matrix(sales, index, schema, cfg, tc_ptr, o.jobs);
  json agg{{"radius_m", cfg.aggregation.radius_m},
           {"window_days", cfg.aggregation.window_days},
           {"window_mode", cfg.aggregation.window_mode},
           {"volume_transform", cfg.aggregation.volume_transform}};
  hpm::write_feature_matrix(o.out, sidecar_path(o.out), fm, agg);

  std::vector<std::pair<std::string, std::string>> inputs{{"config", o.config}, {"sales", o.sales}};
  for (std::size_t i = 0; i < index_files.size(); ++i) inputs.emplace_back("index_" + std::to_string(i), index_files[i]);
  if (!o.census.empty()) inputs.emplace_back("census", o.census);
  write_json_file(o.out + ".run.json", run_record("features", json{{"blocks", block_list}, {"aggregation", agg}},
                                                  inputs, {o.out, sidecar_path(o.out)}));
  json summary{{"rows", fm.n}, {"width", fm.schema.width()}, {"excluded", fm.excluded_sale_ids.size()}, {"out", o.out}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_fit(const FitOpts& o) {
  const hpm::FeatureMatrix fm = hpm::read_feature_matrix(o.features, sidecar_path(o.features));
  const hpm::ModelSpec spec = resolve_model_spec(o.model, o.params);
  std::vector<std::size_t> rows(fm.n);
  for (std::size_t i = 0; i < fm.n; ++i) rows[i] = i;
  const hpm::FittedModel model = hpm::fit_model(fm, rows, spec);
  hpm::save_model(model, o.out);

  std::vector<double> y_true, y_pred, scratch;
  for (std::size_t i = 0; i < fm.n; ++i) {
    auto p = model.predict_row(fm, i, scratch);
    if (!p) continue;
    y_true.push_back(fm.y[i]);
    y_pred.push_back(*p);
  }
  const auto r2 = hpm::r_squared(y_true, y_pred, hpm::R2Baseline::test_mean, model.train_mean);

  write_json_file(o.out + ".run.json",
                  run_record("fit", json{{"spec", spec.to_json()}}, {{"features", o.features}}, {o.out}));
  json summary{{"model", spec.descriptor()}, {"n", fm.n}, {"columns", model.design.columns.size()}, {"out", o.out}};
  if (r2) summary["train_r2"] = *r2;
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_cv(const CvOpts& o) {
  const hpm::FeatureMatrix fm = hpm::read_feature_matrix(o.features, sidecar_path(o.features));
  const hpm::ModelSpec spec = resolve_model_spec(o.model, o.params);

  hpm::FoldPlan plan;
  if (o.scheme == "standard") {
    plan = hpm::make_fold_plan(fm.n, o.k, o.reps, o.seed);
  } else if (o.scheme == "tract" || o.scheme == "zipcode" || o.scheme == "district") {
    plan = hpm::make_grouped_fold_plan(fm.group(o.scheme + "_id"), o.scheme, o.k, o.reps, o.seed);
  } else {
    hpm::fail(hpm::Errc::usage, "scheme must be one of standard, tract, zipcode, district; got '" + o.scheme + "'");
  }

  hpm::CVOptions options;
  options.jobs = o.jobs;
  options.aggregation = o.aggregation;
  const hpm::CVReport report = hpm::run_cv(fm, spec, plan, options);
  write_json_file(o.out, report.to_json());

  json params{{"spec", spec.to_json()}, {"scheme", o.scheme},          {"k", o.k},
              {"reps", o.reps},         {"seed", o.seed},              {"aggregation", o.aggregation}};
  write_json_file(o.out + ".run.json", run_record("cv", params, {{"features", o.features}}, {o.out}));
  json summary{{"mean_r2", report.mean_r2},
               {"std_r2", report.std_r2},
               {"missing_rate", report.missing_rate},
               {"undefined_folds", report.undefined_folds},
               {"out", o.out}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_select(const SelectOpts& o) {
  const hpm::FeatureMatrix fm = hpm::read_feature_matrix(o.features, sidecar_path(o.features));
  const auto alphas = hpm::parse_alpha_grid(o.alpha_grid);
  const auto curve = hpm::selection_curve(fm, alphas);
  hpm::write_selection_csv(o.out, curve, fm.schema);
  write_json_file(sidecar_path(o.out), hpm::selection_curve_json(curve));
  write_json_file(o.out + ".run.json", run_record("select", json{{"alpha_grid", o.alpha_grid}},
                                                  {{"features", o.features}}, {o.out, sidecar_path(o.out)}));
  json summary{{"alphas", alphas.size()},
               {"kept_min", curve.empty() ? 0 : curve.back().kept.size()},
               {"kept_max", curve.empty() ? 0 : curve.front().kept.size()},
               {"out", o.out}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_repeat_sales(const RepeatOpts& o) {
  const hpm::IngestConfig cfg = hpm::IngestConfig::load(o.config);
  const auto sales = hpm::read_cleaned_sales(o.sales, cfg.key_mode);
  hpm::PairingReport rep;
  const auto pairs = hpm::pair_sales(sales, &rep);
  hpm::write_pairs_csv(o.pairs_out, pairs);
  const hpm::PriceIndex index = hpm::estimate_bmn_index(pairs, cfg.window.num_quarters());
  hpm::write_index_csv(o.index_out, index);
  write_json_file(o.index_out + ".run.json",
                  run_record("repeat-sales", json{{"num_quarters", cfg.window.num_quarters()}},
                             {{"sales", o.sales}, {"config", o.config}}, {o.index_out, o.pairs_out}));
  json summary{{"pairs", pairs.size()},
               {"properties_with_pairs", rep.properties_with_pairs},
               {"duplicates_dropped", rep.duplicates_dropped},
               {"residual_variance", index.residual_variance}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_profile(const ProfileOpts& o) {
  const hpm::IngestConfig cfg = hpm::IngestConfig::load(o.config);
  const hpm::DatasetKind kind = cli_kind(o.kind);
  const auto profiles = hpm::profile_events(o.events, o.group, kind, cfg);
  const hpm::CategoryTable& table = cfg.categories(kind);
  hpm::write_profiles(o.out, profiles, table);

  // JSON rendering adds the top categories per group for quick inspection.
  json groups = json::array();
  for (const auto& p : profiles) {
    std::vector<std::size_t> order(p.category_shares.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p.category_shares[a] > p.category_shares[b]; });
    json top = json::array();
    for (std::size_t i = 0; i < order.size() && i < 10; ++i)
      top.push_back(json{{"category", table.names[order[i]]}, {"share", p.category_shares[order[i]]}});
    groups.push_back(json{{"group", p.group},
                          {"count", p.count},
                          {"top_categories", std::move(top)},
                          {"timeline", std::vector<double>(p.timeline_shares.begin(), p.timeline_shares.end())}});
  }
  write_json_file(sidecar_path(o.out), json{{"kind", o.kind}, {"group_column", o.group}, {"groups", std::move(groups)}});
  write_json_file(o.out + ".run.json",
                  run_record("profile", json{{"kind", o.kind}, {"group", o.group}},
                             {{"events", o.events}, {"config", o.config}}, {o.out, sidecar_path(o.out)}));
  json summary{{"groups", profiles.size()}, {"out", o.out}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_report(const ReportOpts& o) {
  if (o.cv.empty()) hpm::fail(hpm::Errc::usage, "--cv is required at least once");
  if (o.out_json.empty() && o.out_csv.empty()) hpm::fail(hpm::Errc::usage, "give --out-json and/or --out-csv");
  std::vector<hpm::CVReport> cells;
  std::vector<std::pair<std::string, std::string>> inputs;
  for (std::size_t i = 0; i < o.cv.size(); ++i) {
    cells.push_back(hpm::CVReport::from_json(load_json_file(o.cv[i])));
    inputs.emplace_back("cv_" + std::to_string(i), o.cv[i]);
  }
  const json table = hpm::make_report(cells);
  std::vector<std::string> outputs;
  if (!o.out_json.empty()) {
    write_json_file(o.out_json, table);
    outputs.push_back(o.out_json);
  }
  if (!o.out_csv.empty()) {
    hpm::write_report_csv(o.out_csv, table);
    outputs.push_back(o.out_csv);
  }
  const std::string run_path = (o.out_json.empty() ? o.out_csv : o.out_json) + ".run.json";
  write_json_file(run_path, run_record("report", json{{"cells", o.cv.size()}}, inputs, outputs));
  json summary{{"rows", table.at("rows").size()}};
  if (table.contains("best")) summary["best"] = table.at("best");
  std::cout << summary.dump() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geospatial feature engineering and house price modeling"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string(kVersionText));

  SynthOpts synth;
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic city");
  cmd_synth->add_option("--config", synth.config, "synth config JSON");
  cmd_synth->add_option("--out", synth.out, "output directory")->required();

  IngestOpts ingest;
  auto* cmd_ingest = app.add_subcommand("ingest", "clean sales and normalize event files");
  cmd_ingest->add_option("--sales", ingest.sales, "raw sales CSV");
  cmd_ingest->add_option("--pluto", ingest.pluto, "property attribute CSV");
  cmd_ingest->add_option("--events", ingest.events, "raw event CSV (repeatable)");
  cmd_ingest->add_option("--kind", ingest.kinds, "event kind per --events: 311, crime, taxi");
  cmd_ingest->add_option("--config", ingest.config, "ingest config JSON");
  cmd_ingest->add_option("--out", ingest.out, "output directory")->required();

  IndexOpts index;
  auto* cmd_index = app.add_subcommand("index", "build a spatial index snapshot from normalized events");
  cmd_index->add_option("--events", index.events, "normalized events CSV (repeatable)")->required();
  cmd_index->add_option("--config", index.config, "ingest config JSON");
  cmd_index->add_option("--out", index.out, "index snapshot path")->required();

  FeatureOpts features;
  auto* cmd_features = app.add_subcommand("features", "assemble the per-sale feature matrix");
  cmd_features->add_option("--sales", features.sales, "cleaned sales CSV")->required();
  cmd_features->add_option("--index-dir", features.index_dir, "directory of .idx snapshots");
  cmd_features->add_option("--index", features.index_files, "index snapshot (repeatable)");
  cmd_features->add_option("--census", features.census, "census CSV (required for the tc block)");
  cmd_features->add_option("--blocks", features.blocks, "comma list of feature blocks")->capture_default_str();
  cmd_features->add_option("--config", features.config, "ingest config JSON");
  cmd_features->add_option("--out", features.out, "output feature CSV")->required();
  cmd_features->add_option("--jobs", features.jobs, "worker threads")->capture_default_str();

  FitOpts fit;
  auto* cmd_fit = app.add_subcommand("fit", "fit one model on a feature matrix");
  cmd_fit->add_option("--model", fit.model, "ols, lasso, rf, gbt, or a JSON spec")->capture_default_str();
  cmd_fit->add_option("--params", fit.params, "JSON object merged into the model spec");
  cmd_fit->add_option("--features", fit.features, "feature CSV")->required();
  cmd_fit->add_option("--out", fit.out, "model output path")->required();

  CvOpts cv;
  auto* cmd_cv = app.add_subcommand("cv", "repeated k-fold cross-validation");
  cmd_cv->add_option("--features", cv.features, "feature CSV")->required();
  cmd_cv->add_option("--model", cv.model, "ols, lasso, rf, gbt, or a JSON spec")->capture_default_str();
  cmd_cv->add_option("--params", cv.params, "JSON object merged into the model spec");
  cmd_cv->add_option("--scheme", cv.scheme, "standard, tract, zipcode, district")->capture_default_str();
  cmd_cv->add_option("--k", cv.k, "fold count")->capture_default_str();
  cmd_cv->add_option("--reps", cv.reps, "repetitions")->capture_default_str();
  cmd_cv->add_option("--seed", cv.seed, "fold plan seed")->capture_default_str();
  cmd_cv->add_option("--aggregation", cv.aggregation, "per_fold or per_repetition")->capture_default_str();
  cmd_cv->add_option("--jobs", cv.jobs, "worker threads")->capture_default_str();
  cmd_cv->add_option("--out", cv.out, "report JSON path")->required();

  SelectOpts select;
  auto* cmd_select = app.add_subcommand("select", "lasso feature-selection curve over a penalty grid");
  cmd_select->add_option("--features", select.features, "feature CSV")->required();
  cmd_select->add_option("--alpha-grid", select.alpha_grid, "grid as <lo>:<hi>:<step>dex")->capture_default_str();
  cmd_select->add_option("--out", select.out, "curve CSV path")->required();

  RepeatOpts repeat;
  auto* cmd_repeat = app.add_subcommand("repeat-sales", "pair repeat sales and estimate the quarterly index");
  cmd_repeat->add_option("--sales", repeat.sales, "cleaned sales CSV")->required();
  cmd_repeat->add_option("--config", repeat.config, "ingest config JSON");
  cmd_repeat->add_option("--index-out", repeat.index_out, "index CSV path")->required();
  cmd_repeat->add_option("--pairs-out", repeat.pairs_out, "pairs CSV path")->required();

  ProfileOpts profile;
  auto* cmd_profile = app.add_subcommand("profile", "per-group event activity profiles");
  cmd_profile->add_option("--events", profile.events, "events CSV with a group column")->required();
  cmd_profile->add_option("--kind", profile.kind, "311, crime, taxi")->required();
  cmd_profile->add_option("--group", profile.group, "group column name")->capture_default_str();
  cmd_profile->add_option("--config", profile.config, "ingest config JSON");
  cmd_profile->add_option("--out", profile.out, "profile CSV path")->required();

  ReportOpts report;
  auto* cmd_report = app.add_subcommand("report", "comparison table from cv reports");
  cmd_report->add_option("--cv", report.cv, "cv report JSON (repeatable)")->required();
  cmd_report->add_option("--out-json", report.out_json, "table JSON path");
  cmd_report->add_option("--out-csv", report.out_csv, "table CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(2, "usage", e.what());
    return 2;
  }

  try {
    if (*cmd_synth) return run_synth(synth);
    if (*cmd_ingest) return run_ingest(ingest);
    if (*cmd_index) return run_index(index);
    if (*cmd_features) return run_features(features);
    if (*cmd_fit) return run_fit(fit);
    if (*cmd_cv) return run_cv(cv);
    if (*cmd_select) return run_select(select);
    if (*cmd_repeat) return run_repeat_sales(repeat);
    if (*cmd_profile) return run_profile(profile);
    if (*cmd_report) return run_report(report);
    print_error(2, "usage", "missing subcommand; run with --help");
    return 2;
  } catch (const hpm::Error& e) {
    print_error(e.exit_code(), errc_name(e.code()), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    print_error(1, "internal", e.what());
    return 1;
  }
}
