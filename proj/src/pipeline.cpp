#include "t1rho/pipeline.hpp"

#include "t1rho/nifti.hpp"
#include "t1rho/volume_ops.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace t1rho {

std::string format_g6(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void PipelineConfig::validate() const {
  if (cases.empty()) throw config_error("config has no cases");
  std::set<std::string> ids;
  for (const auto& c : cases) {
    if (c.id.empty()) throw config_error("every case needs an id");
    if (!ids.insert(c.id).second) throw config_error("duplicate case id: " + c.id);
    if (c.frame_paths.size() != c.tsl.size())
      throw config_error("case " + c.id + ": tsl count must match frame count");
    if (c.frame_paths.size() < 2)
      throw config_error("case " + c.id + ": needs >= 2 frames");
    if (c.mask_path.empty()) throw config_error("case " + c.id + ": missing mask path");
    std::set<std::string> paths(c.frame_paths.begin(), c.frame_paths.end());
    if (paths.size() != c.frame_paths.size())
      throw config_error("case " + c.id + ": duplicate frame paths");
  }
  if (stages.standardize && reference_path.empty())
    throw config_error("standardisation enabled but reference_path is empty");
  if (!stages.standardize && !stages.inputs_prestandardized)
    throw config_error(
        "standardisation may be disabled only when inputs are declared "
        "pre-standardised (inputs_prestandardized)");
  if (output_dir.empty()) throw config_error("output_dir is required");
  if (workers < 1) throw config_error("workers must be >= 1");
  fit.validate();
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json require(const json& j, const char* key) {
  if (!j.contains(key)) throw config_error(std::string("config missing key: ") + key);
  return j.at(key);
}

}  // namespace

PipelineConfig pipeline_config_from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open config: " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw config_error(std::string("invalid config JSON: ") + e.what());
  }

  PipelineConfig cfg;
  try {
    for (const auto& jc : require(j, "cases")) {
      CaseSpec c;
      c.id = require(jc, "id").get<std::string>();
      c.frame_paths = require(jc, "frames").get<std::vector<std::string>>();
      c.tsl = require(jc, "tsl").get<std::vector<double>>();
      c.mask_path = require(jc, "mask").get<std::string>();
      if (jc.contains("pred_mask")) c.pred_mask_path = jc["pred_mask"].get<std::string>();
      cfg.cases.push_back(std::move(c));
    }
    if (j.contains("reference_path"))
      cfg.reference_path = j["reference_path"].get<std::string>();
    cfg.output_dir = require(j, "output_dir").get<std::string>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("fit")) {
      const auto& jf = j["fit"];
      if (jf.contains("t1rho_min")) cfg.fit.t1rho_min = jf["t1rho_min"].get<double>();
      if (jf.contains("t1rho_max")) cfg.fit.t1rho_max = jf["t1rho_max"].get<double>();
      if (jf.contains("tol")) cfg.fit.tol = jf["tol"].get<double>();
      if (jf.contains("intensity_floor"))
        cfg.fit.intensity_floor = jf["intensity_floor"].get<double>();
      if (jf.contains("model")) {
        std::string m = jf["model"].get<std::string>();
        if (m == "two_param")
          cfg.fit.model = FitModel::two_param;
        else if (m == "three_param")
          cfg.fit.model = FitModel::three_param;
        else
          throw config_error("unknown fit model: " + m);
      }
    }
    if (j.contains("parcellation")) {
      const auto& jp = j["parcellation"];
      if (jp.contains("shape_factor"))
        cfg.parcellation.shape_factor = jp["shape_factor"].get<double>();
      if (jp.contains("strict")) cfg.parcellation.strict = jp["strict"].get<bool>();
    }
    if (j.contains("registration")) {
      const auto& jr = j["registration"];
      if (jr.contains("pyramid_levels"))
        cfg.registration.pyramid_levels = jr["pyramid_levels"].get<int>();
      if (jr.contains("max_iters_per_level"))
        cfg.registration.max_iters_per_level = jr["max_iters_per_level"].get<int>();
      if (jr.contains("rot_bound_deg"))
        cfg.registration.rot_bound_deg = jr["rot_bound_deg"].get<double>();
      if (jr.contains("trans_bound_mm"))
        cfg.registration.trans_bound_mm = jr["trans_bound_mm"].get<double>();
      if (jr.contains("tol_deg")) cfg.registration.tol_deg = jr["tol_deg"].get<double>();
      if (jr.contains("tol_mm")) cfg.registration.tol_mm = jr["tol_mm"].get<double>();
    }
    if (j.contains("stages")) {
      const auto& js = j["stages"];
      if (js.contains("standardize")) cfg.stages.standardize = js["standardize"].get<bool>();
      if (js.contains("parcellate")) cfg.stages.parcellate = js["parcellate"].get<bool>();
      if (js.contains("fit")) cfg.stages.fit = js["fit"].get<bool>();
      if (js.contains("stats")) cfg.stages.stats = js["stats"].get<bool>();
      if (js.contains("inputs_prestandardized"))
        cfg.stages.inputs_prestandardized = js["inputs_prestandardized"].get<bool>();
    }
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("invalid config: ") + e.what());
  }
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(j.dump())));
  cfg.config_hash = hash;
  cfg.validate();
  return cfg;
}

namespace {

struct LoadedCase {
  DynamicSeries series;
  LabelVolume mask;
  LabelVolume pred_mask;  // empty dims when absent
  bool has_pred = false;
};

LoadedCase load_case(const CaseSpec& c) {
  LoadedCase lc;
  for (std::size_t i = 0; i < c.frame_paths.size(); ++i)
    lc.series.frames.emplace_back(c.tsl[i], read_volume(c.frame_paths[i]));
  lc.series.acquisition_order.resize(c.tsl.size());
  for (std::size_t i = 0; i < c.tsl.size(); ++i)
    lc.series.acquisition_order[i] = static_cast<int>(i);
  lc.series.validate();
  lc.mask = read_mask(c.mask_path);
  if (!c.pred_mask_path.empty()) {
    lc.pred_mask = read_mask(c.pred_mask_path);
    lc.has_pred = true;
  }
  return lc;
}

void write_manifest(const fs::path& dir, const PipelineConfig& cfg,
                    const std::vector<std::pair<std::string, double>>& timings,
                    const std::string& case_id, bool ok, const std::string& error) {
  json m;
  m["tool"] = "t1rho-kit";
  m["version"] = "0.1.0";
  m["config_hash"] = cfg.config_hash;
  m["case"] = case_id;
  m["ok"] = ok;
  if (!error.empty()) m["error"] = error;
  json stages = json::array();
  for (const auto& [name, sec] : timings) {
    json s;
    s["stage"] = name;
    s["seconds"] = sec;
    stages.push_back(s);
  }
  m["stages"] = stages;
  std::ofstream f(dir / "manifest.json");
  f << m.dump(2) << "\n";
}

int inner_threads(const PipelineConfig& cfg) {
  if (cfg.workers <= 1) return 0;  // auto
  return 1;                        // avoid oversubscription in batch mode
}

}  // namespace

CaseReport run_case(const PipelineConfig& cfg, const CaseSpec& c) {
  CaseReport report;
  report.id = c.id;
  fs::path dir = fs::path(cfg.output_dir) / c.id;
  std::vector<std::pair<std::string, double>> timings;
  std::string stage = "ingest";

  auto timed = [&timings](const std::string& name, auto&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    timings.emplace_back(name, std::chrono::duration<double>(t1 - t0).count());
  };

  try {
    fs::create_directories(dir);

    LoadedCase lc;
    timed("ingest", [&] { lc = load_case(c); });

    DynamicSeries series;
    LabelVolume mask;
    if (cfg.stages.standardize) {
      stage = "standardize";
      timed("standardize", [&] {
        Volume reference = read_volume(cfg.reference_path);
        RegistrationConfig reg = cfg.registration;
        reg.threads = inner_threads(cfg);
        StandardizationResult sr = standardize_case(lc.series, lc.mask, reference, reg);
        series = std::move(sr.series);
        mask = std::move(sr.mask);
        for (std::size_t i = 0; i < series.frames.size(); ++i)
          write_volume(series.frames[i].second,
                       (dir / ("std_frame_" + std::to_string(i) + ".nii.gz")).string(),
                       NiftiDatatype::float32);
        write_volume(from_label_volume(mask), (dir / "std_mask.nii.gz").string(),
                     NiftiDatatype::uint8);
      });
    } else {
      series = lc.series;
      mask = lc.mask;
    }

    SubregionVolume subregions;
    if (cfg.stages.parcellate) {
      stage = "parcellate";
      timed("parcellate", [&] {
        subregions = parcellate(mask, cfg.parcellation);
        write_volume(from_label_volume(subregions),
                     (dir / "subregions.nii.gz").string(), NiftiDatatype::uint8);
        write_subregion_sidecar_json((dir / "subregions.json").string());
      });
    }

    T1rhoMap map;
    if (cfg.stages.fit) {
      stage = "fit";
      timed("fit", [&] {
        FitConfig fc = cfg.fit;
        fc.threads = inner_threads(cfg);
        map = fit_map(series, mask, fc);
        write_volume(map.t1rho, (dir / "t1rho.nii.gz").string(), NiftiDatatype::float32);
        write_volume(from_label_volume(map.flags), (dir / "fit_flags.nii.gz").string(),
                     NiftiDatatype::uint8);
      });
    }

    if (cfg.stages.stats) {
      stage = "stats";
      if (!cfg.stages.parcellate || !cfg.stages.fit)
        throw config_error("stats stage requires parcellate and fit stages");
      timed("stats", [&] {
        report.stats = region_stats(map, subregions);
        write_region_stats_csv(report.stats, (dir / "region_stats.csv").string());
        write_region_stats_json(report.stats, (dir / "region_stats.json").string());
      });
    }
    report.ok = true;
  } catch (const std::exception& e) {
    report.failed_stage = stage;
    report.error = e.what();
  }
  write_manifest(dir, cfg, timings, c.id, report.ok, report.error);
  return report;
}

std::vector<CaseReport> run_batch(const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<CaseReport> reports(cfg.cases.size());
  if (cfg.workers <= 1) {
    for (std::size_t i = 0; i < cfg.cases.size(); ++i)
      reports[i] = run_case(cfg, cfg.cases[i]);
    return reports;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= cfg.cases.size()) break;
      reports[i] = run_case(cfg, cfg.cases[i]);
    }
  };
  std::vector<std::thread> pool;
  int nw = std::min<int>(cfg.workers, static_cast<int>(cfg.cases.size()));
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return reports;
}

AgreementReport run_agreement(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.cases.size() < 3)
    throw config_error("minimum 3 cases for paired testing");
  for (const auto& c : cfg.cases)
    if (c.pred_mask_path.empty())
      throw config_error("case " + c.id + ": agreement run requires pred_mask");

  struct CaseQuant {
    std::vector<RegionStats> ref_stats, pred_stats;
    std::vector<SegMetricRow> seg;
  };
  std::vector<CaseQuant> quants(cfg.cases.size());

  auto process = [&](std::size_t ci) {
    const CaseSpec& c = cfg.cases[ci];
    LoadedCase lc = load_case(c);

    DynamicSeries series;
    LabelVolume mask, pred;
    if (cfg.stages.standardize) {
      Volume reference = read_volume(cfg.reference_path);
      RegistrationConfig reg = cfg.registration;
      reg.threads = inner_threads(cfg);
      StandardizationResult sr = standardize_case(lc.series, lc.mask, reference, reg);
      series = std::move(sr.series);
      mask = std::move(sr.mask);
      // Predicted mask follows the same orientation ops and rigid transform.
      LabelVolume canon_pred = apply_orientation(lc.pred_mask, sr.orientation_ops);
      pred = resample_nearest(canon_pred, reference, sr.rigid);
    } else {
      series = lc.series;
      mask = lc.mask;
      pred = lc.pred_mask;
    }

    SubregionVolume sub_ref = parcellate(mask, cfg.parcellation);
    SubregionVolume sub_pred = parcellate(pred, cfg.parcellation);

    // One fit over the union region serves both quantifications.
    LabelVolume region = mask;
    for (Eigen::Index i = 0; i < region.data.size(); ++i)
      if (pred.data[i] != 0 && region.data[i] == 0) region.data[i] = pred.data[i];
    FitConfig fc = cfg.fit;
    fc.threads = inner_threads(cfg);
    T1rhoMap map = fit_map(series, region, fc);

    CaseQuant q;
    q.ref_stats = region_stats(map, sub_ref);
    q.pred_stats = region_stats(map, sub_pred);
    for (int comp : {kFC, kMTC, kLTC}) {
      SegMetricRow row;
      row.case_id = c.id;
      row.compartment = comp;
      row.dsc = dsc(confusion(mask, pred, comp));
      row.assd_mm = assd(mask, pred, comp);
      q.seg.push_back(row);
    }
    quants[ci] = std::move(q);
  };

  if (cfg.workers <= 1) {
    for (std::size_t i = 0; i < cfg.cases.size(); ++i) process(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= cfg.cases.size()) break;
        process(i);
      }
    };
    std::vector<std::thread> pool;
    int nw = std::min<int>(cfg.workers, static_cast<int>(cfg.cases.size()));
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  AgreementReport report;
  for (int code = 1; code <= kLTCRow; ++code) {
    QuantPairs pairs;
    pairs.region_code = code;
    for (const auto& q : quants) {
      const RegionStats& r = q.ref_stats[static_cast<std::size_t>(code - 1)];
      const RegionStats& p = q.pred_stats[static_cast<std::size_t>(code - 1)];
      if (r.n == 0 || p.n == 0) continue;  // subject lacks this region
      pairs.q_ref.push_back(r.mean);
      pairs.q_pred.push_back(p.mean);
    }
    AgreementRow row;
    if (pairs.n() >= 3) {
      row = gated_compare(pairs);
    } else {
      row.region_code = code;
      row.n = pairs.n();
      row.p_value = std::numeric_limits<double>::quiet_NaN();
      row.error = "fewer than 3 subjects with data in this region";
    }
    if (code > kNumSubregions)
      row.region_name = code == kFCRow ? "FC" : code == kMTCRow ? "MTC" : "LTC";
    else if (row.region_name.empty())
      row.region_name = subregion_names()[static_cast<std::size_t>(code)];
    report.rows.push_back(std::move(row));
  }
  for (const auto& q : quants)
    report.seg_rows.insert(report.seg_rows.end(), q.seg.begin(), q.seg.end());

  fs::path dir(cfg.output_dir);
  fs::create_directories(dir / "ba_points");
  write_agreement_csv(report.rows, (dir / "agreement.csv").string());
  write_agreement_json(report.rows, (dir / "agreement.json").string());
  write_seg_metrics_csv(report.seg_rows, (dir / "seg_metrics.csv").string());
  for (const auto& row : report.rows) {
    std::string name = row.region_name.empty() ? std::to_string(row.region_code)
                                               : row.region_name;
    write_ba_points_csv(row, (dir / "ba_points" / (name + ".csv")).string());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

void write_region_stats_csv(const std::vector<RegionStats>& rows,
                            const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write " + path);
  f << "region_code,region_name,n,excluded_n,mean_ms,sd_ms,median_ms,min_ms,max_ms\n";
  for (const auto& r : rows) {
    f << r.region_code << ',' << r.region_name << ',' << r.n << ',' << r.excluded_n;
    if (r.n > 0)
      f << ',' << format_g6(r.mean) << ',' << format_g6(r.sd) << ','
        << format_g6(r.median) << ',' << format_g6(r.min) << ',' << format_g6(r.max);
    else
      f << ",NA,NA,NA,NA,NA";
    f << '\n';
  }
}

void write_region_stats_json(const std::vector<RegionStats>& rows,
                             const std::string& path) {
  json j = json::array();
  for (const auto& r : rows) {
    json row;
    row["region_code"] = r.region_code;
    row["region_name"] = r.region_name;
    row["n"] = r.n;
    row["excluded_n"] = r.excluded_n;
    if (r.n > 0) {
      row["mean_ms"] = format_g6(r.mean);
      row["sd_ms"] = format_g6(r.sd);
      row["median_ms"] = format_g6(r.median);
      row["min_ms"] = format_g6(r.min);
      row["max_ms"] = format_g6(r.max);
    }
    j.push_back(row);
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

void write_agreement_csv(const std::vector<AgreementRow>& rows,
                         const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write " + path);
  f << "region_code,region_name,n,test_used,p_value,rmsd_ms,cv_rmsd_pct,bias_ms,"
       "loa_low_ms,loa_high_ms,normality_p_ref,normality_p_pred,error\n";
  for (const auto& r : rows) {
    f << r.region_code << ',' << r.region_name << ',' << r.n << ','
      << (r.test_used == PairedTestKind::paired_t ? "paired_t" : "wilcoxon") << ','
      << format_g6(r.p_value) << ',' << format_g6(r.rmsd) << ','
      << format_g6(r.cv_rmsd) << ',' << format_g6(r.bias) << ','
      << format_g6(r.loa_low) << ',' << format_g6(r.loa_high) << ','
      << format_g6(r.normality_p_ref) << ',' << format_g6(r.normality_p_pred) << ','
      << r.error << '\n';
  }
}

void write_agreement_json(const std::vector<AgreementRow>& rows,
                          const std::string& path) {
  json j = json::array();
  for (const auto& r : rows) {
    json row;
    row["region_code"] = r.region_code;
    row["region_name"] = r.region_name;
    row["n"] = r.n;
    row["test_used"] = r.test_used == PairedTestKind::paired_t ? "paired_t" : "wilcoxon";
    row["p_value"] = format_g6(r.p_value);
    row["rmsd_ms"] = format_g6(r.rmsd);
    row["cv_rmsd_pct"] = format_g6(r.cv_rmsd);
    row["bias_ms"] = format_g6(r.bias);
    row["loa_low_ms"] = format_g6(r.loa_low);
    row["loa_high_ms"] = format_g6(r.loa_high);
    row["normality_p_ref"] = format_g6(r.normality_p_ref);
    row["normality_p_pred"] = format_g6(r.normality_p_pred);
    if (!r.error.empty()) row["error"] = r.error;
    j.push_back(row);
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

void write_seg_metrics_csv(const std::vector<SegMetricRow>& rows,
                           const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write " + path);
  f << "case_id,compartment,dsc,assd_mm\n";
  for (const auto& r : rows)
    f << r.case_id << ',' << compartment_names().at(r.compartment) << ','
      << format_g6(r.dsc) << ',' << format_g6(r.assd_mm) << '\n';
}

void write_ba_points_csv(const AgreementRow& row, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write " + path);
  f << "mean_ms,diff_ms\n";
  for (const auto& [m, d] : row.ba_points)
    f << format_g6(m) << ',' << format_g6(d) << '\n';
}

void write_subregion_sidecar_json(const std::string& path) {
  json j;
  for (int code = 1; code <= kNumSubregions; ++code)
    j[std::to_string(code)] = subregion_names()[static_cast<std::size_t>(code)];
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

}  // namespace t1rho
