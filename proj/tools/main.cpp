#include "t1rho/nifti.hpp"
#include "t1rho/phantom.hpp"
#include "t1rho/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace t1rho;

namespace {

DynamicSeries load_series(const std::vector<std::string>& frames,
                          const std::vector<double>& tsl) {
  if (frames.size() != tsl.size())
    throw config_error("--tsl count must match --frames count");
  DynamicSeries s;
  for (std::size_t i = 0; i < frames.size(); ++i)
    s.frames.emplace_back(tsl[i], read_volume(frames[i]));
  s.acquisition_order.resize(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i)
    s.acquisition_order[i] = static_cast<int>(i);
  s.validate();
  return s;
}

int run(int argc, char** argv) {
  CLI::App app{"T1rho cartilage post-processing toolkit"};
  app.require_subcommand(1);

  // phantom generate
  auto* phantom = app.add_subcommand("phantom", "synthetic phantom utilities");
  phantom->require_subcommand(1);
  auto* phantom_gen = phantom->add_subcommand("generate", "rasterise a phantom case");
  std::string phantom_spec_path, phantom_out;
  std::uint64_t phantom_seed = 0;
  bool phantom_seed_set = false;
  phantom_gen->add_option("--spec", phantom_spec_path, "phantom spec JSON (optional)");
  phantom_gen->add_option("--out", phantom_out, "output directory")->required();
  phantom_gen->add_option("--seed", phantom_seed, "noise seed override")
      ->each([&](const std::string&) { phantom_seed_set = true; });

  // standardize
  auto* standardize = app.add_subcommand("standardize", "reorient and rigidly align a case");
  std::vector<std::string> std_frames;
  std::vector<double> std_tsl;
  std::string std_mask, std_reference, std_out;
  standardize->add_option("--frames", std_frames, "frame volumes")->required();
  standardize->add_option("--tsl", std_tsl, "spin-lock times (ms)")->required();
  standardize->add_option("--mask", std_mask, "compartment mask")->required();
  standardize->add_option("--reference", std_reference, "reference grid volume")->required();
  standardize->add_option("--out", std_out, "output directory")->required();

  // parcellate
  auto* parcellate_cmd = app.add_subcommand("parcellate", "split a mask into 20 subregions");
  std::string parc_mask, parc_out;
  ParcellationConfig parc_cfg;
  bool parc_lenient = false;
  parcellate_cmd->add_option("--mask", parc_mask, "standardised compartment mask")->required();
  parcellate_cmd->add_option("--out", parc_out, "output subregion volume (.nii/.nii.gz)")->required();
  parcellate_cmd->add_option("--shape-factor", parc_cfg.shape_factor,
                             "tibial central ellipse factor");
  parcellate_cmd->add_flag("--lenient", parc_lenient,
                           "fall back on degenerate anatomy instead of failing");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "voxelwise T1rho map over a mask");
  std::vector<std::string> fit_frames;
  std::vector<double> fit_tsl;
  std::string fit_mask, fit_out;
  FitConfig fit_cfg;
  std::string fit_model = "two_param";
  fit_cmd->add_option("--frames", fit_frames, "frame volumes")->required();
  fit_cmd->add_option("--tsl", fit_tsl, "spin-lock times (ms)")->required();
  fit_cmd->add_option("--mask", fit_mask, "fit region mask")->required();
  fit_cmd->add_option("--out", fit_out, "output directory")->required();
  fit_cmd->add_option("--t1rho-min", fit_cfg.t1rho_min, "lower search bound (ms)");
  fit_cmd->add_option("--t1rho-max", fit_cfg.t1rho_max, "upper search bound (ms)");
  fit_cmd->add_option("--tol", fit_cfg.tol, "search tolerance (ms)");
  fit_cmd->add_option("--intensity-floor", fit_cfg.intensity_floor,
                      "minimum admissible signal");
  fit_cmd->add_option("--model", fit_model, "two_param | three_param");
  fit_cmd->add_option("--threads", fit_cfg.threads, "0 = all cores");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "regional statistics for a fitted map");
  std::string stats_t1rho, stats_flags, stats_sub, stats_out;
  stats_cmd->add_option("--t1rho", stats_t1rho, "fitted T1rho map")->required();
  stats_cmd->add_option("--flags", stats_flags, "fit flag volume")->required();
  stats_cmd->add_option("--subregions", stats_sub, "subregion volume")->required();
  stats_cmd->add_option("--out", stats_out, "output directory")->required();

  // pipeline run
  auto* pipeline = app.add_subcommand("pipeline", "batch pipeline");
  pipeline->require_subcommand(1);
  auto* pipeline_run = pipeline->add_subcommand("run", "run configured cases end to end");
  std::string pipe_config, pipe_out;
  int pipe_workers = 0;
  pipeline_run->add_option("--config", pipe_config, "pipeline config JSON")->required();
  pipeline_run->add_option("--out", pipe_out, "override output_dir");
  pipeline_run->add_option("--workers", pipe_workers, "override worker count");

  // agreement run
  auto* agreement = app.add_subcommand("agreement", "dual-mask agreement study");
  agreement->require_subcommand(1);
  auto* agreement_run = agreement->add_subcommand("run", "quantify and compare both masks");
  std::string agr_config, agr_out;
  int agr_workers = 0;
  agreement_run->add_option("--config", agr_config, "pipeline config JSON")->required();
  agreement_run->add_option("--out", agr_out, "override output_dir");
  agreement_run->add_option("--workers", agr_workers, "override worker count");

  CLI11_PARSE(app, argc, argv);

  if (*phantom_gen) {
    PhantomSpec spec;
    if (!phantom_spec_path.empty()) spec = phantom_spec_from_json_file(phantom_spec_path);
    if (phantom_seed_set) spec.seed = phantom_seed;
    PhantomCase pc = generate(spec);
    fs::create_directories(phantom_out);
    fs::path dir(phantom_out);
    json truth;
    truth["tsl_scan_order"] = spec.tsl_scan_order;
    json t1rho_true = json::object();
    for (int code = 1; code <= kNumSubregions; ++code)
      t1rho_true[subregion_names()[static_cast<std::size_t>(code)]] =
          pc.truth.t1rho_ms[static_cast<std::size_t>(code - 1)];
    truth["t1rho_ms"] = t1rho_true;
    json frame_list = json::array();
    for (std::size_t i = 0; i < pc.series.frames.size(); ++i) {
      std::string name = "frame_" + std::to_string(i) + ".nii.gz";
      write_volume(pc.series.frames[i].second, (dir / name).string(),
                   NiftiDatatype::float32);
      json fr;
      fr["file"] = name;
      fr["tsl_ms"] = pc.series.frames[i].first;
      frame_list.push_back(fr);
    }
    truth["frames"] = frame_list;
    write_volume(from_label_volume(pc.mask), (dir / "mask.nii.gz").string(),
                 NiftiDatatype::uint8);
    write_volume(from_label_volume(pc.truth.subregions),
                 (dir / "truth_subregions.nii.gz").string(), NiftiDatatype::uint8);
    std::ofstream tf(dir / "truth.json");
    tf << truth.dump(2) << "\n";
    return 0;
  }

  if (*standardize) {
    DynamicSeries series = load_series(std_frames, std_tsl);
    LabelVolume mask = read_mask(std_mask);
    Volume reference = read_volume(std_reference);
    StandardizationResult sr = standardize_case(series, mask, reference, {});
    fs::create_directories(std_out);
    fs::path dir(std_out);
    for (std::size_t i = 0; i < sr.series.frames.size(); ++i)
      write_volume(sr.series.frames[i].second,
                   (dir / ("std_frame_" + std::to_string(i) + ".nii.gz")).string(),
                   NiftiDatatype::float32);
    write_volume(from_label_volume(sr.mask), (dir / "std_mask.nii.gz").string(),
                 NiftiDatatype::uint8);
    json t;
    t["rotations_deg"] = {sr.rigid.rotations_deg[0], sr.rigid.rotations_deg[1],
                          sr.rigid.rotations_deg[2]};
    t["translation_mm"] = {sr.rigid.translation_mm[0], sr.rigid.translation_mm[1],
                           sr.rigid.translation_mm[2]};
    std::ofstream tf(dir / "transform.json");
    tf << t.dump(2) << "\n";
    return 0;
  }

  if (*parcellate_cmd) {
    parc_cfg.strict = !parc_lenient;
    LabelVolume mask = read_mask(parc_mask);
    SubregionVolume sub = parcellate(mask, parc_cfg);
    if (fs::path(parc_out).has_parent_path())
      fs::create_directories(fs::path(parc_out).parent_path());
    write_volume(from_label_volume(sub), parc_out, NiftiDatatype::uint8);
    fs::path sidecar = fs::path(parc_out);
    while (sidecar.has_extension()) sidecar.replace_extension();
    write_subregion_sidecar_json(sidecar.string() + ".json");
    return 0;
  }

  if (*fit_cmd) {
    if (fit_model == "two_param")
      fit_cfg.model = FitModel::two_param;
    else if (fit_model == "three_param")
      fit_cfg.model = FitModel::three_param;
    else
      throw config_error("unknown fit model: " + fit_model);
    fit_cfg.validate();
    DynamicSeries series = load_series(fit_frames, fit_tsl);
    LabelVolume mask = read_mask(fit_mask);
    T1rhoMap map = fit_map(series, mask, fit_cfg);
    fs::create_directories(fit_out);
    fs::path dir(fit_out);
    write_volume(map.t1rho, (dir / "t1rho.nii.gz").string(), NiftiDatatype::float32);
    write_volume(map.i0, (dir / "i0.nii.gz").string(), NiftiDatatype::float32);
    write_volume(map.rss, (dir / "rss.nii.gz").string(), NiftiDatatype::float32);
    write_volume(from_label_volume(map.flags), (dir / "fit_flags.nii.gz").string(),
                 NiftiDatatype::uint8);
    return 0;
  }

  if (*stats_cmd) {
    T1rhoMap map;
    map.t1rho = read_volume(stats_t1rho);
    Volume flags = read_volume(stats_flags);
    map.flags = to_label_volume(flags);
    map.i0 = map.t1rho.grid_like();
    map.rss = map.t1rho.grid_like();
    Volume sub = read_volume(stats_sub);
    SubregionVolume subregions = to_label_volume(sub);
    for (Eigen::Index i = 0; i < subregions.data.size(); ++i)
      if (subregions.data[i] < 0 || subregions.data[i] > kNumSubregions)
        throw io_error("subregion volume holds codes outside 0..20");
    std::vector<RegionStats> rows = region_stats(map, subregions);
    fs::create_directories(stats_out);
    fs::path dir(stats_out);
    write_region_stats_csv(rows, (dir / "region_stats.csv").string());
    write_region_stats_json(rows, (dir / "region_stats.json").string());
    return 0;
  }

  if (*pipeline_run) {
    PipelineConfig cfg = pipeline_config_from_json_file(pipe_config);
    if (!pipe_out.empty()) cfg.output_dir = pipe_out;
    if (pipe_workers > 0) cfg.workers = pipe_workers;
    std::vector<CaseReport> reports = run_batch(cfg);
    bool all_ok = true;
    for (const auto& r : reports) {
      if (r.ok) {
        std::cout << r.id << ": ok\n";
      } else {
        all_ok = false;
        std::cerr << r.id << ": failed at " << r.failed_stage << ": " << r.error << "\n";
      }
    }
    if (!all_ok) throw numeric_error("one or more cases failed; see case manifests");
    return 0;
  }

  if (*agreement_run) {
    PipelineConfig cfg = pipeline_config_from_json_file(agr_config);
    if (!agr_out.empty()) cfg.output_dir = agr_out;
    if (agr_workers > 0) cfg.workers = agr_workers;
    AgreementReport report = run_agreement(cfg);
    std::cout << "agreement rows: " << report.rows.size()
              << ", seg rows: " << report.seg_rows.size() << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
