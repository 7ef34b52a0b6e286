#pragma once

#include "t1rho/fitting.hpp"
#include "t1rho/parcellation.hpp"
#include "t1rho/phantom.hpp"
#include "t1rho/registration.hpp"
#include "t1rho/stats.hpp"

#include <string>
#include <vector>

namespace t1rho {

struct CaseSpec {
  std::string id;
  std::vector<std::string> frame_paths;
  std::vector<double> tsl;  // from config, not from image headers
  std::string mask_path;
  std::string pred_mask_path;  // optional second mask for agreement reports
};

struct StageToggles {
  bool standardize = true;
  bool parcellate = true;
  bool fit = true;
  bool stats = true;
  bool inputs_prestandardized = false;  // required to disable standardisation
};

struct PipelineConfig {
  std::vector<CaseSpec> cases;
  std::string reference_path;
  FitConfig fit;
  ParcellationConfig parcellation;
  RegistrationConfig registration;
  StageToggles stages;
  std::string output_dir;
  int workers = 1;
  std::string config_hash;  // filled by the loader

  void validate() const;
};

PipelineConfig pipeline_config_from_json_file(const std::string& path);

struct CaseReport {
  std::string id;
  bool ok = false;
  std::string failed_stage;  // empty on success
  std::string error;
  std::vector<RegionStats> stats;
};

/// Full per-case pipeline: ingest -> standardise -> parcellate -> fit ->
/// region stats, writing volumes, CSV/JSON tables and a run manifest under
/// output_dir/<case id>/. Stage errors are captured in the report.
CaseReport run_case(const PipelineConfig& cfg, const CaseSpec& c);

/// Batch driver; cases run in up to cfg.workers threads, reports ordered as
/// configured.
std::vector<CaseReport> run_batch(const PipelineConfig& cfg);

struct SegMetricRow {
  std::string case_id;
  int compartment = 0;
  double dsc = 0.0;
  double assd_mm = 0.0;
};

struct AgreementReport {
  std::vector<AgreementRow> rows;       // 20 subregions + 3 compartments
  std::vector<SegMetricRow> seg_rows;   // per case per compartment
};

/// Dual quantification (reference vs predicted masks) per case, then
/// normality-gated comparison per subregion across cases, plus per-case
/// DSC/ASSD. Requires >= 3 cases, each with both masks.
AgreementReport run_agreement(const PipelineConfig& cfg);

// Report writers (6 significant digits, deterministic byte output).
std::string format_g6(double v);
void write_region_stats_csv(const std::vector<RegionStats>& rows,
                            const std::string& path);
void write_region_stats_json(const std::vector<RegionStats>& rows,
                             const std::string& path);
void write_agreement_csv(const std::vector<AgreementRow>& rows,
                         const std::string& path);
void write_agreement_json(const std::vector<AgreementRow>& rows,
                          const std::string& path);
void write_seg_metrics_csv(const std::vector<SegMetricRow>& rows,
                           const std::string& path);
void write_ba_points_csv(const AgreementRow& row, const std::string& path);
void write_subregion_sidecar_json(const std::string& path);

}  // namespace t1rho
