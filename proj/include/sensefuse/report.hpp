#pragma once

#include <string>

#include "sensefuse/config.hpp"
#include "sensefuse/sim.hpp"

namespace sensefuse {

/// CSV schemas (fixed column order, floats with 9 significant digits):
///   gospa.csv:   run,step,modality,target_class,fused,gospa,loc,missed,false
///   ue.csv:      run,step,modality,fused,err_pos_m,err_heading_deg,err_bias_m
///   summary.csv: modality,fused,rmse_pos_m,rmse_heading_deg,rmse_bias_m,samples
std::string gospa_csv(const RunReport& report);
std::string ue_csv(const RunReport& report);
std::string summary_csv(const RunReport& report);

/// matplotlib script consuming the CSVs; keeps plotting out of the core.
std::string plot_script();

/// Writes gospa.csv, ue.csv, summary.csv, config.resolved and plots.py into
/// the output directory (created if missing).
void write_run_outputs(const RunConfig& config, const RunReport& report,
                       const std::string& output_dir);

}  // namespace sensefuse
