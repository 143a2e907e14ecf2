#include "sensefuse/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace sensefuse {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void append_gospa_row(std::string& out, const StepRecord& rec, const char* modality,
                      const char* target_class, const GospaResult& g) {
  out += std::to_string(rec.run) + "," + std::to_string(rec.step) + "," + modality + "," +
         target_class + "," + (rec.fused_run ? "1" : "0") + "," + fmt(g.total) + "," +
         fmt(g.localization) + "," + std::to_string(g.missed) + "," +
         std::to_string(g.false_alarms) + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << content;
}

}  // namespace

std::string gospa_csv(const RunReport& report) {
  std::string out = "run,step,modality,target_class,fused,gospa,loc,missed,false\n";
  for (const StepRecord& rec : report.records) {
    append_gospa_row(out, rec, "bistatic", "VA", rec.bistatic_va);
    append_gospa_row(out, rec, "bistatic", "SP", rec.bistatic_sp);
    append_gospa_row(out, rec, "monostatic", "IP", rec.mono_ip);
    append_gospa_row(out, rec, "monostatic", "VA", rec.mono_va);
    append_gospa_row(out, rec, "monostatic", "SP", rec.mono_sp);
  }
  return out;
}

std::string ue_csv(const RunReport& report) {
  constexpr double kRadToDeg = 180.0 / std::numbers::pi;
  std::string out = "run,step,modality,fused,err_pos_m,err_heading_deg,err_bias_m\n";
  for (const StepRecord& rec : report.records) {
    const std::string prefix = std::to_string(rec.run) + "," + std::to_string(rec.step);
    const std::string fused = rec.fused_run ? "1" : "0";
    out += prefix + ",bistatic," + fused + "," + fmt(rec.bistatic_pos_err) + "," +
           fmt(rec.bistatic_heading_err * kRadToDeg) + "," + fmt(rec.bistatic_bias_err) +
           "\n";
    out += prefix + ",monostatic," + fused + "," +
           (rec.mono_pos_err.has_value() ? fmt(*rec.mono_pos_err) : "nan") + ",nan,nan\n";
  }
  return out;
}

std::string summary_csv(const RunReport& report) {
  std::string out = "modality,fused,rmse_pos_m,rmse_heading_deg,rmse_bias_m,samples\n";
  for (const SummaryRow& row : report.summary) {
    out += std::string(to_string(row.modality)) + "," + (row.fused ? "1" : "0") + "," +
           fmt(row.rmse_pos) + "," + fmt(row.rmse_heading_deg) + "," +
           fmt(row.rmse_bias) + "," + std::to_string(row.samples) + "\n";
  }
  return out;
}

std::string plot_script() {
  return R"py(#!/usr/bin/env python3
"""Plots the run outputs (gospa.csv, ue.csv, summary.csv) in this directory."""
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
gospa = pd.read_csv(os.path.join(here, "gospa.csv"))
summary = pd.read_csv(os.path.join(here, "summary.csv"))

def mean_curve(modality, target_class, fused):
    sel = gospa[(gospa.modality == modality) & (gospa.target_class == target_class)
                & (gospa.fused == fused)]
    return sel.groupby("step").gospa.mean()

fig, axes = plt.subplots(2, 1, figsize=(8, 8), sharex=True)
for target, color in (("VA", "tab:blue"), ("SP", "tab:red")):
    for fused, style in ((1, "-"), (0, "--")):
        curve = mean_curve("bistatic", target, fused)
        if len(curve):
            axes[0].plot(curve.index, curve.values, style, color=color,
                         label=f"{target}, {'with' if fused else 'without'} fusion")
for target, color in (("IP", "tab:blue"), ("VA", "tab:red"), ("SP", "tab:olive")):
    for fused, style in ((1, "-"), (0, "--")):
        curve = mean_curve("monostatic", target, fused)
        if len(curve):
            axes[1].plot(curve.index, curve.values, style, color=color,
                         label=f"{target}, {'with' if fused else 'without'} fusion")
axes[0].set_ylabel("GOSPA [m] (bistatic)")
axes[1].set_ylabel("GOSPA [m] (monostatic)")
axes[1].set_xlabel("time step")
for ax in axes:
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(os.path.join(here, "gospa.png"), dpi=150)

fig2, ax2 = plt.subplots(figsize=(7, 4))
labels = ["position [m]", "heading [deg]", "clock bias [m]"]
width = 0.2
for k, (modality, fused) in enumerate([("bistatic", 1), ("bistatic", 0),
                                       ("monostatic", 1), ("monostatic", 0)]):
    row = summary[(summary.modality == modality) & (summary.fused == fused)]
    if row.empty:
        continue
    vals = [row.rmse_pos_m.iloc[0], row.rmse_heading_deg.iloc[0], row.rmse_bias_m.iloc[0]]
    ax2.bar([i + (k - 1.5) * width for i in range(3)], vals, width,
            label=f"{modality}, {'with' if fused else 'without'} fusion")
ax2.set_xticks(range(3))
ax2.set_xticklabels(labels)
ax2.set_ylabel("RMSE")
ax2.legend(fontsize=8)
ax2.grid(alpha=0.3, axis="y")
fig2.tight_layout()
fig2.savefig(os.path.join(here, "rmse.png"), dpi=150)
print("wrote", os.path.join(here, "gospa.png"), "and", os.path.join(here, "rmse.png"))
)py";
}

void write_run_outputs(const RunConfig& config, const RunReport& report,
                       const std::string& output_dir) {
  const std::filesystem::path dir(output_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "gospa.csv", gospa_csv(report));
  write_file(dir / "ue.csv", ue_csv(report));
  write_file(dir / "summary.csv", summary_csv(report));
  write_file(dir / "config.resolved", resolved_config_json(config));
  write_file(dir / "plots.py", plot_script());
}

}  // namespace sensefuse
