#include "jaam/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace jaam {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

namespace {

std::vector<std::string> schemes_in_order(const ErrorTable& table) {
  std::vector<std::string> out;
  for (const auto& row : table.rows)
    if (std::find(out.begin(), out.end(), row.scheme) == out.end()) out.push_back(row.scheme);
  return out;
}

}  // namespace

std::string errors_csv(const ErrorTable& table) {
  std::string out =
      "h_max,scheme,h_mean,step,rms_error,rms_stderr,mean_steps,backstop_frequency,"
      "truncated_frequency\n";
  for (const auto& r : table.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", format_double(r.h_max), r.scheme,
                       format_double(r.h_mean), format_double(r.step),
                       format_double(r.rms_error), format_double(r.rms_stderr),
                       format_double(r.mean_steps), format_double(r.backstop_frequency),
                       format_double(r.truncated_frequency));
  }
  return out;
}

std::string slopes_csv(const ErrorTable& table) {
  std::string out = "scheme,axis,slope,intercept,residual,points\n";
  for (const auto& s : table.slopes)
    out += fmt::format("{},{},{},{},{},{}\n", s.scheme, to_string(s.axis), format_double(s.slope),
                       format_double(s.intercept), format_double(s.residual), s.points);
  return out;
}

std::string timing_csv(const ErrorTable& table) {
  const auto schemes = schemes_in_order(table);
  std::string out = "h_max,h_mean";
  for (const auto& s : schemes) out += ",cpu_" + s;
  for (const auto& s : schemes) out += ",steps_" + s;
  out += "\n";

  std::vector<double> seen;
  for (const auto& row : table.rows) {
    if (std::find(seen.begin(), seen.end(), row.h_max) != seen.end()) continue;
    seen.push_back(row.h_max);
    std::string cpu, steps;
    for (const auto& s : schemes) {
      const ErrorRow* match = nullptr;
      for (const auto& r : table.rows)
        if (r.h_max == row.h_max && r.scheme == s) match = &r;
      cpu += "," + (match ? format_double(match->mean_cpu_seconds) : std::string("nan"));
      steps += "," + (match ? format_double(match->mean_steps) : std::string("nan"));
    }
    out += format_double(row.h_max) + "," + format_double(row.h_mean) + cpu + steps + "\n";
  }
  return out;
}

std::string backstop_csv(const std::vector<BackstopRow>& rows) {
  std::string out =
      "h_max,rho,kappa,steps,frequency,norm_frequency,truncated_frequency,jump_term\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{}\n", format_double(r.h_max), format_double(r.rho),
                       format_double(r.kappa), r.steps, format_double(r.frequency),
                       format_double(r.norm_frequency), format_double(r.truncated_frequency),
                       format_double(r.jump_term));
  return out;
}

std::string trace_csv(const PathRecord& record) {
  std::string out = "t,h,norm_y,used_backstop,jump_applied\n";
  for (const auto& n : record.nodes)
    out += fmt::format("{},{},{},{},{}\n", format_double(n.t_next), format_double(n.h_used),
                       format_double(n.state_after_jump.norm()), n.used_backstop ? 1 : 0,
                       n.jump_applied ? 1 : 0);
  return out;
}

std::string plot_script(ExperimentMode mode) {
  if (mode == ExperimentMode::Backstop) {
    return R"(#!/usr/bin/env python3
import csv, os, sys
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(sys.argv[0]))
rows = list(csv.DictReader(open(os.path.join(here, "backstop.csv"))))
fig, ax = plt.subplots()
for h in sorted({r["h_max"] for r in rows}, key=float):
    sel = sorted((r for r in rows if r["h_max"] == h), key=lambda r: float(r["rho"]))
    ax.loglog([float(r["rho"]) for r in sel], [max(float(r["frequency"]), 1e-12) for r in sel],
              "o-", label=f"h_max={float(h):g}")
ax.set_xlabel("rho")
ax.set_ylabel("backstop frequency")
ax.legend()
fig.savefig(os.path.join(here, "backstop.png"), dpi=150)
)";
  }
  return R"(#!/usr/bin/env python3
import csv, os, sys
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(sys.argv[0]))

def read(name):
    path = os.path.join(here, name)
    return list(csv.DictReader(open(path))) if os.path.exists(path) else []

errors = [r for r in read("errors.csv") if r["rms_error"] not in ("nan", "")]
timing = read("timing.csv")
panels = (1 if errors else 0) + (1 if timing else 0)
fig, axes = plt.subplots(1, max(panels, 1), figsize=(6 * max(panels, 1), 4.5), squeeze=False)
col = 0
if errors:
    ax = axes[0][col]; col += 1
    for s in dict.fromkeys(r["scheme"] for r in errors):
        sel = [r for r in errors if r["scheme"] == s]
        ax.loglog([float(r["h_mean"]) for r in sel], [float(r["rms_error"]) for r in sel],
                  "o-", label=s)
    hs = sorted(float(r["h_mean"]) for r in errors)
    e0 = min(float(r["rms_error"]) for r in errors)
    ax.loglog(hs, [e0 * h / hs[0] for h in hs], "k--", label="slope 1")
    ax.set_xlabel("h_mean"); ax.set_ylabel("RMS error"); ax.legend()
if timing:
    ax = axes[0][col]
    schemes = [k[4:] for k in timing[0] if k.startswith("cpu_")]
    if errors:
        for s in schemes:
            xs, ys = [], []
            for t in timing:
                match = [r for r in errors if r["scheme"] == s and r["h_max"] == t["h_max"]]
                if match:
                    xs.append(float(t["cpu_" + s])); ys.append(float(match[0]["rms_error"]))
            ax.loglog(xs, ys, "o-", label=s)
        ax.set_xlabel("mean CPU time per path [s]"); ax.set_ylabel("RMS error")
    else:
        for s in schemes:
            ax.loglog([float(t["h_mean"]) for t in timing], [float(t["cpu_" + s]) for t in timing],
                      "o-", label=s)
        ax.set_xlabel("h_mean"); ax.set_ylabel("mean CPU time per path [s]")
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "plot.png"), dpi=150)
)";
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace jaam
