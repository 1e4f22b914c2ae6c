#pragma once

#include <string>
#include <vector>

#include "jaam/harness.hpp"
#include "jaam/stepper.hpp"

namespace jaam {

/// %.17g; "nan" and "inf" for non-finite values.
std::string format_double(double v);

// Column layouts:
//   errors.csv   h_max,scheme,h_mean,step,rms_error,rms_stderr,mean_steps,
//                backstop_frequency,truncated_frequency
//   slopes.csv   scheme,axis,slope,intercept,residual,points (axis: h_mean | step)
//   timing.csv   h_max,h_mean, then cpu_<scheme> and steps_<scheme> per scheme
//   backstop.csv h_max,rho,kappa,steps,frequency,norm_frequency,
//                truncated_frequency,jump_term
//   trace.csv    t,h,norm_y,used_backstop,jump_applied
std::string errors_csv(const ErrorTable& table);
std::string slopes_csv(const ErrorTable& table);
std::string timing_csv(const ErrorTable& table);
std::string backstop_csv(const std::vector<BackstopRow>& rows);
std::string trace_csv(const PathRecord& record);

/// Python/matplotlib script that reads the CSVs next to it.
std::string plot_script(ExperimentMode mode);

/// Writes text to path, creating parent directories.
void write_text(const std::string& path, const std::string& text);

}  // namespace jaam
