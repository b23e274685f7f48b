#pragma once
// Report rendering. Category columns follow the fixed report order, then
// Average. PSNR is shown with 2 decimals, SSIM with 4.

#include <filesystem>
#include <string>

#include "trajrest/metrics.hpp"

namespace trajrest {

enum class ReportFormat { kCsv, kMarkdown };

// Rounds the shortest decimal form of v half away from zero, so 23.345 gives
// "23.35" even though the nearest double lies just below it.
std::string format_fixed(double v, int decimals);

// Both throw std::invalid_argument on a report with no categories.
std::string render_markdown(const EvalReport& report);
std::string render_csv(const EvalReport& report);

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);

// Reads back render_csv output (values at the printed precision).
EvalReport parse_report_csv(const std::string& text);

}  // namespace trajrest
