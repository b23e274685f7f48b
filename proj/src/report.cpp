#include "trajrest/report.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trajrest {

std::string format_fixed(double v, int decimals) {
  std::array<char, 128> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
  std::string s(buf.data(), res.ptr);
  const bool negative = !s.empty() && s[0] == '-';
  if (negative) s.erase(0, 1);
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    s += '.';
    dot = s.size() - 1;
  }
  std::string frac = s.substr(dot + 1);
  std::string digits = s.substr(0, dot);
  const bool round_up = frac.size() > static_cast<std::size_t>(decimals) && frac[decimals] >= '5';
  frac.resize(decimals, '0');
  std::string all = digits + frac;
  if (round_up) {
    int i = static_cast<int>(all.size()) - 1;
    while (i >= 0) {
      if (all[i] == '9') {
        all[i] = '0';
        --i;
      } else {
        ++all[i];
        break;
      }
    }
    if (i < 0) all.insert(all.begin(), '1');
  }
  const std::size_t int_len = all.size() - decimals;
  std::string out = all.substr(0, int_len);
  if (decimals > 0) out += "." + all.substr(int_len);
  const bool zero = out.find_first_not_of("0.") == std::string::npos;
  return (negative && !zero ? "-" : "") + out;
}

namespace {

void require_categories(const EvalReport& r) {
  if (r.categories.empty()) throw std::invalid_argument("report has no categories");
}

int total_count(const EvalReport& r) {
  int n = 0;
  for (const auto& c : r.categories) n += c.count;
  return n;
}

}  // namespace

std::string render_markdown(const EvalReport& r) {
  require_categories(r);
  std::string head = "| Metric |";
  std::string rule = "|---|";
  std::string p = "| PSNR |";
  std::string s = "| SSIM |";
  for (const auto& c : r.categories) {
    head += " " + c.category + " |";
    rule += "---|";
    p += " " + format_fixed(c.psnr, 2) + " |";
    s += " " + format_fixed(c.ssim, 4) + " |";
  }
  head += " Average |";
  rule += "---|";
  p += " " + format_fixed(r.psnr, 2) + " |";
  s += " " + format_fixed(r.ssim, 4) + " |";
  return head + "\n" + rule + "\n" + p + "\n" + s + "\n";
}

std::string render_csv(const EvalReport& r) {
  require_categories(r);
  std::string out = "category,count,psnr,ssim\n";
  for (const auto& c : r.categories) {
    out += c.category + "," + std::to_string(c.count) + "," + format_fixed(c.psnr, 2) + "," + format_fixed(c.ssim, 4) +
           "\n";
  }
  out += "Average," + std::to_string(total_count(r)) + "," + format_fixed(r.psnr, 2) + "," + format_fixed(r.ssim, 4) +
         "\n";
  return out;
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
  const std::string text = format == ReportFormat::kCsv ? render_csv(report) : render_markdown(report);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

EvalReport parse_report_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "category,count,psnr,ssim") {
    throw std::invalid_argument("report csv: missing header");
  }
  EvalReport r;
  bool have_average = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cat, count, p, s;
    if (!std::getline(ls, cat, ',') || !std::getline(ls, count, ',') || !std::getline(ls, p, ',') ||
        !std::getline(ls, s)) {
      throw std::invalid_argument("report csv: malformed line '" + line + "'");
    }
    try {
      if (cat == "Average") {
        r.psnr = std::stod(p);
        r.ssim = std::stod(s);
        have_average = true;
      } else {
        r.categories.push_back({cat, std::stoi(count), std::stod(p), std::stod(s)});
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("report csv: bad number in line '" + line + "'");
    }
  }
  if (!have_average) throw std::invalid_argument("report csv: missing Average row");
  return r;
}

}  // namespace trajrest
