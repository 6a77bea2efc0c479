#include "app/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace mmae::app {

namespace {

// Light yellow to dark red.
constexpr const char* kPalette[10] = {"#fff7ec", "#fee8c8", "#fdd49e", "#fdbb84", "#fc8d59",
                                      "#ef6548", "#d7301f", "#b30000", "#8b0000", "#5a0000"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> score_deciles(const tensor::Tensor<double>& point_scores) {
  const auto s = point_scores.data();
  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::uint8_t> levels(s.size());
  const double n = double(sorted.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), s[i]) - sorted.begin();
    levels[i] = static_cast<std::uint8_t>(std::clamp(int(10.0 * double(below) / n), 0, 9));
  }
  return levels;
}

std::vector<std::size_t> parse_lead_list(const std::string& text, std::size_t leads) {
  const auto names = data::lead_names(leads);
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto it = std::find(names.begin(), names.end(), item);
    if (it != names.end()) {
      out.push_back(std::size_t(it - names.begin()));
      continue;
    }
    const bool digits = std::all_of(item.begin(), item.end(), [](char c) { return c >= '0' && c <= '9'; });
    require(digits, ErrorCode::Config, "unknown lead '" + item + "'");
    const std::size_t k = std::stoul(item);
    require(k < leads, ErrorCode::Config, "lead index " + item + " out of range (record has " +
                                              std::to_string(leads) + " leads)");
    out.push_back(k);
  }
  require(!out.empty(), ErrorCode::Config, "empty lead list");
  return out;
}

std::string render_localization_svg(const data::EcgRecord& record, const train::AnomalyReport& report,
                                    const SvgOptions& o) {
  const std::size_t q_total = record.samples();
  const std::size_t begin = o.window_begin;
  const std::size_t end = o.window_end == 0 ? q_total : o.window_end;
  require(begin < end, ErrorCode::Config, "empty sample window");
  require(end <= q_total, ErrorCode::Config,
          "window end " + std::to_string(end) + " exceeds the record length " + std::to_string(q_total));
  require(report.point_scores.rows() == record.leads() && report.point_scores.cols() == q_total, ErrorCode::Contract,
          "report does not match the record shape");
  std::vector<std::size_t> leads = o.leads;
  if (leads.empty()) {
    for (std::size_t k = 0; k < record.leads(); ++k) leads.push_back(k);
  }
  for (auto k : leads) require(k < record.leads(), ErrorCode::Config, "lead index out of range");

  const auto levels = score_deciles(report.point_scores);
  const auto names = data::lead_names(record.leads());
  const double margin = 60;
  const double plot_w = o.width - margin - 10;
  const double panel = o.lead_height + o.strip_height + 16;
  const double height = 30 + panel * double(leads.size());
  const std::size_t span = end - begin;
  auto x_of = [&](double q) { return margin + plot_w * (q - double(begin)) / double(span); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(o.width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(o.width) << ' ' << num(height) << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << num(o.width) << "\" height=\"" << num(height)
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(margin) << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << escape(record.id)
      << " score " << num(report.sample_score) << " samples " << begin << ":" << end << "</text>\n";

  for (std::size_t li = 0; li < leads.size(); ++li) {
    const std::size_t k = leads[li];
    const double top = 30 + panel * double(li);
    const float* sig = record.signal.row(k);
    const auto [lo_it, hi_it] = std::minmax_element(sig + begin, sig + end);
    double lo = *lo_it, hi = *hi_it;
    if (hi - lo < 1e-9) {
      lo -= 0.5;
      hi += 0.5;
    }
    auto y_of = [&](double v) { return top + 4 + (o.lead_height - 8) * (1.0 - (v - lo) / (hi - lo)); };

    svg << "<g class=\"lead\" data-lead=\"" << escape(names[k]) << "\">\n";
    svg << "<text x=\"4\" y=\"" << num(top + o.lead_height / 2) << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape(names[k]) << "</text>\n";

    const double strip_y = top + o.lead_height + 2;
    for (std::size_t q = begin; q < end;) {
      const std::uint8_t level = levels[k * q_total + q];
      std::size_t r = q + 1;
      while (r < end && levels[k * q_total + r] == level) ++r;
      svg << "<rect class=\"score\" data-level=\"" << int(level) << "\" data-begin=\"" << q << "\" data-end=\"" << r
          << "\" x=\"" << num(x_of(double(q))) << "\" y=\"" << num(strip_y) << "\" width=\""
          << num(x_of(double(r)) - x_of(double(q))) << "\" height=\"" << num(o.strip_height) << "\" fill=\""
          << kPalette[level] << "\"/>\n";
      q = r;
    }

    if (record.point_mask) {
      const auto& mask = *record.point_mask;
      for (std::size_t q = begin; q < end;) {
        if (!mask[k * q_total + q]) {
          ++q;
          continue;
        }
        std::size_t r = q + 1;
        while (r < end && mask[k * q_total + r]) ++r;
        svg << "<rect class=\"truth\" data-begin=\"" << q << "\" data-end=\"" << r << "\" x=\""
            << num(x_of(double(q))) << "\" y=\"" << num(top) << "\" width=\"" << num(x_of(double(r)) - x_of(double(q)))
            << "\" height=\"" << num(o.lead_height + o.strip_height + 2)
            << "\" fill=\"none\" stroke=\"red\" stroke-width=\"1.5\"/>\n";
        q = r;
      }
    }

    svg << "<polyline fill=\"none\" stroke=\"#1f3b73\" stroke-width=\"1\" points=\"";
    for (std::size_t q = begin; q < end; ++q) {
      if (q > begin) svg << ' ';
      svg << num(x_of(double(q))) << ',' << num(y_of(sig[q]));
    }
    svg << "\"/>\n</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace mmae::app
