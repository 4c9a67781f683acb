#include "dictdescent/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dictdescent/analysis.hpp"
#include "dictdescent/errors.hpp"
#include "dictdescent/stats.hpp"

namespace dictdescent {

std::string format17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string quoted(const std::string& s) { return Json(s).dump(); }

void dump_rec(const Json& j, int indent, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string pad_end(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad + quoted(k) + (indent > 0 ? ": " : ":");
        dump_rec(v, indent, depth + 1, out);
      }
      out += nl + pad_end + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      out += nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        dump_rec(v, indent, depth + 1, out);
      }
      out += nl + pad_end + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      out += std::isfinite(x) ? format17(x) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  out += "\n";
  return out;
}

std::string trace_csv(const GreedyTrace& trace) {
  std::string out = kTraceHeader;
  out += "\n";
  for (const auto& r : trace.rows) {
    out += std::to_string(r.m);
    for (double v : {r.energy, r.gap, r.sigma, r.step_norm, r.orth_residual, r.cum_step_s}) {
      out += ",";
      out += format17(v);
    }
    out += "\n";
  }
  return out;
}

std::vector<IterationRecord> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("trace is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw InvalidInput("trace header mismatch: '" + line + "'");
  std::vector<IterationRecord> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7)
      throw InvalidInput("trace line " + std::to_string(lineno) + ": expected 7 fields");
    IterationRecord r;
    double* fields[] = {&r.energy, &r.gap, &r.sigma, &r.step_norm, &r.orth_residual, &r.cum_step_s};
    try {
      std::size_t used = 0;
      r.m = std::stoi(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("m");
      for (int k = 0; k < 6; ++k) {
        *fields[k] = std::stod(cells[static_cast<std::size_t>(k) + 1], &used);
        if (used != cells[static_cast<std::size_t>(k) + 1].size()) throw std::invalid_argument("x");
      }
    } catch (const std::exception&) {
      throw InvalidInput("trace line " + std::to_string(lineno) + ": malformed number");
    }
    rows.push_back(r);
  }
  return rows;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------------- plot

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

PlotOutput render_plot(const std::vector<IterationRecord>& rows, int burn_in) {
  PlotOutput out;
  constexpr double width = 720, height = 420, left = 70, right = 20, top = 30, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  std::vector<double> gaps;
  for (const auto& r : rows) gaps.push_back(r.gap);
  double g0 = 0.0;
  for (double g : gaps)
    if (g > 0.0 && std::isfinite(g)) {
      g0 = g;
      break;
    }
  const double floor = g0 > 0.0 ? 1e-13 * g0 : 1e-300;
  auto clip = [&](double v) { return std::isfinite(v) && v > floor ? v : floor; };

  if (rows.size() < 2) out.warnings.push_back("degenerate plot: fewer than two trace rows");

  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& r : rows)
    for (double v : {clip(r.gap), clip(r.sigma)}) {
      ymin = std::min(ymin, std::log10(v));
      ymax = std::max(ymax, std::log10(v));
    }
  if (!(ymax > ymin)) {
    ymin = std::isfinite(ymin) ? ymin - 1.0 : -1.0;
    ymax = std::isfinite(ymax) ? ymax + 1.0 : 1.0;
  }
  const double mmax = rows.empty() ? 1.0 : std::max(1.0, static_cast<double>(rows.back().m));
  auto px = [&](double m) { return left + pw * m / mmax; };
  auto py = [&](double log_v) { return top + ph * (ymax - log_v) / (ymax - ymin); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
    << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
    << "\" fill=\"white\"/>\n";
  s << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw)
    << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = static_cast<int>(std::ceil(ymin)); k <= static_cast<int>(std::floor(ymax)); ++k)
    s << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(py(k) + 4)
      << "\" font-size=\"11\" text-anchor=\"end\">1e" << k << "</text>\n";
  s << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(height - 12)
    << "\" font-size=\"12\" text-anchor=\"middle\">iteration m (0.." << fmt(mmax) << ")</text>\n";

  // downsample long traces to at most ~2000 vertices per curve
  const std::size_t stride = std::max<std::size_t>(1, rows.size() / 2000);
  auto curve = [&](const char* cls, const char* color, auto get) {
    s << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < rows.size(); i += stride) {
      if (i) s << ' ';
      s << fmt(px(rows[i].m)) << ',' << fmt(py(std::log10(clip(get(rows[i])))));
    }
    if (!rows.empty() && (rows.size() - 1) % stride != 0)
      s << ' ' << fmt(px(rows.back().m)) << ',' << fmt(py(std::log10(clip(get(rows.back())))));
    s << "\"/>\n";
  };
  curve("gap", "#1f77b4", [](const IterationRecord& r) { return r.gap; });
  curve("sigma", "#d62728", [](const IterationRecord& r) { return r.sigma; });

  // overlay: the fitted model over the fit window, or a plain exponential
  // fit through every positive gap when the window is too short
  const RateReport rr = fit_rate(gaps, burn_in, floor);
  bool expo = true;
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  int start = 0, end = 0;
  if (rr.window >= 10) {
    expo = rr.kind == RateKind::exponential ||
           (rr.kind == RateKind::undetermined && rr.r_squared_exponential >= rr.r_squared_algebraic);
    start = std::max(rr.burn_in, 1);
    end = rr.floor_index - 1;
    slope = expo ? std::log(rr.fitted_alpha) : -rr.fitted_exponent;
    intercept = expo ? rr.intercept_exponential : rr.intercept_algebraic;
    r2 = expo ? rr.r_squared_exponential : rr.r_squared_algebraic;
  } else {
    std::vector<double> xs, ys;
    for (const auto& r : rows)
      if (std::isfinite(r.gap) && r.gap > floor) {
        xs.push_back(r.m);
        ys.push_back(std::log(r.gap));
      }
    if (xs.size() >= 2) {
      const LinearFit lf = linear_fit(xs, ys);
      slope = lf.slope;
      intercept = lf.intercept;
      r2 = lf.r_squared;
      start = static_cast<int>(xs.front());
      end = static_cast<int>(xs.back());
      out.warnings.push_back("fit window shorter than 10 points; overlay fitted through all positive gaps");
    } else {
      out.warnings.push_back("fewer than two positive gaps; empty rate overlay");
    }
  }
  s << "<path class=\"fit\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"6,4\" d=\"";
  if (end > start) {
    const int segments = 64;
    for (int k = 0; k <= segments; ++k) {
      const double m = start + (end - start) * static_cast<double>(k) / segments;
      const double lg = expo ? intercept + slope * m : intercept + slope * std::log(m);
      s << (k ? " L" : "M") << fmt(px(m)) << ',' << fmt(py(lg / std::log(10.0)));
    }
  }
  s << "\"/>\n";
  if (end > start)
    s << "<text x=\"" << fmt(left + 8) << "\" y=\"" << fmt(top + 16) << "\" font-size=\"12\">fit: "
      << (expo ? "exponential, rate " + fmt(std::exp(slope)) : "algebraic, exponent " + fmt(-slope))
      << ", r2 " << fmt(r2) << "</text>\n";
  s << "<text x=\"" << fmt(width - right - 8) << "\" y=\"" << fmt(top + 16)
    << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#1f77b4\">gap</text>\n";
  s << "<text x=\"" << fmt(width - right - 8) << "\" y=\"" << fmt(top + 32)
    << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#d62728\">sigma</text>\n";
  s << "</svg>\n";
  out.svg = s.str();
  return out;
}

}  // namespace dictdescent
