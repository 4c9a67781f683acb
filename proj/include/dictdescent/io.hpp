#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "dictdescent/greedy.hpp"

namespace dictdescent {

using Json = nlohmann::ordered_json;

// %.17g; non-finite values become "nan" / "inf" (CSV) or null (JSON)
std::string format17(double x);

// JSON text with every floating-point number written with 17 significant digits
std::string dump_json(const Json& j, int indent = 2);

inline constexpr const char* kTraceHeader = "m,energy,gap,sigma,step_norm,orth_residual,cum_step_s";

std::string trace_csv(const GreedyTrace& trace);
// rows with the CSV columns filled; throws InvalidInput on malformed text
std::vector<IterationRecord> parse_trace_csv(const std::string& text);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

struct PlotOutput {
  std::string svg;
  std::vector<std::string> warnings;
};

// log-scale gap and sigma curves against m plus the fitted-rate overlay
PlotOutput render_plot(const std::vector<IterationRecord>& rows, int burn_in = 5);

}  // namespace dictdescent
