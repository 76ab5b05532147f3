#pragma once

#include <optional>
#include <string>

#include "rvqlab/audio.h"
#include "rvqlab/metrics.h"

namespace rvqlab::metrics {

inline constexpr const char* kPesqToolEnv = "RVQLAB_PESQ_TOOL";
inline constexpr double kPesqMin = -0.5;
inline constexpr double kPesqMax = 4.64;
inline constexpr double kPesqSlack = 0.005;

// Path from the argument, else from $RVQLAB_PESQ_TOOL; empty when neither.
std::string pesq_tool_path(const std::string& explicit_path = {});

// Wideband PESQ through an external executable, invoked as
//   <tool> <reference.wav> <degraded.wav>
// with both files 16 kHz PCM16. The last number printed is the score.
// Returns nullopt when no tool is configured. ExternalToolError when the
// tool fails or prints no score in [-0.5, 4.64]. Scores up to 4.645 are
// clamped to 4.64.
std::optional<MetricValue> pesq(const AudioBuffer& ref, const AudioBuffer& test,
                                const std::string& tool_path = {});

// Parses the score from tool output; ExternalToolError when absent or out of range.
double parse_pesq_output(const std::string& output);

}  // namespace rvqlab::metrics
