#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "chartattack/annotation.hpp"
#include "chartattack/patch.hpp"
#include "chartattack/rng.hpp"

namespace chartattack {

enum class MisleaderKind {
    dual_axis,
    inverted_axis,
    log_scale,        // inappropriate_use_of_log_scale
    line_misuse,      // inappropriate_use_of_line
    stacked_misuse,   // inappropriate_use_of_stacked
    three_d,          // 3d
    color_scheme,     // ineffective_color_scheme
    misrepresentation,
};

inline constexpr MisleaderKind kAllMisleaders[] = {
    MisleaderKind::dual_axis,      MisleaderKind::inverted_axis, MisleaderKind::log_scale,
    MisleaderKind::line_misuse,    MisleaderKind::stacked_misuse, MisleaderKind::three_d,
    MisleaderKind::color_scheme,   MisleaderKind::misrepresentation,
};

// Wire identifiers used in corpus files, prompts and CLI flags.
std::string to_string(MisleaderKind k);
MisleaderKind misleader_from_string(std::string_view s);
std::optional<MisleaderKind> try_misleader_from_string(std::string_view s);

enum class Provenance { rule_based, llm_attacker };

struct MisleaderApplication {
    MisleaderKind kind = MisleaderKind::inverted_axis;
    Patch patch;
    std::optional<json> misleading_answer;  // native JSON scalar (number or string)
    Provenance provenance = Provenance::rule_based;

    bool operator==(const MisleaderApplication&) const = default;
};

struct MisleaderConfig {
    // scaling-factor bands for misrepresentation
    double shrink_lo = 0.4, shrink_hi = 0.8;
    double grow_lo = 1.25, grow_hi = 1.8;
    // relative padding added around the secondary-axis range
    double dual_axis_padding = 0.05;
    // how multi-series charts flatten into stack layers
    std::string stacked_layer_separator = " - ";
};

// Chart types a technique can affect at all, independent of the concrete
// annotation's structure.
bool type_compatible(ChartType type, MisleaderKind kind);

// Type compatibility narrowed by the annotation's structure (series
// count, positivity, current flags).
std::set<MisleaderKind> compatible_misleaders(const ChartAnnotation& a);

// Individual rule-based generators. Each returns a minimal patch;
// incompatible inputs raise IncompatibleError.
MisleaderApplication apply_flag_misleader(const ChartAnnotation& a, MisleaderKind kind);
MisleaderApplication apply_dual_axis(const ChartAnnotation& a, const MisleaderConfig& cfg = {});
MisleaderApplication apply_stacked_misuse(const ChartAnnotation& a, const MisleaderConfig& cfg = {});
MisleaderApplication apply_color_scheme(const ChartAnnotation& a, Rng& rng);
MisleaderApplication apply_misrepresentation(const ChartAnnotation& a, Rng& rng,
                                             const MisleaderConfig& cfg = {});

// Dispatching entry point; seed covers the randomized techniques.
MisleaderApplication apply(const ChartAnnotation& a, MisleaderKind kind, uint64_t seed,
                           const MisleaderConfig& cfg = {});

}  // namespace chartattack
