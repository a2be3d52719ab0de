#pragma once

#include "chartattack/annotation.hpp"

namespace chartattack {

// A partial annotation tree holding only the fields to overwrite.
// Merge semantics:
//   - structural objects (root, main_axes, axis specs, axis_range,
//     secondary_axis) merge recursively;
//   - dynamic-keyed maps (data, colors, scaling_factors) and all lists
//     and scalars replace wholesale;
//   - a JSON null deletes the key (annotations never store nulls).
struct Patch {
    json tree = json::object();

    bool empty() const { return tree.empty(); }
    bool operator==(const Patch&) const = default;
};

// Applies `p` on top of `a` and revalidates. Pure: `a` is unchanged.
// Throws PatchError on path/type clashes or post-merge invariant breaks.
ChartAnnotation apply_patch(const ChartAnnotation& a, const Patch& p);

// Minimal patch with apply_patch(original, diff) == modified: only
// changed fields appear, and dynamic maps are included wholesale when
// any of their entries differ.
Patch diff_patch(const ChartAnnotation& original, const ChartAnnotation& modified);

// Raw tree merge used by apply_patch; exposed for tests and for patch
// handling in attacker-response snippets.
json merge_annotation_tree(const json& base, const json& patch);

}  // namespace chartattack
