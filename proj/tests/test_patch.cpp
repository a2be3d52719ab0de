#include <doctest.h>

#include <set>

#include "chartattack/errors.hpp"
#include "chartattack/patch.hpp"
#include "fixtures.hpp"

using namespace chartattack;

namespace {

// Leaf enumeration mirroring the documented merge semantics: objects
// recurse only along the structural skeleton, everything else is one leaf.
const std::set<std::string> kStructural = {
    "",
    "main_axes",
    "main_axes.x_axis",
    "main_axes.y_axis",
    "main_axes.x_axis.axis_range",
    "main_axes.y_axis.axis_range",
    "secondary_axis",
    "secondary_axis.x_axis",
    "secondary_axis.y_axis",
    "secondary_axis.x_axis.axis_range",
    "secondary_axis.y_axis.axis_range",
};

void flatten(const json& node, const std::string& path,
             std::vector<std::pair<std::string, json>>& out) {
    if (node.is_object() && kStructural.count(path)) {
        for (const auto& [k, v] : node.items())
            flatten(v, path.empty() ? k : path + "." + k, out);
        return;
    }
    out.push_back({path, node});
}

json tree_from_leaves(const std::vector<std::pair<std::string, json>>& leaves,
                      const std::vector<bool>& select) {
    json tree = json::object();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (!select[i]) continue;
        const std::string& path = leaves[i].first;
        json* node = &tree;
        std::size_t start = 0;
        while (true) {
            std::size_t dot = path.find('.', start);
            std::string key = path.substr(start, dot - start);
            if (dot == std::string::npos) {
                (*node)[key] = leaves[i].second;
                break;
            }
            if (!node->contains(key)) (*node)[key] = json::object();
            node = &(*node)[key];
            start = dot + 1;
        }
    }
    return tree;
}

// Exhaustively checks that no strict sub-patch of diff_patch(a, b) turns
// a into b (for patches of at most `max_leaves` leaves).
void check_minimal(const ChartAnnotation& a, const ChartAnnotation& b, std::size_t max_leaves = 6) {
    Patch p = diff_patch(a, b);
    ChartAnnotation applied = apply_patch(a, p);
    REQUIRE(applied == b);

    std::vector<std::pair<std::string, json>> leaves;
    flatten(p.tree, "", leaves);
    REQUIRE(leaves.size() <= max_leaves);
    for (std::size_t mask = 0; mask + 1 < (1u << leaves.size()); ++mask) {
        std::vector<bool> select(leaves.size());
        for (std::size_t i = 0; i < leaves.size(); ++i) select[i] = (mask >> i) & 1;
        Patch sub{tree_from_leaves(leaves, select)};
        try {
            ChartAnnotation partial = apply_patch(a, sub);
            CHECK_FALSE(partial == b);
        } catch (const PatchError&) {
            // a sub-patch may be invalid on its own; that still means it
            // does not reproduce b
        }
    }
}

}  // namespace

TEST_SUITE_BEGIN("patch");

TEST_CASE("a single-leaf patch changes only that leaf") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    a.y_axis.axis_range = {1, 100};
    Patch p{json{{"main_axes", {{"y_axis", {{"scale", "log"}}}}}}};
    ChartAnnotation out = apply_patch(a, p);
    CHECK(out.y_axis.scale == AxisScale::log);
    ChartAnnotation expected = a;
    expected.y_axis.scale = AxisScale::log;
    CHECK(out == expected);
}

TEST_CASE("an empty patch is the identity") {
    ChartAnnotation a = fixtures::make_h_bar(2, 4);
    CHECK(apply_patch(a, Patch{}) == a);
}

TEST_CASE("replacing the data map leaves categories and colors alone") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);
    json new_data = json::object();
    new_data["s0"] = json::array({1, 2, 3});
    new_data["s1"] = json::array({4, 5, 6});
    ChartAnnotation out = apply_patch(a, Patch{json{{"data", new_data}}});
    CHECK(out.data.find("s0")->at(0) == 1);
    CHECK(out.categories == a.categories);
    CHECK(out.colors == a.colors);
    CHECK(out.title == a.title);
}

TEST_CASE("data replacement is wholesale, not key-merged") {
    ChartAnnotation a = fixtures::make_v_bar(1, 1);
    a.colors.reset();
    json new_data = {{"other", json::array({5})}};
    ChartAnnotation out = apply_patch(a, Patch{json{{"data", new_data}}});
    CHECK(out.data.size() == 1);
    CHECK(out.data.contains("other"));
    CHECK_FALSE(out.data.contains("s0"));
}

TEST_CASE("apply_patch never mutates its input") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    ChartAnnotation copy = a;
    apply_patch(a, Patch{json{{"3D effect", true}}});
    CHECK(a == copy);
}

TEST_CASE("invalid patches are rejected with a path") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    CHECK_THROWS_AS(apply_patch(a, Patch{json{{"main_axes", {{"y_axis", {{"direction", 7}}}}}}}),
                    PatchError);
    // post-merge invariant violation: series length vs categories
    json bad_data = {{"s0", json::array({1, 2, 3, 4, 5})}};
    CHECK_THROWS_AS(apply_patch(a, Patch{json{{"data", bad_data}}}), PatchError);
}

TEST_CASE("null deletes an optional field") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    a.title = "to be removed";
    ChartAnnotation out = apply_patch(a, Patch{json{{"title", nullptr}}});
    CHECK_FALSE(out.title.has_value());
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("diff");

TEST_CASE("diffing an annotation against itself is empty") {
    ChartAnnotation a = fixtures::make_line(2, 5);
    CHECK(diff_patch(a, a).empty());
}

TEST_CASE("a three-d flip produces exactly the flag entry") {
    ChartAnnotation a = fixtures::make_v_bar(1, 2);
    ChartAnnotation b = a;
    b.three_d_effect = true;
    Patch p = diff_patch(a, b);
    CHECK(p.tree == json{{"3D effect", true}});
}

TEST_CASE("patch algebra holds over the generated fixture family") {
    fixtures::Rng rng(23);
    for (int i = 0; i < 120; ++i) {
        ChartAnnotation a = fixtures::random_annotation(rng);
        ChartAnnotation b = fixtures::random_annotation(rng);
        ChartAnnotation out = apply_patch(a, diff_patch(a, b));
        CHECK(out == b);
    }
}

TEST_CASE("multi-field diffs are minimal (exhaustive subset check)") {
    ChartAnnotation a = fixtures::make_v_bar(2, 3);

    SUBCASE("flag + scale + title") {
        ChartAnnotation b = a;
        b.three_d_effect = true;
        b.y_axis.scale = AxisScale::log;
        b.y_axis.axis_range.min_value = 1;
        b.title = "new title";
        check_minimal(a, b);
    }
    SUBCASE("data + colors + legend visibility") {
        ChartAnnotation b = a;
        auto* v = b.data.find("s0");
        (*v)[0] += 5;
        b.colors->set("s0", "#aa0011");
        b.chart_legend_visible = !b.chart_legend_visible;
        check_minimal(a, b);
    }
    SUBCASE("direction + show_axis + grid") {
        ChartAnnotation b = a;
        b.y_axis.direction = AxisDirection::top_to_bottom;
        b.y_axis.show_axis = false;
        b.grid_visible = !b.grid_visible;
        check_minimal(a, b);
    }
}

TEST_CASE("diff handles optional-field addition and removal") {
    ChartAnnotation a = fixtures::make_v_bar(2, 2);
    ChartAnnotation b = a;
    AxisSpec sec;
    sec.axis_range = {5, 50};
    b.secondary_axis = sec;
    Patch add = diff_patch(a, b);
    CHECK(apply_patch(a, add) == b);
    Patch remove = diff_patch(b, a);
    CHECK(apply_patch(b, remove) == a);
    CHECK(remove.tree["secondary_axis"].is_null());
}

TEST_SUITE_END();
