#pragma once

// Hierarchy serialization: linkage-style JSON, Newick, DOT and circular SVG,
// plus the leaf color map and metrics report.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "l2h/csv.hpp"
#include "l2h/error.hpp"
#include "l2h/hierarchy.hpp"
#include "l2h/metrics.hpp"
#include "l2h/tree.hpp"

namespace l2h {

using Annotations = std::span<const LeafAnnotation>;

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const Hierarchy& h, Annotations annotations = {}) {
    nlohmann::ordered_json doc;
    doc["num_clusters"] = h.n_clusters;
    auto& merges = doc["merges"] = nlohmann::ordered_json::array();
    for (const auto& m : h.merges) {
        nlohmann::ordered_json rec;
        rec["step"] = m.step;
        rec["selected"] = m.selected_node;
        rec["partner"] = m.partner_node;
        rec["new_node"] = m.new_node;
        if (m.height) rec["height"] = *m.height;
        merges.push_back(std::move(rec));
    }
    if (!annotations.empty()) {
        auto& leaves = doc["leaves"] = nlohmann::ordered_json::array();
        for (const auto& a : annotations) {
            nlohmann::ordered_json rec;
            rec["leaf"] = a.leaf;
            if (a.majority_label) {
                rec["class_id"] = *a.majority_label;
            } else {
                rec["class_id"] = nullptr;
            }
            rec["label"] = a.label_name;
            rec["purity_pct"] = a.purity_pct;
            rec["size"] = a.size;
            leaves.push_back(std::move(rec));
        }
    }
    return doc;
}

inline std::string emit_json(const Hierarchy& h, Annotations annotations = {}) {
    return to_json(h, annotations).dump() + "\n";
}

struct HierarchyDocument {
    Hierarchy hierarchy;
    std::vector<LeafAnnotation> annotations;
};

inline HierarchyDocument parse_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid hierarchy JSON: ") + e.what());
    }
    try {
        HierarchyDocument out;
        const auto k = doc.at("num_clusters").get<std::size_t>();
        std::vector<std::pair<NodeId, NodeId>> pairs;
        std::vector<std::optional<double>> heights;
        for (const auto& rec : doc.at("merges")) {
            const auto step = rec.at("step").get<std::size_t>();
            const auto new_node = rec.at("new_node").get<NodeId>();
            if (step != pairs.size() + 1 || new_node != k + pairs.size()) {
                throw FormatError("merge records out of order at step " + std::to_string(step));
            }
            pairs.emplace_back(rec.at("selected").get<NodeId>(), rec.at("partner").get<NodeId>());
            heights.push_back(rec.contains("height") ? std::optional<double>(rec["height"].get<double>())
                                                     : std::nullopt);
        }
        try {
            out.hierarchy = hierarchy_from_pairs(k, pairs, heights);
        } catch (const ContractError& e) {
            throw FormatError(std::string("malformed hierarchy: ") + e.what());
        }
        if (doc.contains("leaves")) {
            for (const auto& rec : doc["leaves"]) {
                LeafAnnotation a;
                a.leaf = rec.at("leaf").get<ClusterId>();
                if (!rec.at("class_id").is_null()) a.majority_label = rec["class_id"].get<ClassId>();
                a.label_name = rec.at("label").get<std::string>();
                a.purity_pct = rec.at("purity_pct").get<double>();
                a.size = rec.at("size").get<std::size_t>();
                out.annotations.push_back(std::move(a));
            }
            if (out.annotations.size() != k) throw FormatError("leaf annotation count does not match num_clusters");
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid hierarchy JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Newick

namespace detail {

inline std::string percent_text(double pct) { return std::to_string(std::lround(pct)) + "%"; }

inline std::string leaf_label(ClusterId leaf, Annotations annotations, bool newick_style) {
    if (leaf >= annotations.size()) return std::to_string(leaf);
    const auto& a = annotations[leaf];
    if (!a.majority_label) return a.label_name.empty() ? std::to_string(leaf) : a.label_name;
    return newick_style ? a.label_name + "(" + percent_text(a.purity_pct) + ")"
                        : a.label_name + " " + percent_text(a.purity_pct);
}

inline bool newick_needs_quotes(std::string_view s) {
    return s.empty() || s.find_first_of(" \t\r\n()[]':;,_") != std::string_view::npos;
}

inline std::string newick_token(std::string_view s) {
    if (!newick_needs_quotes(s)) return std::string(s);
    std::string out = "'";
    for (char c : s) {
        out += c;
        if (c == '\'') out += '\'';
    }
    return out + "'";
}

} // namespace detail

/// Parenthesized tree, children in (selected, partner) order, no branch lengths.
inline std::string emit_newick(const Hierarchy& h, Annotations annotations = {}) {
    const TreeIndex t = to_tree(h);
    std::string out;
    // Iterative pre/post traversal: (node, next child index).
    std::vector<std::pair<NodeId, int>> stack{{t.root(), 0}};
    while (!stack.empty()) {
        auto& [v, state] = stack.back();
        if (t.is_leaf(v)) {
            out += detail::newick_token(detail::leaf_label(v, annotations, true));
            stack.pop_back();
            continue;
        }
        if (state == 0) {
            out += '(';
        } else if (state == 1) {
            out += ',';
        } else {
            out += ')';
            stack.pop_back();
            continue;
        }
        const NodeId child = t.children_of(v)[state];
        ++state;
        stack.emplace_back(child, 0);
    }
    return out + ";\n";
}

struct NewickNode {
    std::string name;
    std::optional<double> length;
    std::vector<NewickNode> children;

    std::size_t leaf_count() const {
        if (children.empty()) return 1;
        std::size_t n = 0;
        for (const auto& c : children) n += c.leaf_count();
        return n;
    }
};

/// Recursive-descent parser for the standard Newick grammar:
///   tree := subtree [':' length] ';'
///   subtree := '(' subtree [':' length] {',' subtree [':' length]} ')' [name] | name
/// Names may be bare or single-quoted ('' escapes a quote); [comments] are skipped.
class NewickParser {
public:
    explicit NewickParser(std::string_view text) : text_{text} {}

    NewickNode parse() {
        NewickNode root = subtree(0);
        branch_length(root);
        skip();
        if (!eat(';')) fail("expected ';'");
        skip();
        if (pos_ != text_.size()) fail("trailing characters after ';'");
        return root;
    }

private:
    static constexpr std::size_t max_depth = 20000;

    NewickNode subtree(std::size_t depth) {
        if (depth > max_depth) fail("tree too deep");
        NewickNode node;
        skip();
        if (eat('(')) {
            do {
                NewickNode child = subtree(depth + 1);
                branch_length(child);
                node.children.push_back(std::move(child));
                skip();
            } while (eat(','));
            if (!eat(')')) fail("expected ')' or ','");
        }
        node.name = name();
        return node;
    }

    void branch_length(NewickNode& node) {
        skip();
        if (!eat(':')) return;
        skip();
        const auto start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                                       std::string_view("+-.eE").find(text_[pos_]) != std::string_view::npos)) {
            ++pos_;
        }
        double v = 0;
        auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (ec != std::errc{} || p != text_.data() + pos_) fail("bad branch length");
        node.length = v;
    }

    std::string name() {
        skip();
        std::string out;
        if (eat('\'')) {
            while (true) {
                if (pos_ >= text_.size()) fail("unterminated quoted label");
                const char c = text_[pos_++];
                if (c == '\'') {
                    if (pos_ < text_.size() && text_[pos_] == '\'') {
                        out += '\'';
                        ++pos_;
                    } else {
                        break;
                    }
                } else {
                    out += c;
                }
            }
            return out;
        }
        while (pos_ < text_.size() && std::string_view(" \t\r\n()[]':;,").find(text_[pos_]) == std::string_view::npos) {
            const char c = text_[pos_++];
            out += c == '_' ? ' ' : c;
        }
        return out;
    }

    void skip() {
        while (pos_ < text_.size()) {
            if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            } else if (text_[pos_] == '[') {
                const auto end = text_.find(']', pos_);
                if (end == std::string_view::npos) fail("unterminated comment");
                pos_ = end + 1;
            } else {
                break;
            }
        }
    }

    bool eat(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError("Newick parse error at offset " + std::to_string(pos_) + ": " + what);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

inline NewickNode parse_newick(std::string_view text) { return NewickParser(text).parse(); }

/// Converts a binary Newick tree whose leaves are named 0..K-1 into a
/// hierarchy. Newick carries no merge order, so internal nodes are numbered
/// in post-order.
inline Hierarchy hierarchy_from_newick(const NewickNode& root) {
    const std::size_t k = root.leaf_count();
    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<char> seen(k, 0);
    struct Frame {
        const NewickNode* node;
        std::size_t next = 0;
        std::vector<NodeId> ids;
    };
    std::vector<Frame> stack{{&root, 0, {}}};
    NodeId result = no_node;
    while (!stack.empty()) {
        Frame& f = stack.back();
        NodeId done = no_node;
        if (f.node->children.empty()) {
            std::size_t id = 0;
            const auto& s = f.node->name;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
            if (s.empty() || ec != std::errc{} || p != s.data() + s.size() || id >= k || seen[id]) {
                throw FormatError("Newick leaf '" + s + "' is not a unique cluster id below " + std::to_string(k));
            }
            seen[id] = 1;
            done = static_cast<NodeId>(id);
        } else if (f.node->children.size() != 2) {
            throw FormatError("Newick tree is not binary");
        } else if (f.next < 2) {
            const NewickNode* child = &f.node->children[f.next++];
            stack.push_back({child, 0, {}});
            continue;
        } else {
            pairs.emplace_back(f.ids[0], f.ids[1]);
            done = static_cast<NodeId>(k + pairs.size() - 1);
        }
        stack.pop_back();
        if (stack.empty()) {
            result = done;
        } else {
            stack.back().ids.push_back(done);
        }
    }
    if (k < 2 || result != 2 * k - 2) throw FormatError("Newick tree must have at least 2 leaves");
    return hierarchy_from_pairs(k, pairs);
}

// ---------------------------------------------------------------------------
// Color map

struct ColorMap {
    std::map<std::string, std::string> group_of_label;
    std::map<std::string, std::string> color_of_group;

    std::optional<std::string> color_of_label(const std::string& label) const {
        const auto g = group_of_label.find(label);
        if (g == group_of_label.end()) return std::nullopt;
        const auto c = color_of_group.find(g->second);
        if (c == color_of_group.end()) return std::nullopt;
        return c->second;
    }
};

/// Category-10 palette, cycled by group first-appearance index.
inline constexpr std::array<std::string_view, 10> default_palette{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline bool is_hex_color(std::string_view s) {
    return s.size() == 7 && s[0] == '#' &&
           std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

/// Rows "label,group[,color]"; an optional "label,group[,color]" header is skipped.
inline ColorMap parse_colormap_text(std::string_view text, const std::string& origin = "colormap") {
    ColorMap cm;
    std::vector<std::string> group_order;
    std::map<std::string, std::string> explicit_color;
    const auto lines = detail::split_lines(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = lines[li].find(',', start);
            cells.emplace_back(detail::trim(lines[li].substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (cells.size() == 1 && cells[0].empty()) continue;
        if (li == 0 && cells[0] == "label" && cells.size() >= 2 && cells[1] == "group") continue;
        if (cells.size() < 2 || cells.size() > 3) {
            throw FormatError(origin + ": line " + std::to_string(li + 1) + " must have 2 or 3 columns");
        }
        const auto& label = cells[0];
        const auto& group = cells[1];
        if (!cm.group_of_label.emplace(label, group).second) {
            throw FormatError(origin + ": duplicate label '" + label + "' at line " + std::to_string(li + 1));
        }
        if (std::find(group_order.begin(), group_order.end(), group) == group_order.end()) group_order.push_back(group);
        if (cells.size() == 3 && !cells[2].empty()) {
            if (!is_hex_color(cells[2])) {
                throw FormatError(origin + ": malformed color '" + cells[2] + "' at line " + std::to_string(li + 1));
            }
            explicit_color.try_emplace(group, cells[2]);
        }
    }
    for (std::size_t i = 0; i < group_order.size(); ++i) {
        const auto& g = group_order[i];
        const auto e = explicit_color.find(g);
        cm.color_of_group[g] = e != explicit_color.end() ? e->second
                                                         : std::string(default_palette[i % default_palette.size()]);
    }
    return cm;
}

inline ColorMap parse_colormap(const std::string& path) {
    return parse_colormap_text(detail::read_text_file(path), path);
}

// ---------------------------------------------------------------------------
// DOT

namespace detail {

inline std::string dot_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::optional<std::string> leaf_color(ClusterId leaf, Annotations annotations, const ColorMap* colors) {
    if (colors == nullptr) return std::nullopt;
    const std::string name = leaf < annotations.size() && !annotations[leaf].label_name.empty()
                                 ? annotations[leaf].label_name
                                 : std::to_string(leaf);
    return colors->color_of_label(name);
}

} // namespace detail

inline std::string emit_dot(const Hierarchy& h, Annotations annotations = {}, const ColorMap* colors = nullptr) {
    const TreeIndex t = to_tree(h);
    std::string out = "digraph hierarchy {\n  node [shape=box];\n";
    for (ClusterId leaf = 0; leaf < t.n_leaves; ++leaf) {
        out += "  " + std::to_string(leaf) + " [label=\"" +
               detail::dot_escape(detail::leaf_label(leaf, annotations, false)) + "\"";
        if (auto c = detail::leaf_color(leaf, annotations, colors)) {
            out += ", style=filled, fillcolor=\"" + *c + "\"";
        }
        out += "];\n";
    }
    for (NodeId v = static_cast<NodeId>(t.n_leaves); v < t.node_count(); ++v) {
        out += "  " + std::to_string(v) + " [shape=point];\n";
    }
    for (NodeId v = static_cast<NodeId>(t.n_leaves); v < t.node_count(); ++v) {
        for (NodeId c : t.children_of(v)) out += "  " + std::to_string(v) + " -> " + std::to_string(c) + ";\n";
    }
    return out + "}\n";
}

// ---------------------------------------------------------------------------
// Circular SVG

struct CircularLayout {
    std::vector<double> angle;  ///< radians, per node
    std::vector<double> radius; ///< pixels, per node
    double center = 0;
};

/// Leaves equally spaced on the outer circle in leaf order; an internal node
/// sits at the angular midpoint of its leaf span, at a radius shrinking
/// linearly with merge step (or with merge height when every step has one).
inline CircularLayout circular_layout(const Hierarchy& h, double size_px) {
    const TreeIndex t = to_tree(h);
    const std::size_t k = t.n_leaves;
    CircularLayout lay;
    lay.center = size_px / 2.0;
    const double outer = size_px * 0.34;
    lay.angle.assign(t.node_count(), 0.0);
    lay.radius.assign(t.node_count(), outer);

    const auto order = leaf_order(t);
    std::vector<std::size_t> position(k);
    for (std::size_t i = 0; i < k; ++i) {
        position[order[i]] = i;
        lay.angle[order[i]] = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k) -
                              std::numbers::pi / 2.0;
    }
    std::vector<std::size_t> first(t.node_count()), last(t.node_count());
    for (ClusterId leaf = 0; leaf < k; ++leaf) first[leaf] = last[leaf] = position[leaf];

    const bool use_heights = h.has_heights() && *h.merges.back().height > 0.0;
    const double top = use_heights ? *h.merges.back().height : 0.0;
    for (const auto& m : h.merges) {
        const NodeId v = m.new_node;
        first[v] = std::min(first[m.selected_node], first[m.partner_node]);
        last[v] = std::max(last[m.selected_node], last[m.partner_node]);
        lay.angle[v] = (lay.angle[order[first[v]]] + lay.angle[order[last[v]]]) / 2.0;
        const double level = use_heights ? *m.height / top
                                         : static_cast<double>(m.step) / static_cast<double>(k - 1);
        lay.radius[v] = outer * (1.0 - std::clamp(level, 0.0, 1.0));
    }
    return lay;
}

namespace detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 0.005 ? 0.0 : v);
    return buf;
}

} // namespace detail

inline std::string emit_svg_circular(const Hierarchy& h, Annotations annotations = {}, const ColorMap* colors = nullptr,
                                     int size_px = 1024) {
    if (size_px < 256) throw ContractError("SVG size must be at least 256 px, got " + std::to_string(size_px));
    const TreeIndex t = to_tree(h);
    const double size = size_px;
    const auto lay = circular_layout(h, size);
    auto x = [&](double r, double a) { return detail::fmt2(lay.center + r * std::cos(a)); };
    auto y = [&](double r, double a) { return detail::fmt2(lay.center + r * std::sin(a)); };
    const std::string s = std::to_string(size_px);

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + s + "\" height=\"" + s +
           "\" viewBox=\"0 0 " + s + " " + s + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<g fill=\"none\" stroke=\"#444444\" stroke-width=\"1\">\n";
    for (NodeId v = static_cast<NodeId>(t.n_leaves); v < t.node_count(); ++v) {
        const double rp = lay.radius[v], ap = lay.angle[v];
        for (NodeId c : t.children_of(v)) {
            const double ac = lay.angle[c], rc = lay.radius[c];
            std::string d = "M" + x(rp, ap) + "," + y(rp, ap);
            if (rp > 0.0 && ac != ap) {
                const int large = std::abs(ac - ap) > std::numbers::pi ? 1 : 0;
                const int sweep = ac > ap ? 1 : 0;
                d += " A" + detail::fmt2(rp) + "," + detail::fmt2(rp) + " 0 " + std::to_string(large) + " " +
                     std::to_string(sweep) + " " + x(rp, ac) + "," + y(rp, ac);
            }
            d += " L" + x(rc, ac) + "," + y(rc, ac);
            out += "<path class=\"edge\" data-parent=\"" + std::to_string(v) + "\" data-child=\"" +
                   std::to_string(c) + "\" d=\"" + d + "\"/>\n";
        }
    }
    out += "</g>\n";
    const double font = std::clamp(size * 2.2 / static_cast<double>(t.n_leaves), 4.0, 14.0);
    for (ClusterId leaf = 0; leaf < t.n_leaves; ++leaf) {
        const double a = lay.angle[leaf], r = lay.radius[leaf];
        const std::string fill = detail::leaf_color(leaf, annotations, colors).value_or("#444444");
        out += "<circle class=\"leaf\" data-leaf=\"" + std::to_string(leaf) + "\" cx=\"" + x(r, a) + "\" cy=\"" +
               y(r, a) + "\" r=\"3\" fill=\"" + fill + "\"/>\n";
        const double lr = r + 8.0;
        const double deg = a * 180.0 / std::numbers::pi + 90.0;
        out += "<text class=\"label\" x=\"" + x(lr, a) + "\" y=\"" + y(lr, a) + "\" font-size=\"" +
               detail::fmt2(font) + "\" text-anchor=\"middle\" fill=\"" + fill + "\" transform=\"rotate(" +
               detail::fmt2(deg) + " " + x(lr, a) + " " + y(lr, a) + ")\">" +
               detail::xml_escape(detail::leaf_label(leaf, annotations, false)) + "</text>\n";
    }
    for (NodeId v = static_cast<NodeId>(t.n_leaves); v < t.node_count(); ++v) {
        out += "<circle class=\"node\" data-node=\"" + std::to_string(v) + "\" cx=\"" + x(lay.radius[v], lay.angle[v]) +
               "\" cy=\"" + y(lay.radius[v], lay.angle[v]) + "\" r=\"1.5\" fill=\"#444444\"/>\n";
    }
    return out + "</svg>\n";
}

// ---------------------------------------------------------------------------
// Metrics report

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["nmi"] = r.nmi;
    j["ari"] = r.ari;
    j["accuracy"] = r.accuracy;
    j["leaf_purity"] = r.leaf_purity;
    if (r.dendrogram_purity.value) {
        j["dendrogram_purity"] = *r.dendrogram_purity.value;
    } else {
        j["dendrogram_purity"] = nullptr;
        j["dendrogram_purity_undefined_reason"] = "no pair of datapoints shares a class";
    }
    if (r.lhd.value) {
        j["lhd"] = *r.lhd.value;
    } else {
        j["lhd"] = nullptr;
        j["lhd_undefined_reason"] = r.lhd.undefined_reason;
    }
    j["lhd_empty_pair_set"] = r.lhd.empty_pair_set;
    j["same_class_pairs"] = r.dendrogram_purity.same_class_pairs;
    j["cross_leaf_pairs"] = r.lhd.cross_leaf_pairs;
    j["nmi_normalization"] = "arithmetic";
    return j;
}

inline std::string emit_report_json(const MetricsReport& r) { return to_json(r).dump(2) + "\n"; }

} // namespace l2h
