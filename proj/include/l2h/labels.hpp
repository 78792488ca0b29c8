#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "l2h/csv.hpp"
#include "l2h/error.hpp"
#include "l2h/npy.hpp"
#include "l2h/types.hpp"

namespace l2h {

/// Dense 0-based class id per datapoint, optionally with the original names.
struct LabelVector {
    std::vector<ClassId> labels;
    std::size_t n_classes = 0;
    /// names[c] is the original token of class c; empty when unknown.
    std::vector<std::string> names;

    std::size_t size() const { return labels.size(); }

    std::string name(ClassId c) const {
        return c < names.size() ? names[c] : std::to_string(c);
    }

    /// Densifies integer ids in ascending numeric order.
    static LabelVector from_integers(std::span<const std::int64_t> raw) {
        std::vector<std::int64_t> distinct(raw.begin(), raw.end());
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        LabelVector out;
        out.n_classes = distinct.size();
        out.labels.reserve(raw.size());
        for (auto v : raw) {
            out.labels.push_back(static_cast<ClassId>(
                std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin()));
        }
        for (auto v : distinct) out.names.push_back(std::to_string(v));
        return out;
    }

    /// Assigns ids to string tokens in order of first appearance.
    static LabelVector from_strings(std::span<const std::string> raw) {
        LabelVector out;
        std::unordered_map<std::string, ClassId> ids;
        out.labels.reserve(raw.size());
        for (const auto& s : raw) {
            auto [it, inserted] = ids.try_emplace(s, static_cast<ClassId>(out.names.size()));
            if (inserted) out.names.push_back(s);
            out.labels.push_back(it->second);
        }
        out.n_classes = out.names.size();
        return out;
    }

    bool operator==(const LabelVector&) const = default;
};

/// Reads labels from a 1-D integer NPY file or a text file with one token per line.
///
/// A text file whose tokens all parse as integers is densified numerically;
/// otherwise tokens are treated as names.
inline LabelVector read_labels(const std::string& path) {
    if (is_npy_file(path)) {
        const auto raw = read_npy_integers(path);
        if (raw.empty()) throw FormatError(path + ": empty label array");
        return LabelVector::from_integers(raw);
    }
    const std::string text = detail::read_text_file(path);
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw FormatError(path + ": empty label file");

    std::vector<std::string> tokens;
    tokens.reserve(lines.size());
    std::vector<std::int64_t> ints;
    bool all_int = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto tok = detail::trim(lines[i]);
        if (tok.empty()) throw FormatError(path + ": empty label at line " + std::to_string(i + 1));
        if (all_int) {
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec == std::errc{} && ptr == tok.data() + tok.size()) {
                ints.push_back(v);
            } else {
                all_int = false;
            }
        }
        tokens.emplace_back(tok);
    }
    return all_int ? LabelVector::from_integers(ints) : LabelVector::from_strings(tokens);
}

} // namespace l2h
