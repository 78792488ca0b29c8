#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "l2h/error.hpp"
#include "l2h/types.hpp"

namespace l2h {

/// Index and value of the largest entry; ties go to the lowest index.
struct TopEntry {
    ClusterId index = 0;
    double probability = 0.0;
};

/// Numerically stable softmax, accumulated in double precision.
template <class T>
std::vector<double> softmax_row(std::span<const T> v) {
    std::vector<double> out(v.size());
    if (v.empty()) return out;
    double m = v[0];
    for (auto x : v) m = std::max(m, static_cast<double>(x));
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(static_cast<double>(v[i]) - m);
        sum += out[i];
    }
    for (auto& p : out) p /= sum;
    return out;
}

/// mask[i] != 0 marks index i as unavailable.
template <class T>
std::vector<double> masked_softmax_row(std::span<const T> v, std::span<const char> mask) {
    std::vector<double> out(v.size(), 0.0);
    bool any = false;
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask[i]) continue;
        m = any ? std::max(m, static_cast<double>(v[i])) : static_cast<double>(v[i]);
        any = true;
    }
    if (!any) throw ContractError("mask covers every index; masked softmax is undefined");
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask[i]) continue;
        out[i] = std::exp(static_cast<double>(v[i]) - m);
        sum += out[i];
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!mask[i]) out[i] /= sum;
    }
    return out;
}

/// Overload taking the masked indices as a list of ids.
template <class T>
std::vector<double> masked_softmax_row(std::span<const T> v, std::span<const ClusterId> masked) {
    std::vector<char> mask(v.size(), 0);
    for (auto c : masked) {
        if (c >= v.size()) throw ContractError("masked index out of range");
        mask[c] = 1;
    }
    return masked_softmax_row(v, std::span<const char>(mask));
}

/// argmax/max of the softmax of `v` without materializing the distribution.
template <class T>
TopEntry softmax_top(std::span<const T> v) {
    ClusterId best = 0;
    double m = v[0];
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (static_cast<double>(v[i]) > m) {
            m = v[i];
            best = static_cast<ClusterId>(i);
        }
    }
    double sum = 0.0;
    for (auto x : v) sum += std::exp(static_cast<double>(x) - m);
    return {best, 1.0 / sum};
}

/// argmax/max of the masked softmax of `v`. Requires at least one unmasked index.
template <class T>
TopEntry masked_softmax_top(std::span<const T> v, std::span<const char> mask) {
    ClusterId best = 0;
    bool any = false;
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask[i]) continue;
        if (!any || static_cast<double>(v[i]) > m) {
            m = v[i];
            best = static_cast<ClusterId>(i);
            any = true;
        }
    }
    if (!any) throw ContractError("mask covers every index; masked softmax is undefined");
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!mask[i]) sum += std::exp(static_cast<double>(v[i]) - m);
    }
    return {best, 1.0 / sum};
}

} // namespace l2h
