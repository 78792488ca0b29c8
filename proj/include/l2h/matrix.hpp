#pragma once

#include <cmath>
#include <cstddef>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "l2h/error.hpp"

namespace l2h {

enum class Precision { single, double_ };

template <class T>
concept StorageScalar = std::is_same_v<T, float> || std::is_same_v<T, double>;

template <StorageScalar T>
constexpr Precision precision_of() {
    return std::is_same_v<T, float> ? Precision::single : Precision::double_;
}

inline std::size_t element_size(Precision p) { return p == Precision::single ? 4 : 8; }

/// Dense row-major real matrix stored in single or double precision.
///
/// The values live either in an owned buffer or in a read-only memory
/// mapping; both are shared, so copies are cheap and immutable.
class RealMatrix {
public:
    RealMatrix() = default;

    template <StorageScalar T>
    RealMatrix(std::size_t rows, std::size_t cols, std::vector<T> values)
        : rows_{rows}, cols_{cols}, precision_{precision_of<T>()} {
        if (values.size() != rows * cols) {
            throw ContractError("matrix value count " + std::to_string(values.size()) +
                                " does not match shape " + std::to_string(rows) + "x" +
                                std::to_string(cols));
        }
        auto owned = std::make_shared<std::vector<T>>(std::move(values));
        data_ = owned->data();
        keep_alive_ = std::move(owned);
    }

    /// Views externally-owned storage; `owner` keeps it alive.
    RealMatrix(std::size_t rows, std::size_t cols, Precision precision, const void* data,
               std::shared_ptr<const void> owner)
        : rows_{rows}, cols_{cols}, precision_{precision}, data_{data},
          keep_alive_{std::move(owner)}, mapped_{true} {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return rows_ * cols_; }
    Precision precision() const { return precision_; }
    bool is_mapped() const { return mapped_; }

    template <StorageScalar T>
    std::span<const T> values() const {
        if (precision_of<T>() != precision_) {
            throw ContractError("matrix storage precision mismatch");
        }
        return {static_cast<const T*>(data_), size()};
    }

    template <StorageScalar T>
    std::span<const T> row(std::size_t i) const {
        return values<T>().subspan(i * cols_, cols_);
    }

    double at(std::size_t i, std::size_t j) const {
        return precision_ == Precision::single
                   ? static_cast<double>(static_cast<const float*>(data_)[i * cols_ + j])
                   : static_cast<const double*>(data_)[i * cols_ + j];
    }

    /// Calls `f(values<float>())` or `f(values<double>())` per storage precision.
    template <class F>
    decltype(auto) visit(F&& f) const {
        if (precision_ == Precision::single) {
            return std::forward<F>(f)(values<float>());
        }
        return std::forward<F>(f)(values<double>());
    }

    const void* raw_data() const { return data_; }

    /// Same shape, precision and bit pattern.
    bool bit_equal(const RealMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && precision_ == other.precision_ &&
               (size() == 0 ||
                std::memcmp(data_, other.data_, size() * element_size(precision_)) == 0);
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Precision precision_ = Precision::double_;
    const void* data_ = nullptr;
    std::shared_ptr<const void> keep_alive_;
    bool mapped_ = false;
};

/// N x K unnormalized model outputs.
using LogitsMatrix = RealMatrix;
/// Items x features input of the agglomerative baseline.
using FeatureMatrix = RealMatrix;

} // namespace l2h
