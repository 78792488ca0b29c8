#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "l2h/csv.hpp"
#include "l2h/error.hpp"
#include "l2h/labels.hpp"
#include "l2h/matrix.hpp"
#include "l2h/npy.hpp"

namespace l2h {

struct DatasetBundle {
    LogitsMatrix logits;
    std::optional<LabelVector> labels;
    std::vector<std::string> source_paths;
};

/// Throws ValidationError naming the first non-finite entry.
inline void require_finite(const RealMatrix& m) {
    m.visit([&]<class T>(std::span<const T> v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i])) {
                throw ValidationError("non-finite value at (" + std::to_string(i / m.cols()) + ", " +
                                      std::to_string(i % m.cols()) + ")");
            }
        }
    });
}

/// Checks the logits invariants (N >= 1, K >= 2, finite) and label length agreement.
inline DatasetBundle validate_dataset(LogitsMatrix logits, std::optional<LabelVector> labels = {},
                                      std::vector<std::string> source_paths = {}) {
    if (logits.rows() < 1) throw DegenerateError("logits matrix has no rows");
    if (logits.cols() < 2) {
        throw DegenerateError("logits matrix has " + std::to_string(logits.cols()) +
                              " column(s); at least 2 clusters are required");
    }
    require_finite(logits);
    if (labels && labels->size() != logits.rows()) {
        throw ValidationError("label count does not match logits rows: " +
                              std::to_string(labels->size()) + " vs " + std::to_string(logits.rows()));
    }
    return {std::move(logits), std::move(labels), std::move(source_paths)};
}

/// Dispatches on extension: ".csv" is parsed as text, anything else as NPY.
inline RealMatrix read_matrix(const std::string& path, bool csv_header = false,
                              const NpyReadOptions& options = {}) {
    if (std::filesystem::path(path).extension() == ".csv") return read_csv_matrix(path, csv_header);
    return read_npy(path, options);
}

} // namespace l2h
