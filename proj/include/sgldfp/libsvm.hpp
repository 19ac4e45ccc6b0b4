#pragma once

#include <string>

#include "sgldfp/dataset.hpp"

namespace sgldfp {

struct LibsvmReport {
    int n_rows = 0;
    int n_features = 0;
    std::string label_mapping;  // "identity", "-1/+1 -> 0/1", "1/2 -> 0/1" or "raw"
};

/// Read a libsvm/svmlight text file: one "label idx:val ..." line per row,
/// 1-based sparse indices densified to the maximum feature index. Binary
/// labels are normalized to {0, 1}: sets {-1, +1} and {1, 2} are mapped,
/// {0, 1} kept, anything else kept raw (regression responses).
/// Malformed lines raise std::runtime_error with the line number.
Dataset parse_libsvm(const std::string& path, LibsvmReport* report = nullptr);

/// Write a dataset in the same format (1-based indices, zeros skipped).
void write_libsvm(const Dataset& data, const std::string& path);

}  // namespace sgldfp
