#pragma once

#include <cstdint>
#include <span>

#include "meguide/gcn.hpp"

namespace meguide {

// Row-wise softmax with max subtraction.
Matrix row_softmax(const Matrix& logits);

struct CrossEntropy {
  double loss = 0.0;  // mean over counted rows
  Matrix dlogits;     // d loss / d logits
  std::size_t count = 0;
};

// Mean cross-entropy over rows whose mask is set and label is not kUnlabeled.
// An empty mask span selects every labeled row.
CrossEntropy softmax_cross_entropy(const Matrix& logits, std::span<const std::int32_t> labels,
                                   std::span<const std::uint8_t> mask = {});

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax_row(const Matrix& m, Eigen::Index row);

}  // namespace meguide
