#include "meguide/softmax.hpp"

#include <cmath>

#include "meguide/errors.hpp"

namespace meguide {

Matrix row_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double z = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j) - mx);
      z += out(i, j);
    }
    out.row(i) /= z;
  }
  return out;
}

CrossEntropy softmax_cross_entropy(const Matrix& logits, std::span<const std::int32_t> labels,
                                   std::span<const std::uint8_t> mask) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw ShapeError("cross-entropy: label count != logits rows");
  }
  if (!mask.empty() && mask.size() != labels.size()) {
    throw ShapeError("cross-entropy: mask length != logits rows");
  }
  CrossEntropy ce;
  ce.dlogits = Matrix::Zero(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kUnlabeled || (!mask.empty() && mask[i] == 0)) continue;
    if (labels[i] < 0 || labels[i] >= logits.cols()) {
      throw ValidationError("cross-entropy: label " + std::to_string(labels[i]) + " out of range");
    }
    ++ce.count;
  }
  if (ce.count == 0) return ce;
  const double inv = 1.0 / static_cast<double>(ce.count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kUnlabeled || (!mask.empty() && mask[i] == 0)) continue;
    const auto r = static_cast<Eigen::Index>(i);
    const double mx = logits.row(r).maxCoeff();
    double z = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) z += std::exp(logits(r, j) - mx);
    const double log_z = mx + std::log(z);
    ce.loss += (log_z - logits(r, labels[i])) * inv;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      ce.dlogits(r, j) = std::exp(logits(r, j) - log_z) * inv;
    }
    ce.dlogits(r, labels[i]) -= inv;
  }
  return ce;
}

std::size_t argmax_row(const Matrix& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(row, j) > m(row, best)) best = j;
  }
  return static_cast<std::size_t>(best);
}

}  // namespace meguide
