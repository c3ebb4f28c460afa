#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "meguide/gcn.hpp"

namespace meguide::testing {

struct GcnInstance {
  std::uint32_t n = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  Matrix x;
  GcnModel model;
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> mask;
  double weight_decay = 0.0;
};

// Dense D^-1/2 (A + I) D^-1/2 built straight from the edge list.
inline std::vector<std::vector<double>> dense_adjacency(const GcnInstance& in) {
  std::vector<std::vector<double>> a(in.n, std::vector<double>(in.n, 0.0));
  for (std::uint32_t i = 0; i < in.n; ++i) a[i][i] = 1.0;
  for (auto [u, v] : in.edges) a[u][v] = a[v][u] = 1.0;
  std::vector<double> deg(in.n, 0.0);
  for (std::uint32_t i = 0; i < in.n; ++i)
    for (std::uint32_t j = 0; j < in.n; ++j) deg[i] += a[i][j];
  for (std::uint32_t i = 0; i < in.n; ++i)
    for (std::uint32_t j = 0; j < in.n; ++j) a[i][j] /= std::sqrt(deg[i] * deg[j]);
  return a;
}

// Loop-only forward pass and loss, eval mode.
struct ScalarForward {
  double loss = 0.0;
  double min_abs_z1 = 0.0;
};

inline ScalarForward scalar_loss(const GcnInstance& in, const Matrix& w0, const Matrix& w1) {
  const auto a = dense_adjacency(in);
  const auto n = static_cast<std::size_t>(in.n);
  const auto d = static_cast<std::size_t>(w0.rows());
  const auto h = static_cast<std::size_t>(w0.cols());
  const auto c = static_cast<std::size_t>(w1.cols());
  std::vector<std::vector<double>> ax(n, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < d; ++k) ax[i][k] += a[i][j] * in.x(j, k);
  ScalarForward out;
  out.min_abs_z1 = 1e300;
  std::vector<std::vector<double>> hid(n, std::vector<double>(h, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t q = 0; q < h; ++q) {
      double z = 0.0;
      for (std::size_t k = 0; k < d; ++k) z += ax[i][k] * w0(k, q);
      out.min_abs_z1 = std::min(out.min_abs_z1, std::abs(z));
      hid[i][q] = z > 0.0 ? z : 0.0;
    }
  std::vector<std::vector<double>> hw(n, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t q = 0; q < h; ++q)
      for (std::size_t k = 0; k < c; ++k) hw[i][k] += hid[i][q] * w1(q, k);
  double total = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in.mask[i] || in.labels[i] < 0) continue;
    std::vector<double> logit(c, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < c; ++k) logit[k] += a[i][j] * hw[j][k];
    const double mx = *std::max_element(logit.begin(), logit.end());
    double z = 0.0;
    for (double l : logit) z += std::exp(l - mx);
    total += -(logit[static_cast<std::size_t>(in.labels[i])] - mx - std::log(z));
    ++count;
  }
  double reg = 0.0;
  for (Eigen::Index i = 0; i < w0.size(); ++i) reg += w0.data()[i] * w0.data()[i];
  for (Eigen::Index i = 0; i < w1.size(); ++i) reg += w1.data()[i] * w1.data()[i];
  out.loss = total / count + 0.5 * in.weight_decay * reg;
  return out;
}

// Random instance with n <= 8, d <= 5, h <= 4, c <= 3 and at least one
// counted row; instances whose hidden pre-activations come within 1e-3 of the
// ReLU kink are redrawn so central differences stay on one side of it.
inline GcnInstance random_instance(std::mt19937_64& gen, std::uint32_t* redraws = nullptr) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  while (true) {
    GcnInstance in;
    in.n = 2 + static_cast<std::uint32_t>(gen() % 7);
    const auto d = 1 + static_cast<Eigen::Index>(gen() % 5);
    const auto h = 1 + static_cast<Eigen::Index>(gen() % 4);
    const auto c = 2 + static_cast<Eigen::Index>(gen() % 2);
    for (std::uint32_t a = 0; a < in.n; ++a)
      for (std::uint32_t b = a + 1; b < in.n; ++b)
        if (u01(gen) < 0.4) in.edges.emplace_back(a, b);
    in.x = Matrix(in.n, d);
    for (Eigen::Index i = 0; i < in.x.size(); ++i) in.x.data()[i] = u(gen);
    in.model.w0 = Matrix(d, h);
    in.model.w1 = Matrix(h, c);
    for (Eigen::Index i = 0; i < in.model.w0.size(); ++i) in.model.w0.data()[i] = u(gen);
    for (Eigen::Index i = 0; i < in.model.w1.size(); ++i) in.model.w1.data()[i] = u(gen);
    in.model.dropout = 0.0;
    bool any = false;
    for (std::uint32_t i = 0; i < in.n; ++i) {
      in.labels.push_back(u01(gen) < 0.15 ? -1 : static_cast<std::int32_t>(gen() % c));
      in.mask.push_back(u01(gen) < 0.7 ? 1 : 0);
      any = any || (in.mask.back() && in.labels.back() >= 0);
    }
    const double decays[] = {0.0, 5e-4, 1e-2};
    in.weight_decay = decays[gen() % 3];
    if (any && scalar_loss(in, in.model.w0, in.model.w1).min_abs_z1 >= 1e-3) return in;
    if (redraws) ++*redraws;
  }
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  double loss_abs_diff = 0.0;  // library loss vs scalar loss
  std::size_t entries = 0;
};

// Relative error |a - n| / max(|a|, |n|, 1e-4); the floor keeps entries
// whose true partial is ~0 from dividing FD noise by zero.
inline double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4});
}

inline GradCheckResult check_gradients(const GcnInstance& in) {
  const auto adj = normalize_adjacency(in.n, in.edges);
  const auto lg = loss_and_grads(in.model, adj, in.x, in.labels, in.mask, in.weight_decay, false);
  GradCheckResult r;
  r.loss_abs_diff = std::abs(lg->loss - scalar_loss(in, in.model.w0, in.model.w1).loss);
  auto probe = [&](Matrix& param, const Matrix& grad, bool first) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double w = param.data()[i];
      const double step = 1e-4 * std::max(1.0, std::abs(w));
      param.data()[i] = w + step;
      const double up = first ? scalar_loss(in, param, in.model.w1).loss
                              : scalar_loss(in, in.model.w0, param).loss;
      param.data()[i] = w - step;
      const double down = first ? scalar_loss(in, param, in.model.w1).loss
                                : scalar_loss(in, in.model.w0, param).loss;
      param.data()[i] = w;
      const double numeric = (up - down) / (2.0 * step);
      r.max_rel_error = std::max(r.max_rel_error, rel_error(grad.data()[i], numeric));
      ++r.entries;
    }
  };
  Matrix w0 = in.model.w0;
  Matrix w1 = in.model.w1;
  probe(w0, lg->grad_w0, true);
  probe(w1, lg->grad_w1, false);
  return r;
}

}  // namespace meguide::testing
