#include "hec/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace hec {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

Vec6 reduce(const RigidTransform& t) {
  const EulerXYZ e = euler_from_rotation(t.rotation).angles;
  Vec6 v;
  v << t.translation.x(), t.translation.y(), t.translation.z(), e.rx, e.ry, e.rz;
  return v;
}

bool lex_less(const Vec6& a, const Vec6& b) {
  for (int i = 0; i < 6; ++i) {
    if (a(i) != b(i)) {
      return a(i) < b(i);
    }
  }
  return false;
}

// Mean with a fixed accumulation order and a centered sum, so the result is
// a pure function of the (sorted) sequence.
Vec6 ordered_mean(const std::vector<Vec6>& xs, const std::vector<int>& idx) {
  const Vec6& base = xs[idx[0]];
  Vec6 acc = Vec6::Zero();
  for (const int i : idx) {
    acc += xs[i] - base;
  }
  return base + acc / static_cast<double>(idx.size());
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

RigidTransform fuse_estimates(const EstimateBatch& batch, double discard_fraction) {
  const int n = static_cast<int>(batch.estimates.size());
  if (n < 2) {
    throw InsufficientData("fusion requires at least 2 estimates");
  }
  if (discard_fraction < 0 || discard_fraction > 1) {
    throw InvalidInput("discard fraction must lie in [0, 1]");
  }
  const int discard = static_cast<int>(std::floor(discard_fraction * n));
  if (discard >= n) {
    throw InvalidInput("discard fraction leaves no survivors");
  }

  std::vector<Vec6> xs;
  xs.reserve(batch.estimates.size());
  for (const RigidTransform& t : batch.estimates) {
    xs.push_back(reduce(t));
  }

  // Canonical processing order: everything downstream depends only on the
  // sorted sequence, making the result permutation-invariant to the last bit.
  std::vector<int> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&xs](int a, int b) { return lex_less(xs[a], xs[b]); });

  bool all_equal = true;
  for (int i : order) {
    if ((xs[i].array() != xs[order[0]].array()).any()) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) {
    return batch.estimates[order[0]];  // consensus: return the input exactly
  }

  std::vector<Vec6> sorted;
  sorted.reserve(xs.size());
  for (const int i : order) {
    sorted.push_back(xs[i]);
  }

  // Unwrap each Euler component to the branch nearest its circular mean so
  // batches straddling +-pi average sensibly.
  for (int c = 3; c < 6; ++c) {
    double s = 0;
    double co = 0;
    for (const Vec6& x : sorted) {
      s += std::sin(x(c));
      co += std::cos(x(c));
    }
    const double center = std::atan2(s, co);
    for (Vec6& x : sorted) {
      x(c) += kTwoPi * std::round((center - x(c)) / kTwoPi);
    }
  }

  std::vector<int> all(sorted.size());
  std::iota(all.begin(), all.end(), 0);
  const Vec6 mu = ordered_mean(sorted, all);

  Eigen::Matrix<double, 6, 6> cov = Eigen::Matrix<double, 6, 6>::Zero();
  for (const Vec6& x : sorted) {
    const Vec6 d = x - mu;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(sorted.size() - 1);
  const double lambda = 1e-12 + 1e-9 * cov.trace() / 6.0;
  cov += lambda * Eigen::Matrix<double, 6, 6>::Identity();

  std::vector<int> survivors;
  const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    // Degenerate spread (e.g. near-identical inputs): every sample is
    // equally likely, so average them all.
    survivors = all;
  } else {
    // Rank by squared Mahalanobis distance (monotone in log-density).
    std::vector<double> d2(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const Vec6 d = sorted[i] - mu;
      d2[i] = d.dot(ldlt.solve(d));
    }
    std::vector<int> rank = all;
    std::stable_sort(rank.begin(), rank.end(),
                     [&d2](int a, int b) { return d2[a] > d2[b]; });
    rank.erase(rank.begin(), rank.begin() + discard);  // drop the least likely
    std::sort(rank.begin(), rank.end());
    survivors = rank;
  }

  const Vec6 f = ordered_mean(sorted, survivors);
  return {rotation_from_euler({f(3), f(4), f(5)}), Eigen::Vector3d(f(0), f(1), f(2))};
}

}  // namespace hec
