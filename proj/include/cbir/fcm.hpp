#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cbir {

/// Dense row-major N x D matrix of points.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t rows, std::size_t dims, std::vector<double> values);
  static PointSet from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dims() const noexcept { return dims_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * dims_, dims_};
  }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t dims_ = 0;
  std::vector<double> values_;
};

struct FcmParams {
  int clusters = 3;
  double fuzzifier = 2.0;
  // Stop when the largest membership change in an iteration drops below eps.
  double eps = 1e-5;
  int max_iter = 100;
  std::uint64_t seed = 42;
};

struct FcmModel {
  PointSet centroids;          // C x D
  double fuzzifier = 2.0;
  std::vector<double> memberships;  // N x C row-major, rows sum to 1
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  // Objective after each completed iteration; non-increasing.
  std::vector<double> objective_history;

  std::size_t clusters() const noexcept { return centroids.rows(); }
  std::span<const double> membership_row(std::size_t i) const noexcept {
    return {memberships.data() + i * clusters(), clusters()};
  }
};

/// Bezdek fuzzy c-means from seeded random row-normalized memberships.
///
/// Each iteration recomputes centroids as u^m-weighted means, then memberships
/// as u_ik = 1 / sum_j (d_ik / d_jk)^(2/(m-1)). A point sitting exactly on one or
/// more centroids splits its membership evenly across them. Deterministic for a
/// fixed (points, params).
FcmModel fcm_fit(const PointSet& points, const FcmParams& params);

// Same iteration from caller-supplied N x C initial memberships (rows are
// normalized before use). params.seed is ignored.
FcmModel fcm_fit_from(const PointSet& points, std::vector<double> initial_memberships,
                      const FcmParams& params);

// J_m = sum_i sum_k u_ik^m * |x_i - v_k|^2 using the model's memberships.
double fcm_objective(const FcmModel& model, const PointSet& points);

// Membership vector of one point against frozen centroids.
std::vector<double> fcm_assign(const PointSet& centroids, double fuzzifier,
                               std::span<const double> point);
std::vector<double> fcm_assign(const FcmModel& model, std::span<const double> point);

// Index of the largest membership; lowest index on ties.
std::size_t argmax_membership(std::span<const double> memberships);

}  // namespace cbir
