#include "cbir/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/core.h>

#include "cbir/error.hpp"

namespace cbir {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

void check_params(const PointSet& points, const FcmParams& params) {
  if (params.clusters < 1) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("cluster count {} < 1", params.clusters));
  }
  if (static_cast<std::size_t>(params.clusters) > points.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("cluster count {} exceeds point count {}", params.clusters,
                            points.rows()));
  }
  if (!(params.fuzzifier > 1.0) || !std::isfinite(params.fuzzifier)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("fuzzifier must be > 1, got {}", params.fuzzifier));
  }
  if (!(params.eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("eps must be > 0, got {}", params.eps));
  }
  if (params.max_iter < 1) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("max_iter {} < 1", params.max_iter));
  }
  if (points.dims() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "points have zero dimensions");
  }
  for (double v : points.values()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite point coordinate");
    }
  }
}

// Writes one membership row from squared distances to every centroid.
void membership_row(std::span<const double> d2, double fuzzifier, std::span<double> out) {
  const std::size_t c = d2.size();
  const auto coincident = static_cast<std::size_t>(std::count(d2.begin(), d2.end(), 0.0));
  if (coincident > 0) {
    const double share = 1.0 / static_cast<double>(coincident);
    for (std::size_t k = 0; k < c; ++k) out[k] = d2[k] == 0.0 ? share : 0.0;
    return;
  }
  // (d_ik / d_jk)^(2/(m-1)) == (d2_ik / d2_jk)^(1/(m-1))
  const double exponent = 1.0 / (fuzzifier - 1.0);
  double total = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) denom += std::pow(d2[k] / d2[j], exponent);
    out[k] = 1.0 / denom;
    total += out[k];
  }
  for (std::size_t k = 0; k < c; ++k) out[k] /= total;
}

void update_centroids(const PointSet& points, std::span<const double> u, double fuzzifier,
                      std::vector<double>& centroids) {
  const std::size_t n = points.rows();
  const std::size_t dims = points.dims();
  const std::size_t c = centroids.size() / dims;
  std::vector<double> num(c * dims, 0.0);
  std::vector<double> den(c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = points.row(i);
    for (std::size_t k = 0; k < c; ++k) {
      const double w = std::pow(u[i * c + k], fuzzifier);
      den[k] += w;
      for (std::size_t d = 0; d < dims; ++d) num[k * dims + d] += w * x[d];
    }
  }
  for (std::size_t k = 0; k < c; ++k) {
    // A cluster with no weight keeps its previous position.
    if (den[k] == 0.0) continue;
    for (std::size_t d = 0; d < dims; ++d) centroids[k * dims + d] = num[k * dims + d] / den[k];
  }
}

double objective(const PointSet& points, std::span<const double> u, const PointSet& centroids,
                 double fuzzifier) {
  const std::size_t c = centroids.rows();
  double j = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      j += std::pow(u[i * c + k], fuzzifier) * squared_distance(points.row(i), centroids.row(k));
    }
  }
  return j;
}

}  // namespace

PointSet::PointSet(std::size_t rows, std::size_t dims, std::vector<double> values)
    : rows_(rows), dims_(dims), values_(std::move(values)) {
  if (values_.size() != rows_ * dims_) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("PointSet: {} values for {}x{}", values_.size(), rows_, dims_));
  }
}

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return PointSet();
  const std::size_t dims = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * dims);
  for (const auto& r : rows) {
    if (r.size() != dims) {
      throw Error(ErrorCode::kInvalidArgument, "PointSet: ragged rows");
    }
    values.insert(values.end(), r.begin(), r.end());
  }
  return PointSet(rows.size(), dims, std::move(values));
}

FcmModel fcm_fit(const PointSet& points, const FcmParams& params) {
  check_params(points, params);
  const std::size_t c = static_cast<std::size_t>(params.clusters);
  std::mt19937_64 rng(params.seed);
  std::vector<double> u(points.rows() * c);
  for (double& v : u) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return fcm_fit_from(points, std::move(u), params);
}

FcmModel fcm_fit_from(const PointSet& points, std::vector<double> u, const FcmParams& params) {
  check_params(points, params);
  const std::size_t n = points.rows();
  const std::size_t c = static_cast<std::size_t>(params.clusters);
  const std::size_t dims = points.dims();
  if (u.size() != n * c) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("initial memberships have {} values, expected {}x{}", u.size(), n, c));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double v = u[i * c + k];
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "initial membership negative or non-finite");
      }
      total += v;
    }
    for (std::size_t k = 0; k < c; ++k) {
      u[i * c + k] = total > 0.0 ? u[i * c + k] / total : 1.0 / static_cast<double>(c);
    }
  }

  FcmModel model;
  model.fuzzifier = params.fuzzifier;
  std::vector<double> centroids(c * dims, 0.0);
  std::vector<double> next(n * c);
  std::vector<double> d2(c);

  for (int iter = 1; iter <= params.max_iter; ++iter) {
    update_centroids(points, u, params.fuzzifier, centroids);
    const PointSet v(c, dims, centroids);
    double max_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < c; ++k) d2[k] = squared_distance(points.row(i), v.row(k));
      std::span<double> row(next.data() + i * c, c);
      membership_row(d2, params.fuzzifier, row);
      for (std::size_t k = 0; k < c; ++k) {
        max_change = std::max(max_change, std::abs(row[k] - u[i * c + k]));
      }
    }
    u.swap(next);
    model.objective_history.push_back(objective(points, u, v, params.fuzzifier));
    model.iterations = iter;
    if (max_change < params.eps) {
      model.converged = true;
      break;
    }
  }

  model.centroids = PointSet(c, dims, std::move(centroids));
  model.memberships = std::move(u);
  model.objective = model.objective_history.back();
  return model;
}

double fcm_objective(const FcmModel& model, const PointSet& points) {
  if (points.dims() != model.centroids.dims() ||
      model.memberships.size() != points.rows() * model.clusters()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("model ({} clusters, dim {}, {} memberships) does not match {}x{} points",
                            model.clusters(), model.centroids.dims(), model.memberships.size(),
                            points.rows(), points.dims()));
  }
  return objective(points, model.memberships, model.centroids, model.fuzzifier);
}

std::vector<double> fcm_assign(const PointSet& centroids, double fuzzifier,
                               std::span<const double> point) {
  if (point.size() != centroids.dims()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("point dimension {} != model dimension {}", point.size(),
                            centroids.dims()));
  }
  if (centroids.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "model has no centroids");
  }
  std::vector<double> d2(centroids.rows());
  for (std::size_t k = 0; k < d2.size(); ++k) d2[k] = squared_distance(point, centroids.row(k));
  std::vector<double> out(centroids.rows());
  membership_row(d2, fuzzifier, out);
  return out;
}

std::vector<double> fcm_assign(const FcmModel& model, std::span<const double> point) {
  return fcm_assign(model.centroids, model.fuzzifier, point);
}

std::size_t argmax_membership(std::span<const double> memberships) {
  return static_cast<std::size_t>(
      std::distance(memberships.begin(), std::max_element(memberships.begin(), memberships.end())));
}

}  // namespace cbir
