#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; both write results by index so their outputs are
// bitwise identical whatever the thread schedule. Tests compare the two and
// bench/bench_kernels.cpp times them.

#include <functional>
#include <span>
#include <vector>

#include "eucal/stereo.hpp"
#include "eucal/types.hpp"

namespace eucal::kernels {

std::vector<StereoPointEstimate> triangulate_serial(const ObservationSet& obs, double baseline,
                                                    double rho, const StereoTolerances& tol);
std::vector<StereoPointEstimate> triangulate_parallel(const ObservationSet& obs, double baseline,
                                                      double rho, const StereoTolerances& tol);

/// Euclidean reprojection error per (camera, point), camera-major. Entries
/// whose point is on or behind the camera plane are NaN.
std::vector<double> reprojection_serial(std::span<const CameraModel> cameras,
                                        std::span<const WorldPoint> cloud,
                                        const ObservationSet& obs);
std::vector<double> reprojection_parallel(std::span<const CameraModel> cameras,
                                          std::span<const WorldPoint> cloud,
                                          const ObservationSet& obs);

/// Evaluates `score(index)` for index in [0, count). The callable must be
/// safe to invoke concurrently for distinct indices and must not throw.
template <typename T>
using IndexedScore = std::function<T(int)>;

template <typename T>
std::vector<T> map_serial(int count, const IndexedScore<T>& score) {
  std::vector<T> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = score(i);
  return out;
}

template <typename T>
std::vector<T> map_parallel(int count, const IndexedScore<T>& score) {
  std::vector<T> out(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) out[i] = score(i);
  return out;
}

}  // namespace eucal::kernels
