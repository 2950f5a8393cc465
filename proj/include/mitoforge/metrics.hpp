#pragma once

#include <cstdint>
#include <span>

#include "mitoforge/mesh.hpp"
#include "mitoforge/microscope.hpp"

namespace mitoforge {

inline constexpr std::size_t kDefaultIouSamples = 100000;
inline constexpr std::size_t kDefaultChamferPoints = 100000;

struct MeshComparison {
    double iou = 0.0;
    double chamfer_l1 = 0.0;
    std::size_t n_samples = 0;  // IoU Monte-Carlo points
    std::size_t n_points = 0;   // surface points per mesh for Chamfer
    std::uint64_t seed = 0;
};

/// Monte-Carlo IoU of the enclosed volumes over the joint bounding box enlarged by 5%.
/// Throws InputError for non-watertight input or when no sample falls inside either mesh.
double volumetric_iou(const TriangleMesh& a, const TriangleMesh& b, std::size_t n_samples = kDefaultIouSamples,
                      std::uint64_t seed = 0);

/// ½·(mean NN distance A→B + mean NN distance B→A) over point sets.
double chamfer_l1(std::span<const Vec3> a, std::span<const Vec3> b);
/// Samples n_points area-uniformly on each surface (same seed for both) and applies the
/// point-set form. Units are those of the meshes. Throws InputError for zero-area meshes.
double chamfer_l1(const TriangleMesh& a, const TriangleMesh& b, std::size_t n_points = kDefaultChamferPoints,
                  std::uint64_t seed = 0);

MeshComparison compare_meshes(const TriangleMesh& pred, const TriangleMesh& gt, std::size_t n_samples,
                              std::size_t n_points, std::uint64_t seed);

struct MaskScores {
    double dice = 0.0;
    double iou = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
};

/// foreground_only: counts are over foreground pixels only (the usual binary scores).
/// Otherwise both classes are scored and their counts pooled, so tp also includes true
/// background pixels. Both-empty gives dice = iou = f1 = 1. Throws InputError on shape mismatch.
MaskScores mask_scores(const Image2D& pred, const Image2D& gt, bool foreground_only = true);

}  // namespace mitoforge
