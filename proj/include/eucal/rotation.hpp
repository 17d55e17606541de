#pragma once

#include <array>
#include <string>
#include <vector>

#include "eucal/types.hpp"

namespace eucal {

/// The three rotation entries (r1, r2, r4) = (R00, R01, R10) that, together
/// with unitarity, fix a rotation up to a finite set of sign branches.
struct RotationSeed {
  double r1 = 0.0;
  double r2 = 0.0;
  double r4 = 0.0;

  static RotationSeed from(const Mat3& R) { return {R(0, 0), R(0, 1), R(1, 0)}; }
};

/// Sign choices that produced a candidate: the radical in the r5 closed
/// form, then r3 and r6. The third row is the cross product of the first
/// two, so it carries no independent sign.
struct BranchLabel {
  int r5 = 1;
  int r3 = 1;
  int r6 = 1;

  /// Position in the canonical enumeration order, 0..7 ('+' before '-').
  int index() const { return (r5 < 0) * 4 + (r3 < 0) * 2 + (r6 < 0); }
  static BranchLabel from_index(int index);
  std::string str() const;  // e.g. "+-+"
  static BranchLabel parse(const std::string& text);

  friend bool operator==(const BranchLabel&, const BranchLabel&) = default;
};

struct RotationCandidate {
  Mat3 R;
  BranchLabel label;
};

struct RotationCandidateSet {
  std::vector<RotationCandidate> candidates;  // ordered by label index
};

struct RotationTolerances {
  double singular = 1e-10;       // |1 - r1^2| at or below: gimbal case
  double clamp = 1e-10;          // negative radicands down to -clamp are zeroed
  double orthonormal = 1e-9;     // acceptance of a completed candidate
};

/// r5 = [-r1 r2 r4 + sign * sqrt(disc)] / (1 - r1^2).
double complete_r5(const RotationSeed& seed, int sign, const RotationTolerances& tol = {});

/// Discriminant under the r5 radical.
double r5_discriminant(const RotationSeed& seed);

/// All proper rotations consistent with the seed, one per surviving sign
/// branch. Throws EmptyCandidateSet when nothing survives.
RotationCandidateSet enumerate_rotations(const RotationSeed& seed,
                                         const RotationTolerances& tol = {});

// SO(3) helpers shared by the solvers and the evaluation code.

/// Rodrigues exponential of an axis-angle vector.
Mat3 rotation_exp(const Vec3& omega);
/// Axis-angle vector of a rotation.
Vec3 rotation_log(const Mat3& R);
/// Closest proper rotation in Frobenius norm.
Mat3 nearest_rotation(const Mat3& M);
/// max |R R^T - I| entry.
double orthonormality_error(const Mat3& R);
/// Geodesic angle between two rotations, degrees.
double geodesic_deg(const Mat3& a, const Mat3& b);

}  // namespace eucal
