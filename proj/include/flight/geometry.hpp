#pragma once

// Geometric primitives shared by every estimator: vectors on the sphere,
// rotations, rotation-compensated correspondences and the great circle of
// headings each correspondence admits.

#include <array>
#include <cmath>
#include <optional>

namespace flight {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegPerRad = 180.0 / kPi;

constexpr double deg_to_rad(double deg) { return deg / kDegPerRad; }
constexpr double rad_to_deg(double rad) { return rad * kDegPerRad; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// A point on S². Construction normalizes; the zero vector is rejected.
class UnitVector3 {
 public:
  /// Normalizes `v`; throws flight::Error for zero or non-finite input.
  explicit UnitVector3(const Vec3& v);
  UnitVector3(double x, double y, double z) : UnitVector3(Vec3{x, y, z}) {}

  /// Returns nullopt instead of throwing.
  static std::optional<UnitVector3> try_normalize(const Vec3& v);

  /// Wraps an already-normalized vector bit-for-bit. Throws if the norm is
  /// off by more than 1e-9.
  static UnitVector3 assume_unit(const Vec3& v);

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x; }
  double y() const { return v_.y; }
  double z() const { return v_.z; }

  UnitVector3 operator-() const { return UnitVector3(-v_, Trusted{}); }
  bool operator==(const UnitVector3&) const = default;

 private:
  struct Trusted {};
  UnitVector3(const Vec3& v, Trusted) : v_(v) {}

  Vec3 v_;
};

inline double dot(const UnitVector3& a, const UnitVector3& b) { return dot(a.vec(), b.vec()); }

struct Mat3 {
  std::array<double, 9> m{};  // row-major

  static constexpr Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

  double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }
  double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const;
  Mat3 transpose() const;
  double determinant() const;
  bool operator==(const Mat3&) const = default;
};

/// A proper rotation: RᵀR = I and det R = 1, each within 1e-6.
class RotationMatrix {
 public:
  RotationMatrix() : m_(Mat3::identity()) {}
  /// Validates orthonormality; throws ErrorCode::kInvalidRotation.
  explicit RotationMatrix(const Mat3& m);

  static bool is_valid(const Mat3& m, double tol = 1e-6);
  /// Rodrigues' formula.
  static RotationMatrix about_axis(const UnitVector3& axis, double angle_rad);

  const Mat3& matrix() const { return m_; }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  Mat3 m_;
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

/// Normalized image point (x, y, 1).
struct HomogeneousPoint {
  double x = 0.0;
  double y = 0.0;

  Vec3 lifted() const { return {x, y, 1.0}; }
};

/// (p̂, q): first-frame point with the known rotation applied, and the
/// matching second-frame point.
struct CompensatedCorrespondence {
  Vec3 p_hat;
  Vec3 q;
};

/// The great circle of headings compatible with one correspondence, stored
/// by its unit normal with the first nonzero component positive.
struct GreatCircle {
  UnitVector3 normal;
};

/// Normalized cross-product magnitude below which a correspondence carries
/// no heading information.
inline constexpr double kDegenerateEpsilon = 1e-12;

HomogeneousPoint normalize_pixel(const Intrinsics& intrinsics, const PixelPoint& pt);

Vec3 compensate_rotation(const RotationMatrix& rotation, const HomogeneousPoint& p);

bool is_degenerate(const CompensatedCorrespondence& c);

/// normalize(p̂ × q) with canonical sign, or nullopt for zero flow.
std::optional<GreatCircle> great_circle_normal(const CompensatedCorrespondence& c);

/// Flips `n` so its first nonzero component is positive.
UnitVector3 canonical_sign(const UnitVector3& n);

/// t · (p̂ × q); exactly 0 for degenerate correspondences.
double epipolar_residual(const UnitVector3& t, const CompensatedCorrespondence& c);

/// Angle between two directions in radians, in [0, π].
double angular_distance(const UnitVector3& a, const UnitVector3& b);

/// Angle between two directions in degrees, in [0, 180].
double angular_error_deg(const UnitVector3& estimate, const UnitVector3& truth);

}  // namespace flight
