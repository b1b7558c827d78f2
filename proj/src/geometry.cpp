#include "flight/geometry.hpp"

#include <string>

#include "flight/error.hpp"

namespace flight {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInsufficientData: return "insufficient_data";
    case ErrorCode::kNoConsensus: return "no_consensus";
    case ErrorCode::kRegionTooSmall: return "region_too_small";
    case ErrorCode::kFoeAtInfinity: return "foe_at_infinity";
    case ErrorCode::kNoValidSample: return "no_valid_sample";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBadVersion: return "bad_version";
    case ErrorCode::kMalformedHeader: return "malformed_header";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kMalformedRecord: return "malformed_record";
    case ErrorCode::kTooFewRecords: return "too_few_records";
    case ErrorCode::kInvalidRotation: return "invalid_rotation";
    case ErrorCode::kInvalidIntrinsics: return "invalid_intrinsics";
    case ErrorCode::kInvalidConfig: return "invalid_config";
  }
  return "unknown";
}

UnitVector3::UnitVector3(const Vec3& v) {
  auto u = try_normalize(v);
  if (!u) throw Error(ErrorCode::kInvalidArgument, "cannot normalize a zero or non-finite vector");
  v_ = u->v_;
}

std::optional<UnitVector3> UnitVector3::try_normalize(const Vec3& v) {
  if (!is_finite(v)) return std::nullopt;
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) return std::nullopt;
  return UnitVector3(v / n, Trusted{});
}

UnitVector3 UnitVector3::assume_unit(const Vec3& v) {
  if (!is_finite(v) || std::abs(norm(v) - 1.0) > 1e-9)
    throw Error(ErrorCode::kInvalidArgument, "vector is not unit length");
  return UnitVector3(v, Trusted{});
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) + (*this)(i, 2) * o(2, j);
  return r;
}

Mat3 Mat3::transpose() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

double Mat3::determinant() const {
  const auto& a = m;
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

bool RotationMatrix::is_valid(const Mat3& m, double tol) {
  for (double v : m.m)
    if (!std::isfinite(v)) return false;
  const Mat3 rtr = m.transpose() * m;
  const Mat3 eye = Mat3::identity();
  for (int k = 0; k < 9; ++k)
    if (std::abs(rtr.m[static_cast<std::size_t>(k)] - eye.m[static_cast<std::size_t>(k)]) > tol)
      return false;
  return std::abs(m.determinant() - 1.0) <= tol;
}

RotationMatrix::RotationMatrix(const Mat3& m) : m_(m) {
  if (!is_valid(m)) throw Error(ErrorCode::kInvalidRotation, "invalid rotation: not orthonormal with det 1");
}

RotationMatrix RotationMatrix::about_axis(const UnitVector3& axis, double angle_rad) {
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  const double t = 1.0 - c;
  const double x = axis.x(), y = axis.y(), z = axis.z();
  RotationMatrix r;
  r.m_ = Mat3{{t * x * x + c, t * x * y - s * z, t * x * z + s * y,
               t * x * y + s * z, t * y * y + c, t * y * z - s * x,
               t * x * z - s * y, t * y * z + s * x, t * z * z + c}};
  return r;
}

HomogeneousPoint normalize_pixel(const Intrinsics& k, const PixelPoint& pt) {
  if (!std::isfinite(pt.u) || !std::isfinite(pt.v) || !std::isfinite(k.fx) || !std::isfinite(k.fy) ||
      !std::isfinite(k.cx) || !std::isfinite(k.cy))
    throw Error(ErrorCode::kNonFinite, "non-finite pixel or intrinsics");
  if (!(k.fx > 0.0) || !(k.fy > 0.0))
    throw Error(ErrorCode::kInvalidIntrinsics, "focal lengths must be positive");
  return {(pt.u - k.cx) / k.fx, (pt.v - k.cy) / k.fy};
}

Vec3 compensate_rotation(const RotationMatrix& rotation, const HomogeneousPoint& p) {
  return rotation * p.lifted();
}

namespace {

// |p̂ × q| / (|p̂| |q|), with the raw cross product.
double normalized_cross(const CompensatedCorrespondence& c, Vec3* raw) {
  *raw = cross(c.p_hat, c.q);
  const double scale = norm(c.p_hat) * norm(c.q);
  if (!(scale > 0.0) || !std::isfinite(scale)) return 0.0;
  return norm(*raw) / scale;
}

}  // namespace

bool is_degenerate(const CompensatedCorrespondence& c) {
  Vec3 raw;
  return !(normalized_cross(c, &raw) >= kDegenerateEpsilon);
}

UnitVector3 canonical_sign(const UnitVector3& n) {
  const Vec3& v = n.vec();
  const double lead = v.x != 0.0 ? v.x : (v.y != 0.0 ? v.y : v.z);
  return lead < 0.0 ? -n : n;
}

std::optional<GreatCircle> great_circle_normal(const CompensatedCorrespondence& c) {
  Vec3 raw;
  if (!(normalized_cross(c, &raw) >= kDegenerateEpsilon)) return std::nullopt;
  auto n = UnitVector3::try_normalize(raw);
  if (!n) return std::nullopt;
  return GreatCircle{canonical_sign(*n)};
}

double epipolar_residual(const UnitVector3& t, const CompensatedCorrespondence& c) {
  Vec3 raw;
  if (!(normalized_cross(c, &raw) >= kDegenerateEpsilon)) return 0.0;
  return dot(t.vec(), raw);
}

double angular_distance(const UnitVector3& a, const UnitVector3& b) {
  // atan2 keeps full precision near 0 and π, where acos(dot) does not.
  return std::atan2(norm(cross(a.vec(), b.vec())), dot(a.vec(), b.vec()));
}

double angular_error_deg(const UnitVector3& estimate, const UnitVector3& truth) {
  return rad_to_deg(angular_distance(estimate, truth));
}

}  // namespace flight
