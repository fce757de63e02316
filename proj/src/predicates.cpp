#include "tubeskel/predicates.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>

namespace tubeskel::predicates {
namespace {

constexpr double kEpsilon = 0x1p-53;
constexpr double kOrient2dBound = (3.0 + 16.0 * kEpsilon) * kEpsilon;
constexpr double kOrientBound = (7.0 + 56.0 * kEpsilon) * kEpsilon;
constexpr double kInsphereBound = (16.0 + 224.0 * kEpsilon) * kEpsilon;

// Scales every input by a common power of two so that all become integers.
// The common positive factor does not change the sign of any homogeneous
// polynomial evaluated below.
template <std::size_t N>
std::array<mpz_class, N> to_integers(const std::array<double, N>& in) {
  int emin = INT_MAX;
  for (double d : in) {
    if (d != 0.0) {
      int e = 0;
      std::frexp(d, &e);
      emin = std::min(emin, e - 53);
    }
  }
  std::array<mpz_class, N> out;
  for (std::size_t i = 0; i < N; ++i) {
    if (in[i] == 0.0) continue;
    int e = 0;
    const double m = std::frexp(in[i], &e);
    const auto mantissa = static_cast<std::int64_t>(std::ldexp(m, 53));
    mpz_class z(static_cast<long>(mantissa));
    mpz_mul_2exp(z.get_mpz_t(), z.get_mpz_t(), static_cast<mp_bitcnt_t>(e - 53 - emin));
    out[i] = z;
  }
  return out;
}

int sign_of(const mpz_class& z) { return sgn(z); }

int orient2d_exact(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const auto z = to_integers<6>({a.x(), a.y(), b.x(), b.y(), c.x(), c.y()});
  const mpz_class det = (z[2] - z[0]) * (z[5] - z[1]) - (z[3] - z[1]) * (z[4] - z[0]);
  return sign_of(det);
}

int orient3d_exact(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const auto z = to_integers<12>({a.x(), a.y(), a.z(), b.x(), b.y(), b.z(),
                                  c.x(), c.y(), c.z(), d.x(), d.y(), d.z()});
  const mpz_class bx = z[3] - z[0], by = z[4] - z[1], bz = z[5] - z[2];
  const mpz_class cx = z[6] - z[0], cy = z[7] - z[1], cz = z[8] - z[2];
  const mpz_class dx = z[9] - z[0], dy = z[10] - z[1], dz = z[11] - z[2];
  const mpz_class det = dx * (by * cz - bz * cy) + dy * (bz * cx - bx * cz) + dz * (bx * cy - by * cx);
  return sign_of(det);
}

int insphere_exact(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e) {
  const auto z = to_integers<15>({a.x(), a.y(), a.z(), b.x(), b.y(), b.z(), c.x(), c.y(), c.z(),
                                  d.x(), d.y(), d.z(), e.x(), e.y(), e.z()});
  const mpz_class aex = z[0] - z[12], aey = z[1] - z[13], aez = z[2] - z[14];
  const mpz_class bex = z[3] - z[12], bey = z[4] - z[13], bez = z[5] - z[14];
  const mpz_class cex = z[6] - z[12], cey = z[7] - z[13], cez = z[8] - z[14];
  const mpz_class dex = z[9] - z[12], dey = z[10] - z[13], dez = z[11] - z[14];
  const mpz_class ab = aex * bey - bex * aey;
  const mpz_class bc = bex * cey - cex * bey;
  const mpz_class cd = cex * dey - dex * cey;
  const mpz_class da = dex * aey - aex * dey;
  const mpz_class ac = aex * cey - cex * aey;
  const mpz_class bd = bex * dey - dex * bey;
  const mpz_class abc = aez * bc - bez * ac + cez * ab;
  const mpz_class bcd = bez * cd - cez * bd + dez * bc;
  const mpz_class cda = cez * da + dez * ac + aez * cd;
  const mpz_class dab = dez * ab + aez * bd + bez * da;
  const mpz_class alift = aex * aex + aey * aey + aez * aez;
  const mpz_class blift = bex * bex + bey * bey + bez * bez;
  const mpz_class clift = cex * cex + cey * cey + cez * cez;
  const mpz_class dlift = dex * dex + dey * dey + dez * dez;
  const mpz_class det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);
  // Positive in this form means outside for right-handed abcd.
  return -sign_of(det);
}

}  // namespace

int orient2d(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const double left = (b.x() - a.x()) * (c.y() - a.y());
  const double right = (b.y() - a.y()) * (c.x() - a.x());
  const double det = left - right;
  const double bound = kOrient2dBound * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return orient2d_exact(a, b, c);
}

int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  // Evaluated as det[a-d; b-d; c-d], which is the negation of our convention.
  const double adx = a.x() - d.x(), bdx = b.x() - d.x(), cdx = c.x() - d.x();
  const double ady = a.y() - d.y(), bdy = b.y() - d.y(), cdy = c.y() - d.y();
  const double adz = a.z() - d.z(), bdz = b.z() - d.z(), cdz = c.z() - d.z();
  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double det = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) + cdz * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * std::abs(adz) +
                           (std::abs(cdxady) + std::abs(adxcdy)) * std::abs(bdz) +
                           (std::abs(adxbdy) + std::abs(bdxady)) * std::abs(cdz);
  const double bound = kOrientBound * permanent;
  if (det > bound) return -1;
  if (-det > bound) return 1;
  return orient3d_exact(a, b, c, d);
}

int insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e) {
  const double aex = a.x() - e.x(), bex = b.x() - e.x(), cex = c.x() - e.x(), dex = d.x() - e.x();
  const double aey = a.y() - e.y(), bey = b.y() - e.y(), cey = c.y() - e.y(), dey = d.y() - e.y();
  const double aez = a.z() - e.z(), bez = b.z() - e.z(), cez = c.z() - e.z(), dez = d.z() - e.z();

  const double aexbey = aex * bey, bexaey = bex * aey;
  const double bexcey = bex * cey, cexbey = cex * bey;
  const double cexdey = cex * dey, dexcey = dex * cey;
  const double dexaey = dex * aey, aexdey = aex * dey;
  const double aexcey = aex * cey, cexaey = cex * aey;
  const double bexdey = bex * dey, dexbey = dex * bey;
  const double ab = aexbey - bexaey, bc = bexcey - cexbey, cd = cexdey - dexcey;
  const double da = dexaey - aexdey, ac = aexcey - cexaey, bd = bexdey - dexbey;

  const double abc = aez * bc - bez * ac + cez * ab;
  const double bcd = bez * cd - cez * bd + dez * bc;
  const double cda = cez * da + dez * ac + aez * cd;
  const double dab = dez * ab + aez * bd + bez * da;

  const double alift = aex * aex + aey * aey + aez * aez;
  const double blift = bex * bex + bey * bey + bez * bez;
  const double clift = cex * cex + cey * cey + cez * cez;
  const double dlift = dex * dex + dey * dey + dez * dez;

  const double det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);

  const double aezp = std::abs(aez), bezp = std::abs(bez), cezp = std::abs(cez), dezp = std::abs(dez);
  const double aexbeyp = std::abs(aexbey), bexaeyp = std::abs(bexaey);
  const double bexceyp = std::abs(bexcey), cexbeyp = std::abs(cexbey);
  const double cexdeyp = std::abs(cexdey), dexceyp = std::abs(dexcey);
  const double dexaeyp = std::abs(dexaey), aexdeyp = std::abs(aexdey);
  const double aexceyp = std::abs(aexcey), cexaeyp = std::abs(cexaey);
  const double bexdeyp = std::abs(bexdey), dexbeyp = std::abs(dexbey);
  const double permanent =
      ((cexdeyp + dexceyp) * bezp + (dexbeyp + bexdeyp) * cezp + (bexceyp + cexbeyp) * dezp) * alift +
      ((dexaeyp + aexdeyp) * cezp + (aexceyp + cexaeyp) * dezp + (cexdeyp + dexceyp) * aezp) * blift +
      ((aexbeyp + bexaeyp) * dezp + (bexdeyp + dexbeyp) * aezp + (dexaeyp + aexdeyp) * bezp) * clift +
      ((bexceyp + cexbeyp) * aezp + (cexaeyp + aexceyp) * bezp + (aexbeyp + bexaeyp) * cezp) * dlift;
  const double bound = kInsphereBound * permanent;
  if (det > bound) return -1;
  if (-det > bound) return 1;
  return insphere_exact(a, b, c, d, e);
}

int insphere_sos(RankedPoint a, RankedPoint b, RankedPoint c, RankedPoint d, RankedPoint e) {
  const int s = insphere(*a.p, *b.p, *c.p, *d.p, *e.p);
  if (s != 0) return s;

  // Cospherical. The perturbed determinant is a sum of one term per point;
  // the term of the highest-ranked point with a nonzero coefficient decides.
  // Raising the lift of e pushes it outside. Raising the lift of a vertex v
  // raises the lifted hyperplane above e in proportion to the barycentric
  // coordinate of e with respect to v, i.e. the orientation of the
  // tetrahedron obtained by substituting e for v.
  std::array<RankedPoint, 5> order{a, b, c, d, e};
  std::sort(order.begin(), order.end(),
            [](const RankedPoint& x, const RankedPoint& y) { return x.rank > y.rank; });
  for (const RankedPoint& v : order) {
    if (v.p == e.p && v.rank == e.rank) return -1;
    const Vec3& pa = (a.rank == v.rank) ? *e.p : *a.p;
    const Vec3& pb = (b.rank == v.rank) ? *e.p : *b.p;
    const Vec3& pc = (c.rank == v.rank) ? *e.p : *c.p;
    const Vec3& pd = (d.rank == v.rank) ? *e.p : *d.p;
    const int o = orient3d(pa, pb, pc, pd);
    if (o != 0) return o;
  }
  return -1;
}

}  // namespace tubeskel::predicates
