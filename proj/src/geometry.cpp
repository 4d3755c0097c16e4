#include "spinchain/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spinchain {

using Eigen::Vector3d;

namespace {

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

void check_angle(double deg, const char* name) {
  if (!std::isfinite(deg) || std::abs(deg) >= 90.0)
    throw std::invalid_argument(std::string(name) +
                                " must lie strictly inside (-90, 90) degrees");
}

} // namespace

void FieldConfig::validate() const {
  if (!std::isfinite(b1_t) || !std::isfinite(b2_t))
    throw std::invalid_argument("field magnitudes must be finite");
  check_angle(alpha_atomic_deg, "alpha_atomic");
  check_angle(alpha_tilt_deg, "alpha_tilt");
  check_angle(alpha_deg(), "effective alpha");
  check_angle(beta_deg, "beta");
  check_angle(gamma_deg, "gamma");
}

Vector3d lab_to_crystal(const FieldConfig& cfg) {
  cfg.validate();
  const double a = deg_to_rad(cfg.alpha_deg());
  const double b = deg_to_rad(cfg.beta_deg);
  const double g = deg_to_rad(cfg.gamma_deg);
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  const double cg = std::cos(g), sg = std::sin(g);

  // Transpose of Rz(beta) * Rx(gamma) * Ry(alpha) applied to (B1, B2, 0).
  return Vector3d(cfg.b1_t * (ca * cb - sa * sb * sg) + cfg.b2_t * (ca * sb + sa * cb * sg),
                  cfg.b1_t * (-sb * cg) + cfg.b2_t * (cb * cg),
                  cfg.b1_t * (sa * cb + ca * sb * sg) + cfg.b2_t * (sa * sb - ca * cb * sg));
}

Vector3d simplified_field(double b1_t, double alpha_deg, double beta_deg) {
  if (!std::isfinite(b1_t)) throw std::invalid_argument("field magnitude must be finite");
  check_angle(alpha_deg, "alpha");
  check_angle(beta_deg, "beta");
  const double a = deg_to_rad(alpha_deg);
  const double b = deg_to_rad(beta_deg);
  return b1_t * Vector3d(std::cos(a) * std::cos(b), -std::sin(b), std::sin(a) * std::cos(b));
}

std::vector<Vector3d> total_site_fields(const Vector3d& crystal_field, const ChainSpec& chain,
                                        std::optional<int> probed_site) {
  const int n = chain.n_sites();
  std::vector<Vector3d> fields(static_cast<std::size_t>(n), crystal_field);

  if (!probed_site) {
    for (int i = 0; i < n; ++i) fields[static_cast<std::size_t>(i)] += chain.sites[static_cast<std::size_t>(i)].tip_field_T;
    return fields;
  }

  if (*probed_site < 0 || *probed_site >= n)
    throw std::invalid_argument("probed site index out of range");
  int tip_site = -1;
  for (int i = 0; i < n; ++i) {
    if (chain.sites[static_cast<std::size_t>(i)].tip_field_T.isZero(0.0)) continue;
    if (tip_site >= 0)
      throw std::invalid_argument(
          "relocating the tip field onto the probed site needs a unique source site");
    tip_site = i;
  }
  if (tip_site >= 0)
    fields[static_cast<std::size_t>(*probed_site)] +=
        chain.sites[static_cast<std::size_t>(tip_site)].tip_field_T;
  return fields;
}

} // namespace spinchain
