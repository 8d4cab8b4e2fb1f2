#pragma once

#include <span>
#include <string>
#include <vector>

#include "fpksl/lattice.hpp"

namespace fpksl {

enum class KernelShape { CompactBump, TruncatedGaussian };

std::string to_string(KernelShape k);
KernelShape kernel_from_string(const std::string& s);

/// phi_eps(x) = phi(x / eps) / eps^d, sampled on the lattice and renormalized
/// to unit sum. The Gaussian is cut at `radius` (in units of eps); the bump is
/// supported on the unit ball.
struct MollifierSpec {
  double epsilon = 0.1;
  KernelShape kernel = KernelShape::TruncatedGaussian;
  double radius = 4.0;

  void validate(double rho) const;
};

/// Unnormalized radial profile phi(r) at r = |x| / eps (zero outside the support).
double kernel_profile(const MollifierSpec& spec, double r);

/// Support radius of phi_eps in space units.
double kernel_support(const MollifierSpec& spec);

struct KernelTap {
  MultiIndex offset{0, 0, 0};
  double weight = 0.0;
};

/// Lattice offsets and weights of the discrete kernel, summing to one.
class DiscreteKernel {
 public:
  DiscreteKernel(const MollifierSpec& spec, int dim, double rho);

  const std::vector<KernelTap>& taps() const { return taps_; }
  int reach() const { return reach_; }  // max |offset| per axis

 private:
  std::vector<KernelTap> taps_;
  int reach_ = 0;
};

/// out_i = sum_o w_o v_{i+o} / sum_o w_o with the sums restricted to in-box
/// nodes, so constants are preserved everywhere and the plain convolution is
/// recovered wherever the kernel support fits inside the box.
std::vector<double> convolve_nodal(std::span<const double> values, const Lattice& lattice,
                                   const DiscreteKernel& kernel);

}  // namespace fpksl
