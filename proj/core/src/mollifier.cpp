#include "fpksl/mollifier.hpp"

#include <cmath>
#include <sstream>

namespace fpksl {

std::string to_string(KernelShape k) {
  return k == KernelShape::CompactBump ? "bump" : "gaussian";
}

KernelShape kernel_from_string(const std::string& s) {
  if (s == "bump") return KernelShape::CompactBump;
  if (s == "gaussian") return KernelShape::TruncatedGaussian;
  throw InvalidArgument("unknown mollifier kernel '" + s + "' (expected gaussian|bump)");
}

void MollifierSpec::validate(double rho) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("mollifier: epsilon must be positive");
  if (epsilon < rho * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "mollifier: epsilon " << epsilon << " is below the lattice step " << rho << " (kernel under-resolved)";
    throw InvalidArgument(msg.str());
  }
  if (kernel == KernelShape::TruncatedGaussian && !(radius > 0.0)) {
    throw InvalidArgument("mollifier: truncation radius must be positive");
  }
}

double kernel_profile(const MollifierSpec& spec, double r) {
  if (spec.kernel == KernelShape::TruncatedGaussian) {
    return r <= spec.radius + 1e-12 ? std::exp(-0.5 * r * r) : 0.0;
  }
  return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0;
}

double kernel_support(const MollifierSpec& spec) {
  return spec.kernel == KernelShape::CompactBump ? spec.epsilon : spec.radius * spec.epsilon;
}

DiscreteKernel::DiscreteKernel(const MollifierSpec& spec, int dim, double rho) {
  spec.validate(rho);
  const double support = kernel_support(spec);
  reach_ = static_cast<int>(std::floor(support / rho + 1e-9));
  const int span = 2 * reach_ + 1;
  int total = 1;
  for (int k = 0; k < dim; ++k) total *= span;
  double sum = 0.0;
  for (int c = 0; c < total; ++c) {
    MultiIndex o{0, 0, 0};
    int rem = c;
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      o[k] = rem % span - reach_;
      rem /= span;
      r2 += (o[k] * rho) * (o[k] * rho);
    }
    const double w = kernel_profile(spec, std::sqrt(r2) / spec.epsilon);
    if (w > 0.0) {
      taps_.push_back({o, w});
      sum += w;
    }
  }
  for (auto& t : taps_) t.weight /= sum;
}

std::vector<double> convolve_nodal(std::span<const double> values, const Lattice& lattice,
                                   const DiscreteKernel& kernel) {
  if (values.size() != lattice.node_count()) throw InvalidArgument("convolve_nodal: value array does not match lattice");
  std::vector<double> out(values.size(), 0.0);
  const int d = lattice.dim();
  for (std::size_t n = 0; n < values.size(); ++n) {
    const MultiIndex i = lattice.multi_index(n);
    double acc = 0.0, norm = 0.0;
    for (const auto& tap : kernel.taps()) {
      MultiIndex j = i;
      for (int k = 0; k < d; ++k) j[k] += tap.offset[k];
      if (!lattice.in_index_box(j)) continue;
      acc += tap.weight * values[lattice.flat_index(j)];
      norm += tap.weight;
    }
    out[n] = acc / norm;
  }
  return out;
}

}  // namespace fpksl
