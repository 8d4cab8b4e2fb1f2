#include "fpksl/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fpksl {

std::string to_string(Boundary b) {
  return b == Boundary::Reflect ? "reflect" : "truncate";
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "reflect") return Boundary::Reflect;
  if (s == "truncate") return Boundary::Truncate;
  throw InvalidArgument("unknown boundary policy '" + s + "' (expected truncate|reflect)");
}

double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (int k = 0; k < kMaxDim; ++k) s += a[k] * b[k];
  return s;
}

double norm2(const Point& a) { return dot(a, a); }

Lattice::Lattice(int dim, double rho, const Point& lo, const Point& hi, Boundary boundary)
    : dim_(dim), rho_(rho), boundary_(boundary) {
  if (dim < 1 || dim > kMaxDim) {
    throw InvalidArgument("lattice dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("lattice step rho must be positive");
  std::size_t stride = 1;
  for (int k = 0; k < dim; ++k) {
    lo_[k] = lo[k];
    hi_[k] = hi[k];
    if (!(hi[k] > lo[k])) {
      std::ostringstream msg;
      msg << "lattice axis " << k << ": hi (" << hi[k] << ") must exceed lo (" << lo[k] << ")";
      throw InvalidArgument(msg.str());
    }
    const double cells = (hi[k] - lo[k]) / rho;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, rounded) || rounded < 2.0) {
      std::ostringstream msg;
      msg << "lattice axis " << k << ": (hi - lo) / rho = " << cells << " must be an integer >= 2";
      throw InvalidArgument(msg.str());
    }
    counts_[k] = static_cast<int>(rounded) + 1;
    strides_[k] = stride;
    stride *= static_cast<std::size_t>(counts_[k]);
  }
  node_count_ = stride;
  cell_volume_ = std::pow(rho, dim);
}

bool Lattice::in_index_box(const MultiIndex& i) const {
  for (int k = 0; k < dim_; ++k) {
    if (i[k] < 0 || i[k] >= counts_[k]) return false;
  }
  return true;
}

std::size_t Lattice::flat_index(const MultiIndex& i) const {
  std::size_t flat = 0;
  for (int k = 0; k < dim_; ++k) flat += static_cast<std::size_t>(i[k]) * strides_[k];
  return flat;
}

MultiIndex Lattice::multi_index(std::size_t flat) const {
  MultiIndex i{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    i[k] = static_cast<int>(flat % static_cast<std::size_t>(counts_[k]));
    flat /= static_cast<std::size_t>(counts_[k]);
  }
  return i;
}

Point Lattice::node(const MultiIndex& i) const {
  Point x{0.0, 0.0, 0.0};
  for (int k = 0; k < dim_; ++k) x[k] = lo_[k] + i[k] * rho_;
  return x;
}

Point Lattice::node(std::size_t flat) const { return node(multi_index(flat)); }

bool Lattice::contains(const Point& x) const {
  for (int k = 0; k < dim_; ++k) {
    if (!(x[k] >= lo_[k] && x[k] <= hi_[k])) return false;
  }
  return true;
}

double Lattice::basis_eval(const MultiIndex& i, const Point& x) const {
  double w = 1.0;
  for (int k = 0; k < dim_; ++k) {
    const double xi = lo_[k] + i[k] * rho_;
    w *= std::max(1.0 - std::abs(x[k] - xi) / rho_, 0.0);
  }
  return w;
}

BasisStencil Lattice::stencil(const Point& x) const {
  const bool inside = contains(x);
  std::array<int, kMaxDim> base{0, 0, 0};
  std::array<double, kMaxDim> frac{0.0, 0.0, 0.0};
  for (int k = 0; k < dim_; ++k) {
    double s = (x[k] - lo_[k]) / rho_;
    // Points that land on a node up to rounding get the exact nodal weight.
    const double r = std::round(s);
    if (std::abs(s - r) <= 1e-12 * std::max(1.0, std::abs(r))) s = r;
    // Keep in-box points from drifting past the last node through rounding.
    if (inside) s = std::clamp(s, 0.0, static_cast<double>(counts_[k] - 1));
    const double b = std::floor(s);
    base[k] = static_cast<int>(b);
    frac[k] = s - b;
  }
  BasisStencil out;
  const int corners = 1 << dim_;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    bool valid = true;
    for (int k = 0; k < dim_; ++k) {
      const bool upper = (c >> k) & 1;
      const int idx = base[k] + (upper ? 1 : 0);
      if (idx < 0 || idx >= counts_[k]) {
        valid = false;
        break;
      }
      w *= upper ? frac[k] : 1.0 - frac[k];
      flat += static_cast<std::size_t>(idx) * strides_[k];
    }
    if (valid && w > 0.0) out.entries[out.count++] = {flat, w};
  }
  return out;
}

Interpolated Lattice::interpolate(std::span<const double> values, const Point& x) const {
  if (values.size() != node_count_) throw InvalidArgument("interpolate: value array does not match lattice");
  Interpolated r;
  Point q = x;
  if (!contains(x)) {
    q = boundary_ == Boundary::Reflect ? reflect(x) : clamp(x);
    r.clamped = true;
  }
  for (const auto& e : stencil(q).view()) r.value += e.weight * values[e.node];
  return r;
}

Point Lattice::reflect(const Point& x) const {
  Point y = x;
  for (int k = 0; k < dim_; ++k) {
    if (!std::isfinite(x[k])) throw InvalidArgument("reflect: non-finite coordinate");
    if (x[k] >= lo_[k] && x[k] <= hi_[k]) continue;
    const double len = hi_[k] - lo_[k];
    double s = std::fmod(x[k] - lo_[k], 2.0 * len);
    if (s < 0.0) s += 2.0 * len;
    if (s > len) s = 2.0 * len - s;
    y[k] = std::clamp(lo_[k] + s, lo_[k], hi_[k]);
  }
  return y;
}

Point Lattice::clamp(const Point& x) const {
  Point y = x;
  for (int k = 0; k < dim_; ++k) y[k] = std::clamp(x[k], lo_[k], hi_[k]);
  return y;
}

std::optional<std::size_t> Lattice::cell_of(const Point& x) const {
  Point q = x;
  if (!contains(x)) {
    if (boundary_ == Boundary::Truncate) return std::nullopt;
    q = reflect(x);
  }
  MultiIndex i{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    const double s = (q[k] - lo_[k]) / rho_;
    // ceil(s - 1/2) sends exact half-cell ties to the smaller index
    i[k] = std::clamp(static_cast<int>(std::ceil(s - 0.5 - 1e-9)), 0, counts_[k] - 1);
  }
  return flat_index(i);
}

bool Lattice::operator==(const Lattice& o) const {
  return dim_ == o.dim_ && rho_ == o.rho_ && lo_ == o.lo_ && hi_ == o.hi_ && boundary_ == o.boundary_;
}

}  // namespace fpksl
