#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace fpksl {

/// Largest supported space dimension. Unused trailing coordinates are zero.
inline constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;
using MultiIndex = std::array<int, kMaxDim>;

enum class Boundary {
  Truncate,  // mass leaving the box is dropped
  Reflect,   // points are mirror-folded back into the box
};

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

/// Thrown for malformed inputs to any solver component.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical evaluation fails (non-finite coefficients, overflow).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeWeight {
  std::size_t node = 0;
  double weight = 0.0;
};

/// Non-zero Q1 basis weights of a point, restricted to in-box nodes.
struct BasisStencil {
  std::array<NodeWeight, (1 << kMaxDim)> entries{};
  int count = 0;

  std::span<const NodeWeight> view() const { return {entries.data(), static_cast<std::size_t>(count)}; }
};

struct Interpolated {
  double value = 0.0;
  bool clamped = false;  // query left the box and was brought back before evaluation
};

/// Uniform lattice restricted to an axis-aligned box, with tensor-product hat
/// basis functions. Node i sits at lo + i * rho.
class Lattice {
 public:
  Lattice(int dim, double rho, const Point& lo, const Point& hi, Boundary boundary);

  int dim() const { return dim_; }
  double rho() const { return rho_; }
  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }
  Boundary boundary() const { return boundary_; }

  int nodes_per_axis(int axis) const { return counts_[axis]; }
  std::size_t node_count() const { return node_count_; }
  /// rho^d, the volume of one cell.
  double cell_volume() const { return cell_volume_; }

  bool in_index_box(const MultiIndex& i) const;
  std::size_t flat_index(const MultiIndex& i) const;
  MultiIndex multi_index(std::size_t flat) const;
  Point node(std::size_t flat) const;
  Point node(const MultiIndex& i) const;

  bool contains(const Point& x) const;

  /// beta_i(x) = prod_k max(1 - |x_k - (x_i)_k| / rho, 0).
  double basis_eval(const MultiIndex& i, const Point& x) const;

  /// All in-box nodes with beta_i(x) > 0, in ascending flat order.
  BasisStencil stencil(const Point& x) const;

  /// sum_i f_i beta_i(x). Queries outside the box are clamped (Truncate) or
  /// reflected (Reflect) first and flagged.
  Interpolated interpolate(std::span<const double> values, const Point& x) const;

  /// Coordinate-wise mirror folding into [lo, hi]. Throws on non-finite input.
  Point reflect(const Point& x) const;
  Point clamp(const Point& x) const;

  /// Index of the closed cell |x - x_i|_inf <= rho/2 containing x; ties go to
  /// the smaller index. Outside the box: nullopt under Truncate, reflected
  /// first under Reflect.
  std::optional<std::size_t> cell_of(const Point& x) const;

  bool operator==(const Lattice& other) const;

 private:
  int dim_;
  double rho_;
  Point lo_{};
  Point hi_{};
  Boundary boundary_;
  std::array<int, kMaxDim> counts_{1, 1, 1};
  std::array<std::size_t, kMaxDim> strides_{0, 0, 0};
  std::size_t node_count_ = 0;
  double cell_volume_ = 1.0;
};

double dot(const Point& a, const Point& b);
double norm2(const Point& a);

}  // namespace fpksl
