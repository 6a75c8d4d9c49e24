#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>

namespace amis {

/// Feature map g(t, x) used by linearly parametrized controls u = A g(t, x).
///
/// Constant gives g = 1 (open-loop, time constant). Affine gives g = (1, x).
/// PiecewiseConstantTime repeats an inner basis over `intervals` equal slices
/// of [0, T]; only the block of the slice containing t is nonzero, so the
/// Gram matrix of a path is block diagonal.
class Basis {
 public:
  enum class Kind { Constant, Affine, PiecewiseConstantTime, Custom };

  using CustomFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

  static Basis constant();
  static Basis affine(int state_dim);
  static Basis piecewise_constant_time(const Basis& inner, int intervals, double horizon);
  static Basis custom(int size, CustomFn fn);

  Kind kind() const noexcept { return kind_; }
  int size() const noexcept { return size_; }

  // Blocks of the Gram matrix that can be solved independently.
  int num_blocks() const noexcept { return intervals_; }
  int block_size() const noexcept { return size_ / intervals_; }
  int active_block(double t) const noexcept;

  // State dimension the basis reads (0 when it ignores x).
  int input_dim() const noexcept { return state_dim_; }

  const Basis* inner() const noexcept { return inner_.get(); }
  double horizon() const noexcept { return horizon_; }

  void evaluate(double t, std::span<const double> x, std::span<double> out) const;

  std::string name() const;

 private:
  Basis() = default;

  Kind kind_ = Kind::Constant;
  int size_ = 1;
  int state_dim_ = 0;
  int intervals_ = 1;
  double horizon_ = 0.0;
  std::shared_ptr<const Basis> inner_;
  CustomFn custom_;
};

}  // namespace amis
