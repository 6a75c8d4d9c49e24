#include "amis/basis.hpp"

#include <algorithm>
#include <cmath>

#include "amis/error.hpp"

namespace amis {

Basis Basis::constant() {
  Basis b;
  b.kind_ = Kind::Constant;
  b.size_ = 1;
  return b;
}

Basis Basis::affine(int state_dim) {
  if (state_dim <= 0) throw ConfigError("affine basis needs a positive state dimension");
  Basis b;
  b.kind_ = Kind::Affine;
  b.state_dim_ = state_dim;
  b.size_ = 1 + state_dim;
  return b;
}

Basis Basis::piecewise_constant_time(const Basis& inner, int intervals, double horizon) {
  if (intervals <= 0) throw ConfigError("piecewise basis needs at least one interval");
  if (!(horizon > 0.0)) throw ConfigError("piecewise basis needs a positive horizon");
  if (inner.kind_ == Kind::PiecewiseConstantTime) {
    throw ConfigError("piecewise basis cannot nest another piecewise basis");
  }
  Basis b;
  b.kind_ = Kind::PiecewiseConstantTime;
  b.size_ = inner.size_ * intervals;
  b.state_dim_ = inner.state_dim_;
  b.intervals_ = intervals;
  b.horizon_ = horizon;
  b.inner_ = std::make_shared<const Basis>(inner);
  return b;
}

Basis Basis::custom(int size, CustomFn fn) {
  if (size <= 0) throw ConfigError("custom basis needs a positive size");
  if (!fn) throw ConfigError("custom basis needs an evaluation function");
  Basis b;
  b.kind_ = Kind::Custom;
  b.size_ = size;
  b.custom_ = std::move(fn);
  return b;
}

int Basis::active_block(double t) const noexcept {
  if (intervals_ == 1) return 0;
  const int idx = static_cast<int>(std::floor(t / horizon_ * intervals_));
  return std::clamp(idx, 0, intervals_ - 1);
}

void Basis::evaluate(double t, std::span<const double> x, std::span<double> out) const {
  switch (kind_) {
    case Kind::Constant:
      out[0] = 1.0;
      return;
    case Kind::Affine:
      out[0] = 1.0;
      for (int i = 0; i < state_dim_; ++i) out[1 + i] = x[i];
      return;
    case Kind::PiecewiseConstantTime: {
      std::fill(out.begin(), out.end(), 0.0);
      const int inner_size = inner_->size_;
      const int block = active_block(t);
      inner_->evaluate(t, x, out.subspan(static_cast<std::size_t>(block * inner_size), inner_size));
      return;
    }
    case Kind::Custom:
      custom_(t, x, out);
      return;
  }
}

std::string Basis::name() const {
  switch (kind_) {
    case Kind::Constant:
      return "constant";
    case Kind::Affine:
      return "affine";
    case Kind::PiecewiseConstantTime:
      return "piecewise(" + inner_->name() + "," + std::to_string(intervals_) + ")";
    case Kind::Custom:
      return "custom";
  }
  return "unknown";
}

}  // namespace amis
