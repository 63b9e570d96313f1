#pragma once

// Scalar-generic evaluation of one radial exponential-map layer. Instantiated
// with double for density evaluation and with Dual<N> for the local
// derivatives the gradient engine chains through the layer trajectory.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphereflow/dual.hpp"

namespace sphereflow {

struct DegenerateJacobian : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Below this |det J| the layer has left the diffeomorphic regime.
inline constexpr double kDegenerateDet = 1e-300;

template <typename S>
using V3 = std::array<S, 3>;

template <typename S>
S dot3(const V3<S>& a, const V3<S>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <typename S>
V3<S> cross3(const V3<S>& a, const V3<S>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <typename S, typename T>
void axpy3(V3<S>& y, const T& alpha, const V3<S>& x) {
  for (int c = 0; c < 3; ++c) y[c] += alpha * x[c];
}

template <typename S>
V3<S> normalized3(const V3<S>& a) {
  using std::sqrt;
  const S inv = 1.0 / sqrt(dot3(a, a));
  return {a[0] * inv, a[1] * inv, a[2] * inv};
}

// cos(n), sin(n)/n and (n cos n - sin n)/n^3 as smooth functions of q = n^2.
template <typename S>
struct ArcTerms {
  S cos_n;
  S sinc_n;
  S b_n;
};

template <typename S>
ArcTerms<S> arc_terms(const S& q) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (value_of(q) < 1e-4) {
    const S q2 = q * q;
    const S q3 = q2 * q;
    return {1.0 - q / 2.0 + q2 / 24.0 - q3 / 720.0,
            1.0 - q / 6.0 + q2 / 120.0 - q3 / 5040.0,
            -1.0 / 3.0 + q / 30.0 - q2 / 840.0 + q3 / 45360.0};
  }
  const S n = sqrt(q);
  const S c = cos(n);
  const S s = sin(n);
  return {c, s / n, (n * c - s) / (n * q)};
}

// Frame at unit x; the axis choice is made on values so it is piecewise
// constant and differentiates like a fixed axis.
template <typename S>
std::array<V3<S>, 2> frame_at(const V3<S>& x) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(value_of(x[i])) < std::abs(value_of(x[axis]))) axis = i;
  }
  V3<S> a{S(0.0), S(0.0), S(0.0)};
  a[axis] = S(1.0);
  const S ax = x[axis];
  V3<S> e1 = a;
  axpy3(e1, -ax, x);
  e1 = normalized3(e1);
  return {e1, cross3(x, e1)};
}

template <typename S>
struct LayerView {
  std::span<const S> betas;
  std::span<const V3<S>> centers;
  std::span<const S> etas;
};

template <typename S>
struct LayerStep {
  V3<S> out;
  S logdet;
};

// One layer T(x) = exp_x(grad phi(x)) with the log of |det| of its 2x2
// tangent Jacobian, computed as <T, dT(e1) x dT(e2)> for the right-handed
// frame {e1, e2, x}. The input is normalized first so that ambient
// derivatives with respect to it are well defined.
template <typename S>
LayerStep<S> layer_step(const V3<S>& x_in, const LayerView<S>& layer) {
  using std::abs;
  using std::exp;
  using std::log;
  const V3<S> x = normalized3(x_in);
  const std::size_t p = layer.betas.size();

  V3<S> a{S(0.0), S(0.0), S(0.0)};
  // w_i beta_i, reused by the Hessian-vector products below.
  std::array<S, 16> wb_small;
  std::vector<S> wb_large;
  S* wb = wb_small.data();
  if (p > wb_small.size()) {
    wb_large.resize(p);
    wb = wb_large.data();
  }
  for (std::size_t i = 0; i < p; ++i) {
    const V3<S>& m = layer.centers[i];
    const S e = exp(layer.betas[i] * (dot3(x, m) - 1.0));
    const S w = layer.etas[i] * e;
    axpy3(a, w, m);
    wb[i] = w * layer.betas[i];
  }
  const S xa = dot3(x, a);
  V3<S> v = a;
  axpy3(v, -xa, x);
  const ArcTerms<S> arc = arc_terms(dot3(v, v));

  V3<S> out{arc.cos_n * x[0], arc.cos_n * x[1], arc.cos_n * x[2]};
  axpy3(out, arc.sinc_n, v);

  const auto frame = frame_at(x);
  std::array<V3<S>, 2> dT;
  for (int b = 0; b < 2; ++b) {
    const V3<S>& u = frame[b];
    V3<S> da{S(0.0), S(0.0), S(0.0)};
    for (std::size_t i = 0; i < p; ++i) {
      const V3<S>& m = layer.centers[i];
      axpy3(da, wb[i] * dot3(m, u), m);
    }
    V3<S> dv = da;
    axpy3(dv, -(dot3(u, a) + dot3(x, da)), x);
    axpy3(dv, -xa, u);
    const S vdv = dot3(v, dv);
    V3<S> d{S(0.0), S(0.0), S(0.0)};
    axpy3(d, -(arc.sinc_n * vdv), x);
    axpy3(d, arc.cos_n, u);
    axpy3(d, arc.b_n * vdv, v);
    axpy3(d, arc.sinc_n, dv);
    dT[b] = d;
  }
  const S det = dot3(out, cross3(dT[0], dT[1]));
  if (!(std::abs(value_of(det)) >= kDegenerateDet)) {
    throw DegenerateJacobian("layer Jacobian determinant vanished (|det| = " +
                             std::to_string(std::abs(value_of(det))) + ")");
  }
  return {normalized3(out), log(abs(det))};
}

// Constrained parameters from unconstrained ones:
//   beta = cap * tanh(softplus(r) / cap), center = r / |r|, eta = softmax(r).
template <typename S>
S softplus(const S& r) {
  using std::exp;
  using std::log1p;
  if (value_of(r) > 0.0) return r + log1p(exp(-r));
  return log1p(exp(r));
}

template <typename S>
S decode_beta(const S& raw, double cap) {
  using std::tanh;
  return cap * tanh(softplus(raw) / cap);
}

template <typename S>
void softmax_into(std::span<const S> raw, std::span<S> out) {
  using std::exp;
  double shift = value_of(raw[0]);
  for (const S& r : raw) shift = std::max(shift, value_of(r));
  S total(0.0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = exp(raw[i] - shift);
    total += out[i];
  }
  for (auto& o : out) o = o / total;
}

}  // namespace detail
}  // namespace sphereflow
