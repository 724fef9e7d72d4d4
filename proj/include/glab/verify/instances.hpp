#pragma once

// Seeded random instances for the property suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "glab/generator.hpp"
#include "glab/gexp.hpp"
#include "glab/lattice.hpp"
#include "glab/process.hpp"

namespace glab::inst {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline std::vector<double> random_leaves(const Lattice& L, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(L.leaf_count());
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

/// Binomial, trinomial or a two-factor binomial product.
inline LatticePtr random_lattice(Rng& rng, int max_binomial, int max_trinomial, bool allow_product = true) {
  const int kind = pick(rng, 0, allow_product ? 2 : 1);
  const double horizon = uniform(rng, 0.5, 1.5);
  if (kind == 0) return build_binomial(pick(rng, 1, max_binomial), horizon);
  if (kind == 1) return build_trinomial(pick(rng, 1, max_trinomial), horizon);
  auto f = build_binomial(pick(rng, 1, std::max(1, std::min(max_binomial, 3))), horizon);
  return build_product({f, f});
}

/// Largest y-Lipschitz constant the implicit step accepts on this grid.
inline double safe_ly(const Lattice& L, double want = 1.0) { return std::min(want, 0.45 / L.dt()); }
/// Largest z-Lipschitz constant keeping the linearization tilt positive.
inline double safe_lz(const Lattice& L, double want = 1.0) {
  double m = 0.0;
  for (int c = 0; c < L.branching(); ++c) {
    double s = 0.0;
    for (double x : L.increment(L.root(), c)) s += x * x;
    m = std::max(m, std::sqrt(s));
  }
  return std::min(want, 0.9 / m);
}

/// Random driver from the catalog with |lip_y| <= ly, lip_z <= lz.
inline Generator random_generator(Rng& rng, const Lattice& L, double ly = 1.0, double lz = 1.0) {
  const int d = L.dimension();
  switch (pick(rng, 0, 5)) {
    case 0: return gen::zero();
    case 1: return gen::constant(uniform(rng, -1, 1));
    case 2: {
      std::vector<double> b(d);
      for (double& x : b) x = uniform(rng, -lz, lz) / std::sqrt(static_cast<double>(d));
      return gen::linear(uniform(rng, -ly, ly), b);
    }
    case 3: return gen::discount(uniform(rng, 0, ly));
    case 4: return gen::abs_z(uniform(rng, -lz, lz));
    default: {
      const std::size_t m = L.interior_count();
      std::vector<double> a(m), b(m * d), c(m);
      for (std::size_t i = 0; i < m; ++i) {
        a[i] = uniform(rng, -ly, ly);
        c[i] = uniform(rng, -0.5, 0.5);
        for (int k = 0; k < d; ++k) b[i * d + k] = uniform(rng, -lz, lz) / std::sqrt(static_cast<double>(d));
      }
      return gen::tabulated(a, b, c);
    }
  }
}

/// A random vector orthogonal, under p, to constants and to every driver
/// component (zero on complete nodes).
inline std::vector<double> orthogonal_noise(const Lattice& L, const NodeId& n, Rng& rng, double scale) {
  const int b = L.branching(), d = L.dimension();
  auto e = L.edges(n);
  std::vector<std::vector<double>> basis;
  basis.push_back(std::vector<double>(b, 1.0));
  for (int a = 0; a < d; ++a) {
    std::vector<double> w(b);
    for (int c = 0; c < b; ++c) w[c] = e.increments[c * d + a];
    basis.push_back(std::move(w));
  }
  auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (int c = 0; c < b; ++c) s += e.probs[c] * u[c] * v[c];
    return s;
  };
  // Gram-Schmidt on the span, then strip it from a random vector.
  std::vector<std::vector<double>> ortho;
  for (auto v : basis) {
    for (const auto& o : ortho) {
      const double k = dot(v, o);
      for (int c = 0; c < b; ++c) v[c] -= k * o[c];
    }
    const double nv = std::sqrt(dot(v, v));
    if (nv > 1e-12) {
      for (double& x : v) x /= nv;
      ortho.push_back(std::move(v));
    }
  }
  std::vector<double> r(b);
  for (double& x : r) x = uniform(rng, -scale, scale);
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& o : ortho) {
      const double k = dot(r, o);
      for (int c = 0; c < b; ++c) r[c] -= k * o[c];
    }
  if (static_cast<int>(ortho.size()) == b) std::fill(r.begin(), r.end(), 0.0);
  return r;
}

/// A process built forward from chosen parts:
///   right_k = X_k - jump_k,
///   X_{k+1,i} = right_k - g(right_k, Z_k) dt - dA_k + Z_k.dW_i + dN_i.
struct ForwardInstance {
  LatticePtr lattice;
  Generator g;
  LadlagProcess X;
  std::vector<double> Z, dA, jump, dN;
};

struct ForwardOptions {
  double z_scale = 1.0;
  double a_scale = 0.3;
  double a_zero_prob = 0.3;   // chance that dA_k = 0 at a node
  double n_scale = 0.3;
  double jump_prob = 0.0;
  double jump_scale = 0.5;
  double x0_lo = -1.0, x0_hi = 1.0;
};

inline ForwardInstance forward_construct(const LatticePtr& lat, const Generator& g, Rng& rng,
                                         const ForwardOptions& o = {}) {
  const Lattice& L = *lat;
  const int d = L.dimension(), b = L.branching();
  ForwardInstance f{lat, g, LadlagProcess(lat), std::vector<double>(L.interior_count() * d),
                    std::vector<double>(L.interior_count()), std::vector<double>(L.interior_count(), 0.0),
                    std::vector<double>(L.interior_count() * b)};
  f.X.value(L.root()) = uniform(rng, o.x0_lo, o.x0_hi);
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    for (int a = 0; a < d; ++a) f.Z[i * d + a] = uniform(rng, -o.z_scale, o.z_scale);
    f.dA[i] = uniform(rng, 0, 1) < o.a_zero_prob ? 0.0 : uniform(rng, 0, o.a_scale);
    if (o.jump_prob > 0 && uniform(rng, 0, 1) < o.jump_prob) f.jump[i] = uniform(rng, 0, o.jump_scale);
    auto nn = orthogonal_noise(L, n, rng, o.n_scale);
    std::copy(nn.begin(), nn.end(), f.dN.begin() + i * b);
    const double r = f.X.value(n) - f.jump[i];
    f.X.right_value(n) = r;
    const GenPoint at{n.depth, L.grid().time(n.depth), i};
    std::span<const double> z(f.Z.data() + i * d, d);
    const double base = r - g(at, r, z) * L.dt() - f.dA[i];
    for (int c = 0; c < b; ++c) {
      double v = base + f.dN[i * b + c];
      auto dw = L.increment(n, c);
      for (int a = 0; a < d; ++a) v += z[a] * dw[a];
      f.X.value(L.child(n, c)) = v;
    }
  }
  return f;
}

}  // namespace glab::inst
