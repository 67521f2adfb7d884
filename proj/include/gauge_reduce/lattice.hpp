#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gauge_reduce/errors.hpp"

namespace gauge_reduce {

/// Periodic cubic lattice of dimension 1..3 with N sites per direction.
struct LatticeSpec {
  int dim = 1;
  int sites_per_dim = 2;
  double spacing = 1.0;

  void validate() const {
    if (dim < 1 || dim > 3) {
      throw std::invalid_argument("lattice dimension must be 1, 2 or 3, got " +
                                  std::to_string(dim));
    }
    if (sites_per_dim < 2) {
      throw std::invalid_argument("lattice needs at least 2 sites per direction, got " +
                                  std::to_string(sites_per_dim));
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
      throw std::invalid_argument("lattice spacing must be positive and finite");
    }
  }

  [[nodiscard]] std::size_t volume() const {
    std::size_t v = 1;
    for (int i = 0; i < dim; ++i) v *= static_cast<std::size_t>(sites_per_dim);
    return v;
  }

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

using Coords = std::array<int, 3>;

/// Site indexing and neighbour tables. Site x has coordinates (c0, c1, c2)
/// with index c0 + N*c1 + N^2*c2; direction i moves c_i.
class Lattice {
 public:
  explicit Lattice(LatticeSpec spec) : spec_(spec) {
    spec_.validate();
    volume_ = spec_.volume();
    forward_.resize(volume_ * static_cast<std::size_t>(spec_.dim));
    backward_.resize(volume_ * static_cast<std::size_t>(spec_.dim));
    for (std::size_t x = 0; x < volume_; ++x) {
      const Coords c = coords(x);
      for (int i = 0; i < spec_.dim; ++i) {
        Coords up = c;
        Coords down = c;
        up[i] = (c[i] + 1) % spec_.sites_per_dim;
        down[i] = (c[i] + spec_.sites_per_dim - 1) % spec_.sites_per_dim;
        forward_[x * spec_.dim + i] = site(up);
        backward_[x * spec_.dim + i] = site(down);
      }
    }
  }

  [[nodiscard]] const LatticeSpec& spec() const { return spec_; }
  [[nodiscard]] int dim() const { return spec_.dim; }
  [[nodiscard]] int extent() const { return spec_.sites_per_dim; }
  [[nodiscard]] std::size_t volume() const { return volume_; }
  [[nodiscard]] double spacing() const { return spec_.spacing; }
  /// spacing^s; the lattice image of d^s x and the inverse of the delta normalisation.
  [[nodiscard]] double cell_volume() const { return std::pow(spec_.spacing, spec_.dim); }

  [[nodiscard]] std::size_t site(const Coords& c) const {
    std::size_t x = 0;
    std::size_t stride = 1;
    for (int i = 0; i < spec_.dim; ++i) {
      x += static_cast<std::size_t>(c[i]) * stride;
      stride *= static_cast<std::size_t>(spec_.sites_per_dim);
    }
    return x;
  }

  [[nodiscard]] Coords coords(std::size_t x) const {
    Coords c{0, 0, 0};
    for (int i = 0; i < spec_.dim; ++i) {
      c[i] = static_cast<int>(x % spec_.sites_per_dim);
      x /= spec_.sites_per_dim;
    }
    return c;
  }

  [[nodiscard]] std::size_t forward(std::size_t x, int dir) const { return forward_[x * spec_.dim + dir]; }
  [[nodiscard]] std::size_t backward(std::size_t x, int dir) const { return backward_[x * spec_.dim + dir]; }

  /// Translation by `shift` lattice units, as a site permutation.
  [[nodiscard]] std::size_t translate(std::size_t x, const Coords& shift) const {
    Coords c = coords(x);
    for (int i = 0; i < spec_.dim; ++i) {
      c[i] = ((c[i] + shift[i]) % spec_.sites_per_dim + spec_.sites_per_dim) % spec_.sites_per_dim;
    }
    return site(c);
  }

 private:
  LatticeSpec spec_;
  std::size_t volume_ = 0;
  std::vector<std::size_t> forward_;
  std::vector<std::size_t> backward_;
};

enum class FieldKind { scalar, vector, doublet };

constexpr const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::scalar: return "scalar";
    case FieldKind::vector: return "vector";
    case FieldKind::doublet: return "doublet";
  }
  return "?";
}

/// Number of reals per site for each field kind (vector: one per direction).
constexpr std::size_t components_per_site(FieldKind k, int dim) {
  switch (k) {
    case FieldKind::scalar: return 1;
    case FieldKind::vector: return static_cast<std::size_t>(dim);
    case FieldKind::doublet: return 2;
  }
  return 0;
}

/// A real field on the lattice. Storage layout:
///   scalar  u(x)      -> values[x]
///   vector  A_i(x)    -> values[i*V + x]
///   doublet f^a(x)    -> values[2*x + a]
template <FieldKind Kind>
struct SiteField {
  static constexpr FieldKind kind = Kind;
  Eigen::VectorXd values;

  SiteField() = default;
  explicit SiteField(Eigen::VectorXd v) : values(std::move(v)) {}

  static SiteField zeros(const Lattice& lat) {
    return SiteField(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(expected_size(lat))));
  }
  static SiteField constant(const Lattice& lat, double c) {
    return SiteField(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(expected_size(lat)), c));
  }

  static std::size_t expected_size(const Lattice& lat) {
    return components_per_site(Kind, lat.dim()) * lat.volume();
  }

  [[nodiscard]] Eigen::Index size() const { return values.size(); }
  double& operator[](Eigen::Index i) { return values[i]; }
  double operator[](Eigen::Index i) const { return values[i]; }

  [[nodiscard]] bool matches(const Lattice& lat) const {
    return static_cast<std::size_t>(values.size()) == expected_size(lat);
  }
  [[nodiscard]] bool all_finite() const { return values.allFinite(); }

  SiteField& operator+=(const SiteField& o) { values += o.values; return *this; }
  SiteField& operator-=(const SiteField& o) { values -= o.values; return *this; }
  SiteField& operator*=(double s) { values *= s; return *this; }
  friend SiteField operator+(SiteField a, const SiteField& b) { return a += b; }
  friend SiteField operator-(SiteField a, const SiteField& b) { return a -= b; }
  friend SiteField operator*(double s, SiteField a) { return a *= s; }
  friend SiteField operator*(SiteField a, double s) { return a *= s; }
};

using SiteScalar = SiteField<FieldKind::scalar>;
using SiteVector = SiteField<FieldKind::vector>;
using SiteDoublet = SiteField<FieldKind::doublet>;

inline Eigen::Index vector_index(const Lattice& lat, int dir, std::size_t x) {
  return static_cast<Eigen::Index>(static_cast<std::size_t>(dir) * lat.volume() + x);
}
inline Eigen::Index doublet_index(std::size_t x, int a) {
  return static_cast<Eigen::Index>(2 * x + static_cast<std::size_t>(a));
}

namespace detail {
template <FieldKind K>
void require_matches(const Lattice& lat, const SiteField<K>& u, const char* what) {
  if (!u.matches(lat)) {
    throw std::invalid_argument(std::string(what) + ": " + to_string(K) + " field of length " +
                                std::to_string(u.size()) + " does not fit lattice of volume " +
                                std::to_string(lat.volume()));
  }
}
}  // namespace detail

// Difference operators. The gradient is the forward difference and the
// divergence the backward difference, so that divergence = -gradient^T under
// `inner` and divergence(gradient(u)) is exactly the 2s-point Laplacian.

inline SiteVector gradient(const Lattice& lat, const SiteScalar& u) {
  detail::require_matches(lat, u, "gradient");
  SiteVector out = SiteVector::zeros(lat);
  const double inv_h = 1.0 / lat.spacing();
  for (int i = 0; i < lat.dim(); ++i) {
    for (std::size_t x = 0; x < lat.volume(); ++x) {
      out[vector_index(lat, i, x)] = (u[static_cast<Eigen::Index>(lat.forward(x, i))] -
                                      u[static_cast<Eigen::Index>(x)]) * inv_h;
    }
  }
  return out;
}

inline SiteScalar divergence(const Lattice& lat, const SiteVector& v) {
  detail::require_matches(lat, v, "divergence");
  SiteScalar out = SiteScalar::zeros(lat);
  const double inv_h = 1.0 / lat.spacing();
  for (std::size_t x = 0; x < lat.volume(); ++x) {
    double acc = 0.0;
    for (int i = 0; i < lat.dim(); ++i) {
      acc += v[vector_index(lat, i, x)] - v[vector_index(lat, i, lat.backward(x, i))];
    }
    out[static_cast<Eigen::Index>(x)] = acc * inv_h;
  }
  return out;
}

inline SiteScalar laplacian(const Lattice& lat, const SiteScalar& u) {
  detail::require_matches(lat, u, "laplacian");
  SiteScalar out = SiteScalar::zeros(lat);
  const double inv_h2 = 1.0 / (lat.spacing() * lat.spacing());
  for (std::size_t x = 0; x < lat.volume(); ++x) {
    double acc = -2.0 * lat.dim() * u[static_cast<Eigen::Index>(x)];
    for (int i = 0; i < lat.dim(); ++i) {
      acc += u[static_cast<Eigen::Index>(lat.forward(x, i))] + u[static_cast<Eigen::Index>(lat.backward(x, i))];
    }
    out[static_cast<Eigen::Index>(x)] = acc * inv_h2;
  }
  return out;
}

inline void require_dense_size(const Lattice& lat) {
  if (lat.volume() > kMaxDenseSites) {
    throw SizeError("dense operators are limited to " + std::to_string(kMaxDenseSites) +
                    " sites, lattice has " + std::to_string(lat.volume()));
  }
}

/// (sV x V) matrix of `gradient`.
inline Eigen::MatrixXd gradient_matrix(const Lattice& lat) {
  require_dense_size(lat);
  const auto V = static_cast<Eigen::Index>(lat.volume());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(lat.dim() * V, V);
  const double inv_h = 1.0 / lat.spacing();
  for (int i = 0; i < lat.dim(); ++i) {
    for (std::size_t x = 0; x < lat.volume(); ++x) {
      const Eigen::Index row = vector_index(lat, i, x);
      g(row, static_cast<Eigen::Index>(lat.forward(x, i))) += inv_h;
      g(row, static_cast<Eigen::Index>(x)) -= inv_h;
    }
  }
  return g;
}

/// (V x sV) matrix of `divergence`; equals -gradient_matrix^T.
inline Eigen::MatrixXd divergence_matrix(const Lattice& lat) {
  require_dense_size(lat);
  const auto V = static_cast<Eigen::Index>(lat.volume());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(V, lat.dim() * V);
  const double inv_h = 1.0 / lat.spacing();
  for (std::size_t x = 0; x < lat.volume(); ++x) {
    for (int i = 0; i < lat.dim(); ++i) {
      d(static_cast<Eigen::Index>(x), vector_index(lat, i, x)) += inv_h;
      d(static_cast<Eigen::Index>(x), vector_index(lat, i, lat.backward(x, i))) -= inv_h;
    }
  }
  return d;
}

inline Eigen::MatrixXd laplacian_matrix(const Lattice& lat) {
  require_dense_size(lat);
  const auto V = static_cast<Eigen::Index>(lat.volume());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(V, V);
  const double inv_h2 = 1.0 / (lat.spacing() * lat.spacing());
  for (std::size_t x = 0; x < lat.volume(); ++x) {
    const auto r = static_cast<Eigen::Index>(x);
    l(r, r) -= 2.0 * lat.dim() * inv_h2;
    for (int i = 0; i < lat.dim(); ++i) {
      l(r, static_cast<Eigen::Index>(lat.forward(x, i))) += inv_h2;
      l(r, static_cast<Eigen::Index>(lat.backward(x, i))) += inv_h2;
    }
  }
  return l;
}

/// spacing^s * sum of componentwise products.
template <FieldKind K>
double inner(const Lattice& lat, const SiteField<K>& u, const SiteField<K>& v) {
  detail::require_matches(lat, u, "inner");
  detail::require_matches(lat, v, "inner");
  return lat.cell_volume() * u.values.dot(v.values);
}

/// Lattice translation of a field by `shift` sites: out(x + shift) = u(x).
template <FieldKind K>
SiteField<K> translate(const Lattice& lat, const SiteField<K>& u, const Coords& shift) {
  detail::require_matches(lat, u, "translate");
  SiteField<K> out = SiteField<K>::zeros(lat);
  const std::size_t per = components_per_site(K, lat.dim());
  for (std::size_t x = 0; x < lat.volume(); ++x) {
    const std::size_t y = lat.translate(x, shift);
    for (std::size_t c = 0; c < per; ++c) {
      if constexpr (K == FieldKind::vector) {
        out[vector_index(lat, static_cast<int>(c), y)] = u[vector_index(lat, static_cast<int>(c), x)];
      } else {
        out[static_cast<Eigen::Index>(per * y + c)] = u[static_cast<Eigen::Index>(per * x + c)];
      }
    }
  }
  return out;
}

}  // namespace gauge_reduce
