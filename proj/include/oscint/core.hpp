#pragma once

// Core value types for the oscillatory integrator library: the two
// realizations of the skew structure J (scalar imaginary unit on complex
// coefficients, 2x2 block symplectic action on real pairs), coefficient
// blocks, two-component twisted states, and the diagonal spectral basis.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstring>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace oscint {

inline constexpr double pi = 3.141592653589793238462643383279502884;

namespace detail {

/// Minimal vector with inline storage for small sizes, restricted to
/// trivially copyable element types. Low-dimensional problems keep every
/// temporary on the stack, which the innermost scheme loops rely on.
template <class T, std::size_t InlineN = 4>
class SmallVec {
  static_assert(std::is_trivially_copyable_v<T>);

 public:
  SmallVec() = default;
  explicit SmallVec(std::size_t n) { resize_fresh(n); }
  SmallVec(const SmallVec& o) { assign_from(o.ptr_, o.n_); }
  SmallVec(SmallVec&& o) noexcept { steal(o); }
  SmallVec& operator=(const SmallVec& o) {
    if (this != &o) assign_from(o.ptr_, o.n_);
    return *this;
  }
  SmallVec& operator=(SmallVec&& o) noexcept {
    if (this != &o) {
      release();
      steal(o);
    }
    return *this;
  }
  ~SmallVec() { release(); }

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] T* data() { return ptr_; }
  [[nodiscard]] const T* data() const { return ptr_; }
  [[nodiscard]] T& operator[](std::size_t k) { return ptr_[k]; }
  [[nodiscard]] const T& operator[](std::size_t k) const { return ptr_[k]; }
  [[nodiscard]] T* begin() { return ptr_; }
  [[nodiscard]] T* end() { return ptr_ + n_; }
  [[nodiscard]] const T* begin() const { return ptr_; }
  [[nodiscard]] const T* end() const { return ptr_ + n_; }

 private:
  void resize_fresh(std::size_t n) {
    ptr_ = (n <= InlineN) ? buf_.data() : new T[n];
    n_ = n;
    std::memset(static_cast<void*>(ptr_), 0, n * sizeof(T));
  }
  void assign_from(const T* src, std::size_t n) {
    if (n != n_) {
      release();
      ptr_ = (n <= InlineN) ? buf_.data() : new T[n];
      n_ = n;
    }
    if (n) std::memcpy(static_cast<void*>(ptr_), src, n * sizeof(T));
  }
  void steal(SmallVec& o) {
    if (o.ptr_ == o.buf_.data()) {
      ptr_ = buf_.data();
      n_ = o.n_;
      if (n_) std::memcpy(static_cast<void*>(ptr_), o.ptr_, n_ * sizeof(T));
    } else {
      ptr_ = o.ptr_;
      n_ = o.n_;
      o.ptr_ = o.buf_.data();
      o.n_ = 0;
    }
  }
  void release() {
    if (ptr_ != buf_.data()) delete[] ptr_;
    ptr_ = buf_.data();
    n_ = 0;
  }

  std::array<T, InlineN> buf_{};
  T* ptr_ = buf_.data();
  std::size_t n_ = 0;
};

}  // namespace detail

// ============================================================
// Coefficient types
// ============================================================

/// One real pair (a, b). The symplectic block acts as J(a, b) = (b, -a),
/// so J^2 = -I and J is an isometry.
struct PairCoeff {
  double a = 0.0;
  double b = 0.0;
};

[[nodiscard]] inline PairCoeff operator+(PairCoeff x, PairCoeff y) {
  return {x.a + y.a, x.b + y.b};
}
[[nodiscard]] inline PairCoeff operator-(PairCoeff x, PairCoeff y) {
  return {x.a - y.a, x.b - y.b};
}
[[nodiscard]] inline PairCoeff operator-(PairCoeff x) { return {-x.a, -x.b}; }
[[nodiscard]] inline PairCoeff operator*(double s, PairCoeff x) {
  return {s * x.a, s * x.b};
}

using Cplx = std::complex<double>;

/// Squared modulus, overloaded for every coefficient type.
[[nodiscard]] inline double abs2(double x) { return x * x; }
[[nodiscard]] inline double abs2(Cplx z) {
  return z.real() * z.real() + z.imag() * z.imag();
}
[[nodiscard]] inline double abs2(PairCoeff x) { return x.a * x.a + x.b * x.b; }

/// Real inner product, overloaded per coefficient type.
[[nodiscard]] inline double rdot(double x, double y) { return x * y; }
[[nodiscard]] inline double rdot(Cplx x, Cplx y) {
  return x.real() * y.real() + x.imag() * y.imag();
}
[[nodiscard]] inline double rdot(PairCoeff x, PairCoeff y) {
  return x.a * y.a + x.b * y.b;
}

// ============================================================
// J realizations
// ============================================================

/// J as multiplication by the imaginary unit on complex coefficients.
struct ComplexJ {
  using Coeff = Cplx;
  [[nodiscard]] static Coeff apply_j(Coeff z) { return {-z.imag(), z.real()}; }
};

/// J as the canonical symplectic block on real pairs: J(a, b) = (b, -a).
struct SymplecticJ {
  using Coeff = PairCoeff;
  [[nodiscard]] static Coeff apply_j(Coeff x) { return {x.b, -x.a}; }
};

// ============================================================
// Coefficient blocks (one copy of the underlying space)
// ============================================================

template <class C>
struct Block {
  detail::SmallVec<C> coeff;

  Block() = default;
  explicit Block(std::size_t n) : coeff(n) {}
  explicit Block(const std::vector<C>& values) : coeff(values.size()) {
    for (std::size_t k = 0; k < values.size(); ++k) coeff[k] = values[k];
  }

  [[nodiscard]] std::size_t size() const { return coeff.size(); }
  [[nodiscard]] C& operator[](std::size_t k) { return coeff[k]; }
  [[nodiscard]] const C& operator[](std::size_t k) const { return coeff[k]; }

  Block& operator+=(const Block& o) {
    require_same_size(o);
    for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] = coeff[k] + o.coeff[k];
    return *this;
  }
  Block& operator-=(const Block& o) {
    require_same_size(o);
    for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] = coeff[k] - o.coeff[k];
    return *this;
  }
  Block& operator*=(double s) {
    for (auto& x : coeff) x = s * x;
    return *this;
  }

  /// this += s * o, the one fused update the quadrature loops need.
  Block& axpy(double s, const Block& o) {
    require_same_size(o);
    for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] = coeff[k] + s * o.coeff[k];
    return *this;
  }

 private:
  void require_same_size(const Block& o) const {
    if (coeff.size() != o.coeff.size())
      throw std::invalid_argument("Block: size mismatch (" +
                                  std::to_string(coeff.size()) + " vs " +
                                  std::to_string(o.coeff.size()) + ")");
  }
};

template <class C>
[[nodiscard]] Block<C> operator+(Block<C> x, const Block<C>& y) {
  x += y;
  return x;
}
template <class C>
[[nodiscard]] Block<C> operator-(Block<C> x, const Block<C>& y) {
  x -= y;
  return x;
}
template <class C>
[[nodiscard]] Block<C> operator*(double s, Block<C> x) {
  x *= s;
  return x;
}

template <class C>
[[nodiscard]] double norm_sq(const Block<C>& x) {
  double s = 0.0;
  for (const auto& v : x.coeff) s += abs2(v);
  return s;
}
template <class C>
[[nodiscard]] double norm(const Block<C>& x) {
  return std::sqrt(norm_sq(x));
}

// ============================================================
// Two-component twisted state w = (u, v)
// ============================================================

template <class JP>
struct State {
  using Coeff = typename JP::Coeff;
  Block<Coeff> u;
  Block<Coeff> v;

  State() = default;
  explicit State(std::size_t n) : u(n), v(n) {}
  State(Block<Coeff> uu, Block<Coeff> vv) : u(std::move(uu)), v(std::move(vv)) {
    if (u.size() != v.size())
      throw std::invalid_argument("State: component size mismatch");
  }

  [[nodiscard]] std::size_t size() const { return u.size(); }

  State& operator+=(const State& o) {
    u += o.u;
    v += o.v;
    return *this;
  }
  State& operator-=(const State& o) {
    u -= o.u;
    v -= o.v;
    return *this;
  }
  State& operator*=(double s) {
    u *= s;
    v *= s;
    return *this;
  }
  State& axpy(double s, const State& o) {
    u.axpy(s, o.u);
    v.axpy(s, o.v);
    return *this;
  }
};

template <class JP>
[[nodiscard]] State<JP> operator+(State<JP> x, const State<JP>& y) {
  x += y;
  return x;
}
template <class JP>
[[nodiscard]] State<JP> operator-(State<JP> x, const State<JP>& y) {
  x -= y;
  return x;
}
template <class JP>
[[nodiscard]] State<JP> operator*(double s, State<JP> x) {
  x *= s;
  return x;
}

template <class JP>
[[nodiscard]] double norm_sq(const State<JP>& w) {
  return norm_sq(w.u) + norm_sq(w.v);
}
template <class JP>
[[nodiscard]] double norm(const State<JP>& w) {
  return std::sqrt(norm_sq(w));
}

[[nodiscard]] inline double norm(double x) { return std::abs(x); }
[[nodiscard]] inline double norm(Cplx z) { return std::abs(z); }

// ============================================================
// Spectral basis
// ============================================================

/// Eigenvalue list of the nonnegative diagonal operator L, one entry per
/// mode. A mode is one J-irreducible component: a complex coefficient for
/// ComplexJ, a real pair for SymplecticJ. The list is treated as exact;
/// truncation is the caller's responsibility.
class SpectralBasis {
 public:
  SpectralBasis() = default;
  explicit SpectralBasis(std::vector<double> eigenvalues)
      : lambda_(std::move(eigenvalues)) {
    for (std::size_t k = 0; k < lambda_.size(); ++k) {
      if (!(lambda_[k] >= 0.0))
        throw std::domain_error("SpectralBasis: eigenvalue " +
                                std::to_string(k) + " is negative or NaN");
    }
  }

  [[nodiscard]] std::size_t size() const { return lambda_.size(); }
  [[nodiscard]] double eigenvalue(std::size_t k) const { return lambda_[k]; }
  [[nodiscard]] const std::vector<double>& eigenvalues() const { return lambda_; }

 private:
  std::vector<double> lambda_;
};

}  // namespace oscint
