#pragma once

// Conference matrices: zero diagonal, +-1 elsewhere, C^T C = (n-1) I.
// Orders q+1 come from the Paley construction over GF(q) (q an odd prime
// power); orders 2n come from doubling an antisymmetric order-n matrix.

#include <optional>
#include <string>
#include <vector>

#include "grainscope/common/error.hpp"

namespace grainscope::doe {

using IntMatrix = std::vector<std::vector<int>>;

namespace detail {

inline bool is_prime(int n) {
  if (n < 2) return false;
  for (int d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

/// q = p^k, or nullopt when q is not a prime power.
inline std::optional<std::pair<int, int>> prime_power(int q) {
  if (q < 2) return std::nullopt;
  for (int p = 2; p <= q; ++p) {
    if (q % p != 0) continue;
    if (!is_prime(p)) return std::nullopt;
    int k = 0, r = q;
    while (r % p == 0) {
      r /= p;
      ++k;
    }
    if (r != 1) return std::nullopt;
    return std::make_pair(p, k);
  }
  return std::nullopt;
}

/// GF(p^k) with elements encoded as base-p digit vectors (polynomials).
class GaloisField {
 public:
  GaloisField(int p, int k) : p_(p), k_(k), q_(1) {
    for (int i = 0; i < k; ++i) q_ *= p;
    if (k > 1) find_modulus();
  }
  int order() const { return q_; }

  int sub(int a, int b) const {
    int out = 0, place = 1;
    for (int i = 0; i < k_; ++i) {
      const int d = ((a % p_) - (b % p_) + p_) % p_;
      out += d * place;
      place *= p_;
      a /= p_;
      b /= p_;
    }
    return out;
  }

  int mul(int a, int b) const {
    if (k_ == 1) return (a * b) % p_;
    std::vector<int> x = digits(a), y = digits(b), prod(2 * k_ - 1, 0);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j) prod[i + j] = (prod[i + j] + x[i] * y[j]) % p_;
    // Reduce by the monic modulus of degree k.
    for (int d = 2 * k_ - 2; d >= k_; --d) {
      const int c = prod[d];
      if (!c) continue;
      for (int i = 0; i <= k_; ++i)
        prod[d - k_ + i] = ((prod[d - k_ + i] - c * modulus_[i]) % p_ + p_) % p_;
    }
    prod.resize(k_);
    return number(prod);
  }

  /// Quadratic character: 0 at 0, +1 on nonzero squares, -1 otherwise.
  std::vector<int> quadratic_character() const {
    std::vector<int> chi(q_, -1);
    chi[0] = 0;
    for (int x = 1; x < q_; ++x) chi[mul(x, x)] = 1;
    return chi;
  }

 private:
  std::vector<int> digits(int a) const {
    std::vector<int> d(k_);
    for (int i = 0; i < k_; ++i) {
      d[i] = a % p_;
      a /= p_;
    }
    return d;
  }
  int number(const std::vector<int>& d) const {
    int out = 0;
    for (int i = k_ - 1; i >= 0; --i) out = out * p_ + d[i];
    return out;
  }

  // Polynomial remainder of `a` modulo `b` (coefficients low to high).
  std::vector<int> poly_mod(std::vector<int> a, const std::vector<int>& b) const {
    const int db = static_cast<int>(b.size()) - 1;
    int inv = 1;
    while ((inv * b[db]) % p_ != 1) ++inv;
    for (int d = static_cast<int>(a.size()) - 1; d >= db; --d) {
      const int c = (a[d] * inv) % p_;
      if (!c) continue;
      for (int i = 0; i <= db; ++i) a[d - db + i] = ((a[d - db + i] - c * b[i]) % p_ + p_) % p_;
    }
    a.resize(db);
    return a;
  }

  bool irreducible(const std::vector<int>& f) const {
    // Trial division by every monic polynomial of degree 1..k/2.
    for (int deg = 1; deg <= k_ / 2; ++deg) {
      int count = 1;
      for (int i = 0; i < deg; ++i) count *= p_;
      for (int low = 0; low < count; ++low) {
        std::vector<int> g(deg + 1);
        int v = low;
        for (int i = 0; i < deg; ++i) {
          g[i] = v % p_;
          v /= p_;
        }
        g[deg] = 1;
        const auto r = poly_mod(f, g);
        bool zero = true;
        for (int c : r) zero = zero && c == 0;
        if (zero) return false;
      }
    }
    return true;
  }

  void find_modulus() {
    for (int low = 0; low < q_; ++low) {
      std::vector<int> f = digits(low);
      f.push_back(1);
      if (f[0] == 0) continue;
      if (irreducible(f)) {
        modulus_ = f;
        return;
      }
    }
    throw ConfigError("no irreducible polynomial found for GF(" + std::to_string(q_) + ")");
  }

  int p_, k_, q_;
  std::vector<int> modulus_;
};

inline IntMatrix paley(int q) {
  const auto pk = prime_power(q);
  if (!pk || pk->first == 2) throw ConfigError("Paley construction needs an odd prime power");
  GaloisField gf(pk->first, pk->second);
  const auto chi = gf.quadratic_character();
  const int n = q + 1;
  IntMatrix c(n, std::vector<int>(n, 0));
  const bool symmetric = q % 4 == 1;
  for (int j = 1; j < n; ++j) {
    c[0][j] = 1;
    c[j][0] = symmetric ? 1 : -1;
  }
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) c[a + 1][b + 1] = chi[gf.sub(a, b)];
  return c;
}

inline bool antisymmetric(const IntMatrix& s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (s[i][j] != -s[j][i]) return false;
  return true;
}

/// [[S, S+I], [S-I, -S]] for antisymmetric S of order n gives order 2n.
inline IntMatrix double_antisymmetric(const IntMatrix& s) {
  const std::size_t n = s.size();
  IntMatrix c(2 * n, std::vector<int>(2 * n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const int id = i == j ? 1 : 0;
      c[i][j] = s[i][j];
      c[i][j + n] = s[i][j] + id;
      c[i + n][j] = s[i][j] - id;
      c[i + n][j + n] = -s[i][j];
    }
  return c;
}

inline std::optional<IntMatrix> build_conference(int n) {
  if (n == 2) return IntMatrix{{0, 1}, {1, 0}};
  if (n < 2 || n % 2) return std::nullopt;
  if (auto pk = prime_power(n - 1); pk && pk->first != 2) return paley(n - 1);
  if (n % 4 == 0)
    if (auto half = build_conference(n / 2); half && antisymmetric(*half))
      return double_antisymmetric(*half);
  return std::nullopt;
}

}  // namespace detail

inline bool conference_order_supported(int n) { return detail::build_conference(n).has_value(); }

/// Throws ConfigError when no construction covers order n.
inline IntMatrix conference_matrix(int n) {
  auto c = detail::build_conference(n);
  if (!c)
    throw ConfigError("unsupported conference matrix order " + std::to_string(n) +
                      " (supply a custom design matrix instead)");
  return *c;
}

}  // namespace grainscope::doe
