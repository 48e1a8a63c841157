#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvrank/rng.hpp"
#include "mvrank/sobol_directions.hpp"

// Rank-target point sets on [0,1]^d: three low-discrepancy constructions
// plus seeded i.i.d. uniforms, and an anchored-box star-discrepancy
// estimator used by the test suite.

namespace mvrank::lds {

enum class SeqKind { sobol, halton, hammersley, uniform };

inline const char* to_string(SeqKind k) {
  switch (k) {
    case SeqKind::sobol: return "sobol";
    case SeqKind::halton: return "halton";
    case SeqKind::hammersley: return "hammersley";
    case SeqKind::uniform: return "uniform";
  }
  return "?";
}

inline SeqKind seq_kind_from_string(const std::string& s) {
  if (s == "sobol") return SeqKind::sobol;
  if (s == "halton") return SeqKind::halton;
  if (s == "hammersley") return SeqKind::hammersley;
  if (s == "uniform") return SeqKind::uniform;
  throw std::invalid_argument("unknown sequence kind: '" + s +
                              "' (expected sobol|halton|hammersley|uniform)");
}

/// n points in [0,1]^d plus provenance. Points are pairwise distinct so
/// the downstream rank map is a bijection.
struct PointSet {
  Eigen::MatrixXd points;  // n x d
  SeqKind kind = SeqKind::sobol;
  std::optional<std::uint64_t> seed;  // uniform only
  std::uint32_t skip = 0;             // sobol only
  std::string table_id;               // sobol only

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

namespace detail {

// First 64 primes; bases for Halton / Hammersley radical inverses.
inline constexpr std::array<int, 64> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,
    43,  47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101,
    103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167,
    173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239,
    241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311};

inline double radical_inverse(std::uint64_t index, int base) {
  double inv_base = 1.0 / base;
  double scale = inv_base;
  double value = 0.0;
  while (index > 0) {
    value += static_cast<double>(index % base) * scale;
    index /= base;
    scale *= inv_base;
  }
  return value;
}

inline void require_counts(Eigen::Index n, Eigen::Index d) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("point set needs n >= 1 and d >= 1");
}

// Distinctness via lexicographic sort of row indices.
inline bool rows_distinct(const Eigen::MatrixXd& pts) {
  const Eigen::Index n = pts.rows();
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < pts.cols(); ++k) {
      if (pts(a, k) != pts(b, k)) return pts(a, k) < pts(b, k);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!row_less(order[i - 1], order[i])) return false;
  }
  return true;
}

inline void validate(const PointSet& ps) {
  require_counts(ps.size(), ps.dim());
  if ((ps.points.array() < 0.0).any() || (ps.points.array() > 1.0).any())
    throw std::runtime_error("point set has a coordinate outside [0,1]");
  if (!rows_distinct(ps.points))
    throw std::runtime_error("point set has duplicate points");
}

}  // namespace detail

/// Halton sequence: coordinate k of point i (1-based) is the radical
/// inverse of i in the k-th prime base.
inline PointSet halton(Eigen::Index n, Eigen::Index d) {
  detail::require_counts(n, d);
  if (d > static_cast<Eigen::Index>(detail::kPrimes.size()))
    throw std::invalid_argument("halton: d exceeds prime table (64)");
  PointSet ps;
  ps.kind = SeqKind::halton;
  ps.points.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k)
      ps.points(i, k) = detail::radical_inverse(i + 1, detail::kPrimes[k]);
  detail::validate(ps);
  return ps;
}

/// Sobol' sequence with Gray-code ordering, Joe-Kuo direction numbers,
/// 32-bit precision. `skip` drops the leading points; the default 1
/// removes the all-zeros point so coordinates stay usable as ranks.
inline PointSet sobol(Eigen::Index n, Eigen::Index d, std::uint32_t skip = 1) {
  detail::require_counts(n, d);
  if (d > static_cast<Eigen::Index>(detail::kSobolMaxDim))
    throw std::invalid_argument("sobol: d exceeds direction-number table (" +
                                std::to_string(detail::kSobolMaxDim) + ")");
  constexpr int kBits = 32;

  // Direction numbers v[k][bit], bit = 0..31.
  std::vector<std::array<std::uint32_t, kBits>> v(d);
  for (int bit = 0; bit < kBits; ++bit)
    v[0][bit] = 1u << (kBits - 1 - bit);  // van der Corput
  for (Eigen::Index k = 1; k < d; ++k) {
    const auto& dim = detail::kJoeKuoDims[k - 1];
    const int s = static_cast<int>(dim.s);
    std::vector<std::uint32_t> m(dim.m.begin(), dim.m.begin() + s);
    m.reserve(kBits);
    for (int j = s; j < kBits; ++j) {
      std::uint32_t mj = m[j - s] ^ (m[j - s] << s);
      for (int i = 1; i < s; ++i)
        if ((dim.a >> (s - 1 - i)) & 1u) mj ^= m[j - i] << i;
      m.push_back(mj);
    }
    for (int bit = 0; bit < kBits; ++bit)
      v[k][bit] = m[bit] << (kBits - 1 - bit);
  }

  PointSet ps;
  ps.kind = SeqKind::sobol;
  ps.skip = skip;
  ps.table_id = detail::kSobolTableId;
  ps.points.resize(n, d);
  std::vector<std::uint32_t> state(d, 0);
  Eigen::Index row = 0;
  const std::uint64_t total = static_cast<std::uint64_t>(n) + skip;
  for (std::uint64_t i = 0; i < total; ++i) {
    if (i > 0) {
      const int c = std::countr_one(i - 1);  // lowest zero bit of i-1
      for (Eigen::Index k = 0; k < d; ++k) state[k] ^= v[k][c];
    }
    if (i >= skip) {
      for (Eigen::Index k = 0; k < d; ++k)
        ps.points(row, k) = static_cast<double>(state[k]) * 0x1.0p-32;
      ++row;
    }
  }
  detail::validate(ps);
  return ps;
}

/// Hammersley set: first coordinate (i - 0.5)/n, remaining coordinates are
/// Halton radical inverses in the first d-1 prime bases.
inline PointSet hammersley(Eigen::Index n, Eigen::Index d) {
  detail::require_counts(n, d);
  if (d - 1 > static_cast<Eigen::Index>(detail::kPrimes.size()))
    throw std::invalid_argument("hammersley: d exceeds prime table + 1 (65)");
  PointSet ps;
  ps.kind = SeqKind::hammersley;
  ps.points.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    ps.points(i, 0) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    for (Eigen::Index k = 1; k < d; ++k)
      ps.points(i, k) = detail::radical_inverse(i + 1, detail::kPrimes[k - 1]);
  }
  detail::validate(ps);
  return ps;
}

/// Seeded i.i.d. uniforms on [0,1]^d.
inline PointSet uniform(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  detail::require_counts(n, d);
  PointSet ps;
  ps.kind = SeqKind::uniform;
  ps.seed = seed;
  ps.points.resize(n, d);
  auto stream = rng::Stream::substream(seed, {rng::tag(std::uint64_t{0x1d5u})});
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) ps.points(i, k) = stream.next_double();
  detail::validate(ps);
  return ps;
}

inline PointSet generate(SeqKind kind, Eigen::Index n, Eigen::Index d,
                         std::uint64_t uniform_seed = 0,
                         std::uint32_t sobol_skip = 1) {
  switch (kind) {
    case SeqKind::sobol: return sobol(n, d, sobol_skip);
    case SeqKind::halton: return halton(n, d);
    case SeqKind::hammersley: return hammersley(n, d);
    case SeqKind::uniform: return uniform(n, d, uniform_seed);
  }
  throw std::logic_error("unreachable");
}

/// Lower bound on the star discrepancy: sup over anchored boxes [0,t) with
/// corners restricted to point coordinates. Exact in d=1; for d >= 2 each
/// axis grid is thinned to at most `grid_resolution` candidate corners.
inline double star_discrepancy_estimate(const PointSet& ps,
                                        int grid_resolution = 32) {
  if (grid_resolution < 2)
    throw std::invalid_argument("grid_resolution must be >= 2");
  const Eigen::Index n = ps.size();
  const Eigen::Index d = ps.dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  if (d == 1) {
    std::vector<double> x(ps.points.col(0).data(), ps.points.col(0).data() + n);
    std::sort(x.begin(), x.end());
    double sup = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // box [0, x_i): i points weakly below, i+1 with the closed box
      sup = std::max(sup, x[i] - static_cast<double>(i) * inv_n);
      sup = std::max(sup, static_cast<double>(i + 1) * inv_n - x[i]);
    }
    return sup;
  }

  // Candidate corner values per axis: thinned sorted coordinates plus 1.
  std::vector<std::vector<double>> grid(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    std::vector<double> coords(ps.points.col(k).data(),
                               ps.points.col(k).data() + n);
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    auto& g = grid[k];
    if (static_cast<int>(coords.size()) <= grid_resolution - 1) {
      g = coords;
    } else {
      for (int j = 0; j < grid_resolution - 1; ++j) {
        const std::size_t pos = static_cast<std::size_t>(
            (static_cast<double>(j + 1) * coords.size()) / grid_resolution);
        g.push_back(coords[std::min(pos, coords.size() - 1)]);
      }
      g.erase(std::unique(g.begin(), g.end()), g.end());
    }
    g.push_back(1.0);
  }

  std::vector<std::size_t> idx(d, 0);
  double sup = 0.0;
  for (;;) {
    double volume = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) volume *= grid[k][idx[k]];
    Eigen::Index strict = 0, weak = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      bool in_strict = true, in_weak = true;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double c = ps.points(i, k), t = grid[k][idx[k]];
        in_strict = in_strict && (c < t);
        in_weak = in_weak && (c <= t);
      }
      strict += in_strict;
      weak += in_weak;
    }
    sup = std::max(sup, std::abs(static_cast<double>(strict) * inv_n - volume));
    sup = std::max(sup, std::abs(static_cast<double>(weak) * inv_n - volume));
    // odometer
    Eigen::Index k = 0;
    while (k < d && ++idx[k] == grid[k].size()) idx[k++] = 0;
    if (k == d) break;
  }
  return sup;
}

}  // namespace mvrank::lds
