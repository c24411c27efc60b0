#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qoesim/error.hpp"
#include "qoesim/text.hpp"

namespace qoesim {

using UserId = std::size_t;

/// Dense N x M matrix of per-user, per-site visit times. Row i holds user i.
class VisitMatrix {
 public:
  VisitMatrix() = default;
  VisitMatrix(std::size_t users, std::size_t sites, double horizon)
      : users_(users), sites_(sites), horizon_(horizon), t_(users * sites, 0.0) {}

  std::size_t users() const { return users_; }
  std::size_t sites() const { return sites_; }
  double horizon() const { return horizon_; }

  double operator()(UserId i, std::size_t j) const { return t_[i * sites_ + j]; }
  double& operator()(UserId i, std::size_t j) { return t_[i * sites_ + j]; }

  std::span<const double> row(UserId i) const { return {t_.data() + i * sites_, sites_}; }
  std::span<double> row(UserId i) { return {t_.data() + i * sites_, sites_}; }

  double row_total(UserId i) const {
    double s = 0.0;
    for (double v : row(i)) s += v;
    return s;
  }

  std::span<const double> data() const { return t_; }

  friend bool operator==(const VisitMatrix&, const VisitMatrix&) = default;

 private:
  std::size_t users_ = 0;
  std::size_t sites_ = 0;
  double horizon_ = 1.0;
  std::vector<double> t_;
};

// Text form: a "# visit-matrix N M T" header, then one comma-separated row per
// user. Values are written in shortest round-trip form, so reading back
// reproduces every double exactly.
inline void write_visit_matrix_text(std::ostream& out, const VisitMatrix& v) {
  out << "# visit-matrix " << v.users() << ' ' << v.sites() << ' ' << text::format_exact(v.horizon()) << '\n';
  for (UserId i = 0; i < v.users(); ++i) {
    const auto r = v.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out << ',';
      out << text::format_exact(r[j]);
    }
    out << '\n';
  }
}

// Binary form: 8-byte magic "QOEVM001", u64 N, u64 M, f64 T, then N*M f64
// row-major, all little-endian.
inline constexpr char kVisitMatrixMagic[8] = {'Q', 'O', 'E', 'V', 'M', '0', '0', '1'};

namespace detail {

template <class T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts not supported");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw InputError("visit matrix: truncated binary container");
  return value;
}

}  // namespace detail

inline void write_visit_matrix_binary(std::ostream& out, const VisitMatrix& v) {
  out.write(kVisitMatrixMagic, sizeof(kVisitMatrixMagic));
  detail::write_le<std::uint64_t>(out, v.users());
  detail::write_le<std::uint64_t>(out, v.sites());
  detail::write_le<double>(out, v.horizon());
  out.write(reinterpret_cast<const char*>(v.data().data()),
            static_cast<std::streamsize>(v.data().size() * sizeof(double)));
}

inline VisitMatrix read_visit_matrix(std::istream& in, const std::string& source = "<stream>") {
  char magic[sizeof(kVisitMatrixMagic)] = {};
  in.read(magic, sizeof(magic));
  if (in && std::memcmp(magic, kVisitMatrixMagic, sizeof(magic)) == 0) {
    const auto n = detail::read_le<std::uint64_t>(in);
    const auto m = detail::read_le<std::uint64_t>(in);
    const auto horizon = detail::read_le<double>(in);
    VisitMatrix v(n, m, horizon);
    for (UserId i = 0; i < n; ++i) {
      auto r = v.row(i);
      in.read(reinterpret_cast<char*>(r.data()), static_cast<std::streamsize>(m * sizeof(double)));
      if (!in) throw InputError(source + ": truncated binary visit matrix");
    }
    return v;
  }

  in.clear();
  in.seekg(0);
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty visit matrix file");
  const auto header = text::split(text::trim(line), ' ');
  if (header.size() != 5 || header[0] != "#" || header[1] != "visit-matrix")
    throw InputError(source + ": missing '# visit-matrix N M T' header");
  const auto n = text::parse_integer(header[2]);
  const auto m = text::parse_integer(header[3]);
  const auto horizon = text::parse_double(header[4]);
  if (!n || !m || !horizon || *n < 0 || *m <= 0 || *horizon <= 0.0)
    throw InputError(source + ": malformed visit matrix header");
  VisitMatrix v(static_cast<std::size_t>(*n), static_cast<std::size_t>(*m), *horizon);
  for (UserId i = 0; i < v.users(); ++i) {
    if (!std::getline(in, line))
      throw InputError(source + ": expected " + std::to_string(v.users()) + " rows, got " + std::to_string(i));
    const auto fields = text::split(text::trim(line), ',');
    if (fields.size() != v.sites())
      throw InputError(source + ": row " + std::to_string(i) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(v.sites()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto value = text::parse_double(fields[j]);
      if (!value || *value < 0.0)
        throw InputError(source + ": invalid visit time at row " + std::to_string(i) + ", column " + std::to_string(j));
      v(i, j) = *value;
    }
  }
  return v;
}

inline VisitMatrix load_visit_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open visit matrix file '" + path + "'");
  return read_visit_matrix(in, path);
}

/// Population average of each user's sorted (descending) visit-time shares.
/// Entry r is the mean share of the (r+1)-th most visited site.
inline std::vector<double> mean_rank_shares(const VisitMatrix& v) {
  std::vector<double> curve(v.sites(), 0.0);
  std::vector<double> sorted(v.sites());
  for (UserId i = 0; i < v.users(); ++i) {
    const auto r = v.row(i);
    const double total = v.row_total(i);
    std::copy(r.begin(), r.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    for (std::size_t k = 0; k < sorted.size(); ++k) curve[k] += sorted[k] / total;
  }
  if (v.users() > 0)
    for (double& c : curve) c /= static_cast<double>(v.users());
  return curve;
}

/// Mean fraction of each user's time spent in their k most visited sites.
inline double mean_top_k_share(const VisitMatrix& v, std::size_t k) {
  const auto curve = mean_rank_shares(v);
  double s = 0.0;
  for (std::size_t r = 0; r < std::min(k, curve.size()); ++r) s += curve[r];
  return s;
}

}  // namespace qoesim
