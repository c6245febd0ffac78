#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gevrey/errors.hpp"
#include "gevrey/spectral_field.hpp"

namespace gevrey::io {

// CSV snapshot layout: header "j1,...,jn,re,im", then one row per retained
// mode in lattice order. Values use 17 significant digits so a round trip is
// bit-exact.
inline void write_snapshot_csv(std::ostream& os, const SpectralField& field) {
  const Lattice& lat = field.lattice();
  for (int i = 0; i < lat.n(); ++i) os << 'j' << (i + 1) << ',';
  os << "re,im\n";
  char buf[96];
  for (std::size_t f = 0; f < lat.size(); ++f) {
    for (int i = 0; i < lat.n(); ++i) os << lat.component(f, i) << ',';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", field[f].real(), field[f].imag());
    os << buf;
  }
}

inline void write_snapshot_csv(const std::string& path, const SpectralField& field) {
  std::ofstream os(path);
  if (!os) throw Error("snapshot: cannot open " + path + " for writing");
  write_snapshot_csv(os, field);
}

/// Parses a CSV snapshot. N is the largest |j_i| present; missing modes are zero.
/// The loaded field must be Hermitian-symmetric.
inline SpectralField read_snapshot_csv(std::istream& is, int m) {
  std::string line;
  if (!std::getline(is, line)) throw ParameterError("snapshot: empty input");
  const auto columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  const int n = columns - 2;
  if (n < 1 || line.rfind("re,im") == std::string::npos)
    throw ParameterError("snapshot: header must be j1,...,jn,re,im");
  struct Row {
    std::vector<int> j;
    cplx value;
  };
  std::vector<Row> rows;
  int N = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Row r{std::vector<int>(static_cast<std::size_t>(n)), {}};
    double re = 0.0;
    double im = 0.0;
    for (auto& c : r.j) ls >> c;
    ls >> re >> im;
    if (!ls) throw ParameterError("snapshot: malformed row '" + line + "'");
    for (int c : r.j) N = std::max(N, std::abs(c));
    r.value = {re, im};
    rows.push_back(std::move(r));
  }
  SpectralField field(Lattice(n, std::min(m, n), std::max(N, 1)));
  for (const auto& r : rows) field[field.lattice().index(r.j)] = r.value;
  if (!field.is_real()) throw SymmetryError("snapshot: loaded field is not Hermitian-symmetric");
  return field;
}

inline SpectralField read_snapshot_csv(const std::string& path, int m) {
  std::ifstream is(path);
  if (!is) throw Error("snapshot: cannot open " + path);
  return read_snapshot_csv(is, m);
}

// Binary layout (little-endian host order): 8-byte magic "GVSNAP01", int32 n,
// int32 m, int32 N, then size() pairs of float64 (re, im) in lattice order.
inline constexpr char kBinaryMagic[9] = "GVSNAP01";

inline void write_snapshot_binary(std::ostream& os, const SpectralField& field) {
  const Lattice& lat = field.lattice();
  os.write(kBinaryMagic, 8);
  const std::int32_t header[3] = {lat.n(), lat.m(), lat.N()};
  os.write(reinterpret_cast<const char*>(header), sizeof header);
  for (std::size_t f = 0; f < lat.size(); ++f) {
    const double pair[2] = {field[f].real(), field[f].imag()};
    os.write(reinterpret_cast<const char*>(pair), sizeof pair);
  }
}

inline SpectralField read_snapshot_binary(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kBinaryMagic, 8) != 0) throw ParameterError("snapshot: bad binary magic");
  std::int32_t header[3];
  is.read(reinterpret_cast<char*>(header), sizeof header);
  if (!is) throw ParameterError("snapshot: truncated binary header");
  SpectralField field(Lattice(header[0], header[1], header[2]));
  for (std::size_t f = 0; f < field.size(); ++f) {
    double pair[2];
    is.read(reinterpret_cast<char*>(pair), sizeof pair);
    if (!is) throw ParameterError("snapshot: truncated binary payload");
    field[f] = {pair[0], pair[1]};
  }
  if (!field.is_real()) throw SymmetryError("snapshot: loaded field is not Hermitian-symmetric");
  return field;
}

}  // namespace gevrey::io
