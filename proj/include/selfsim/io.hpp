#pragma once

// Text and binary interchange: a+bi literals, IFS JSON documents, measure
// and scan CSV, and the binary scan dump.

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/fourier.hpp"
#include "selfsim/measure.hpp"

namespace selfsim::io {

using nlohmann::json;

/// Shortest representation that round-trips; "nan", "inf", "-inf" otherwise.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DomainError("cannot parse number '" + std::string(s) + "'");
  return v;
}

/// Parses "a", "bi", "a+bi", "a-bi", "i", "-i" (no spaces needed, none significant).
inline Complex parse_complex(std::string_view text) {
  std::string s;
  for (char ch : text)
    if (ch != ' ') s.push_back(ch);
  if (s.empty()) throw DomainError("empty complex literal");
  if (s.back() != 'i' && s.back() != 'j') return {parse_double(s), 0.0};
  s.pop_back();
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  auto imag_part = [](std::string_view t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return parse_double(t);
  };
  if (split == std::string::npos) return {0.0, imag_part(s)};
  return {parse_double(std::string_view(s).substr(0, split)), imag_part(std::string_view(s).substr(split))};
}

inline std::string format_complex(Complex z) {
  std::string out = format_double(z.real());
  const double b = z.imag();
  out += (std::signbit(b) ? "-" : "+") + format_double(std::abs(b)) + "i";
  return out;
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) out.push_back(std::exchange(cur, {}));
    else cur.push_back(ch);
  }
  out.push_back(cur);
  return out;
}

inline std::vector<double> parse_real_list(std::string_view s) {
  std::vector<double> out;
  for (const auto& t : split_list(s)) out.push_back(parse_double(t));
  return out;
}

inline std::vector<Complex> parse_complex_list(std::string_view s) {
  std::vector<Complex> out;
  for (const auto& t : split_list(s)) out.push_back(parse_complex(t));
  return out;
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw DomainError("complex values must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json ifs_to_json(const IFSDescriptor& ifs) {
  json digits = json::array();
  for (const auto& w : ifs.digits()) digits.push_back(complex_json(w));
  json probs = json::array();
  for (double p : ifs.probs().values()) probs.push_back(p);
  return {{"lambda", complex_json(ifs.lambda())}, {"digits", digits}, {"probs", probs}};
}

inline IFSDescriptor ifs_from_json(const json& j) {
  if (!j.is_object() || !j.contains("lambda") || !j.contains("digits") || !j.contains("probs"))
    throw DomainError("IFS document needs lambda, digits and probs");
  std::vector<Complex> digits;
  for (const auto& d : j.at("digits")) digits.push_back(complex_from_json(d));
  std::vector<double> probs;
  for (const auto& p : j.at("probs")) {
    if (!p.is_number()) throw DomainError("probabilities must be numbers");
    probs.push_back(p.get<double>());
  }
  return IFSDescriptor(complex_from_json(j.at("lambda")), std::move(digits), ProbabilityVector(std::move(probs)));
}

inline void write_measure_csv(std::ostream& os, const DiscreteMeasure& mu) {
  os << "re,im,weight\n";
  for (const auto& a : mu.atoms())
    os << format_double(a.position.real()) << ',' << format_double(a.position.imag()) << ',' << format_double(a.weight) << '\n';
}

inline DiscreteMeasure read_measure_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("re,im,weight", 0) != 0) throw DomainError("measure CSV must start with re,im,weight");
  std::vector<Atom> atoms;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_list(line);
    if (f.size() != 3) throw DomainError("measure CSV rows need three fields");
    atoms.push_back({{parse_double(f[0]), parse_double(f[1])}, parse_double(f[2])});
  }
  return DiscreteMeasure(std::move(atoms));
}

inline void write_scan_csv(std::ostream& os, const ScanField& field) {
  os << "i,j,max_abs_muhat\n";
  for (const auto& c : field.cells) os << c.i << ',' << c.j << ',' << format_double(c.max_abs) << '\n';
}

inline constexpr std::array<char, 8> kScanMagic{'S', 'S', 'S', 'C', 'A', 'N', '0', '1'};

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, 8);
  std::array<char, 8> bytes{};
  for (int k = 0; k < 8; ++k) bytes[static_cast<std::size_t>(k)] = static_cast<char>((bits >> (8 * k)) & 0xffu);
  os.write(bytes.data(), 8);
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, 8> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), 8)) throw DomainError("truncated binary scan");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(k)]) << (8 * k);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace detail

/// 32-byte header (magic, T, k, cell count) followed by a dense row-major
/// grid of side 2 ceil(T) starting at cell (-ceil(T), -ceil(T)); cells
/// outside the disk hold -1.
inline void write_scan_binary(std::ostream& os, const ScanField& field) {
  const int lim = static_cast<int>(std::ceil(field.T));
  const auto side = static_cast<std::size_t>(2 * lim);
  std::vector<double> grid(side * side, -1.0);
  for (const auto& c : field.cells)
    grid[static_cast<std::size_t>(c.j + lim) * side + static_cast<std::size_t>(c.i + lim)] = c.max_abs;
  os.write(kScanMagic.data(), 8);
  detail::put_le(os, field.T);
  detail::put_le(os, static_cast<std::uint64_t>(field.subgrid_k));
  detail::put_le(os, static_cast<std::uint64_t>(field.cells.size()));
  for (double v : grid) detail::put_le(os, v);
}

inline ScanField read_scan_binary(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), 8) || magic != kScanMagic) throw DomainError("not a binary scan dump");
  ScanField field;
  field.T = detail::get_le<double>(is);
  field.subgrid_k = static_cast<int>(detail::get_le<std::uint64_t>(is));
  const auto count = detail::get_le<std::uint64_t>(is);
  const int lim = static_cast<int>(std::ceil(field.T));
  for (int j = -lim; j < lim; ++j)
    for (int i = -lim; i < lim; ++i) {
      const double v = detail::get_le<double>(is);
      if (v >= 0.0) field.cells.push_back({i, j, v});
    }
  if (field.cells.size() != count) throw DomainError("binary scan cell count mismatch");
  return field;
}

}  // namespace selfsim::io
