#include "blockpursuit/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace blockpursuit::io {

namespace {

double parse_real(std::string_view s, const std::string& token)
{
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  double v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty())
    throw IoError("malformed numeric entry '" + token + "'");
  return v;
}

double parse_imag_coefficient(std::string_view s, const std::string& token)
{
  if (s.empty() || s == "+")
    return 1.0;
  if (s == "-")
    return -1.0;
  return parse_real(s, token);
}

template <typename T>
T to_little(T v)
{
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v)
{
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in)
{
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw IoError("binary matrix: unexpected end of data");
  return to_little(v);
}

} // namespace

cplx parse_complex(const std::string& token)
{
  std::string_view s(token);
  if (s.empty())
    throw IoError("empty numeric entry");
  if (s.back() != 'i' && s.back() != 'j')
    return {parse_real(s, token), 0.0};
  s.remove_suffix(1);
  // Split at the last sign that is not part of an exponent.
  std::size_t split = std::string_view::npos;
  for (std::size_t p = s.size(); p-- > 1;) {
    if ((s[p] == '+' || s[p] == '-') && s[p - 1] != 'e' && s[p - 1] != 'E') {
      split = p;
      break;
    }
  }
  if (split == std::string_view::npos)
    return {0.0, parse_imag_coefficient(s, token)};
  return {parse_real(s.substr(0, split), token), parse_imag_coefficient(s.substr(split), token)};
}

std::string format_complex(cplx z)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
  return buf;
}

MatrixXc read_text(std::istream& in)
{
  std::vector<std::vector<cplx>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    std::vector<cplx> row;
    while (ls >> tok) {
      if (row.empty() && tok.front() == '#')
        break;
      row.push_back(parse_complex(tok));
    }
    if (row.empty())
      continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("text matrix: row " + std::to_string(rows.size() + 1) + " has "
                    + std::to_string(row.size()) + " entries, expected "
                    + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw IoError("text matrix: no data");
  MatrixXc m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void write_text(std::ostream& out, const MatrixXc& m)
{
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j)
        out << ' ';
      out << format_complex(m(i, j));
    }
    out << '\n';
  }
}

MatrixXc read_binary(std::istream& in)
{
  const auto rows = get<std::uint32_t>(in);
  const auto cols = get<std::uint32_t>(in);
  MatrixXc m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const double re = get<double>(in);
      const double im = get<double>(in);
      m(i, j) = {re, im};
    }
  return m;
}

void write_binary(std::ostream& out, const MatrixXc& m)
{
  put(out, static_cast<std::uint32_t>(m.rows()));
  put(out, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      put(out, m(i, j).real());
      put(out, m(i, j).imag());
    }
}

Format guess_format(const std::string& path)
{
  auto ends_with = [&](std::string_view ext) {
    return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
  };
  return ends_with(".bin") || ends_with(".dat") ? Format::binary : Format::text;
}

MatrixXc read_matrix(const std::string& path) { return read_matrix(path, guess_format(path)); }

MatrixXc read_matrix(const std::string& path, Format format)
{
  std::ifstream in(path, format == Format::binary ? std::ios::binary : std::ios::in);
  if (!in)
    throw IoError("cannot open '" + path + "' for reading");
  return format == Format::binary ? read_binary(in) : read_text(in);
}

void write_matrix(const std::string& path, const MatrixXc& m)
{
  write_matrix(path, m, guess_format(path));
}

void write_matrix(const std::string& path, const MatrixXc& m, Format format)
{
  std::ofstream out(path, format == Format::binary ? std::ios::binary : std::ios::out);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  if (format == Format::binary)
    write_binary(out, m);
  else
    write_text(out, m);
  if (!out)
    throw IoError("write to '" + path + "' failed");
}

} // namespace blockpursuit::io
