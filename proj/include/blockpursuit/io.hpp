#pragma once

#include <iosfwd>
#include <string>

#include "types.hpp"

namespace blockpursuit::io {

enum class Format { text, binary };

/// Picks binary for ".bin"/".dat" extensions, text otherwise.
Format guess_format(const std::string& path);

// Text: one row per line, whitespace-separated entries, complex entries as
// "a+bi" (also accepted: "a", "bi", "a-bi", "i", "-i"). Blank lines and lines
// starting with '#' are skipped.
MatrixXc read_text(std::istream& in);
void write_text(std::ostream& out, const MatrixXc& m);

// Binary: u32 rows, u32 cols (little-endian), then rows*cols (re, im) float64
// pairs in row-major order, little-endian.
MatrixXc read_binary(std::istream& in);
void write_binary(std::ostream& out, const MatrixXc& m);

MatrixXc read_matrix(const std::string& path);
MatrixXc read_matrix(const std::string& path, Format format);
void write_matrix(const std::string& path, const MatrixXc& m);
void write_matrix(const std::string& path, const MatrixXc& m, Format format);

/// Parses a single complex literal; throws IoError on malformed input.
cplx parse_complex(const std::string& token);
std::string format_complex(cplx z);

} // namespace blockpursuit::io
