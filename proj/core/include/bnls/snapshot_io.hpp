#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>

#include "bnls/evolution.hpp"
#include "bnls/radial.hpp"

namespace bnls {

/// Malformed, truncated or unsupported snapshot file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Field file layout, all little-endian:
///
///   char[8]  magic "BNLSFLD\0"
///   u32      version (1: uniform half-integer mesh, 2: explicit radii)
///   i32      d
///   u64      N
///   f64      r_max, sigma, t
///   v2 only: f64 focusing, level, center, then N f64 radii
///   N x (f64 re, f64 im)
inline constexpr std::uint32_t kFieldFormatUniform = 1;
inline constexpr std::uint32_t kFieldFormatRadii = 2;

struct FieldFile {
    ComplexField field;
    double sigma = 0.0;
    double t = 0.0;
};

/// Writes a version 1 file for a field on a uniform RadialGrid.
void write_field(const std::filesystem::path& path, const ComplexField& field, double sigma, double t = 0.0);
/// Reads a version 1 file. Throws FormatError for anything else.
FieldFile read_field(const std::filesystem::path& path);

/// Writes a version 2 file carrying the node radii and focusing metadata.
void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
/// Reads either version; a version 1 file gets its uniform radii filled in.
Snapshot read_snapshot(const std::filesystem::path& path);

/// Text twin with header "rho,re,im", values printed round-trip exact.
void write_csv(const std::filesystem::path& path, std::span<const double> rho, std::span<const cplx> values);

}  // namespace bnls
