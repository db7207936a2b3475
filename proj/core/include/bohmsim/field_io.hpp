#pragma once

#include <string>

#include "bohmsim/grid.hpp"

namespace bohmsim {

// CSV snapshot, header "x,re,im", one row per node.
void write_field_csv(const ComplexField1D& field, const std::string& path);

// Compact binary dump.  Layout (little-endian throughout):
//   bytes 0..7   magic "BSFLD1D\0"
//   u32          format version (1)
//   u64          n
//   f64          x_min
//   f64          dx
//   n × (f64 re, f64 im)
void write_field_binary(const ComplexField1D& field, const std::string& path);
ComplexField1D read_field_binary(const std::string& path);

// 2D variant, magic "BSFLD2D\0"; header carries n1, n2, x1_min, dx1, x2_min,
// dx2 and the amplitude matrix is axis1-major.
void write_field_binary(const ComplexField2D& field, const std::string& path);
ComplexField2D read_field_binary_2d(const std::string& path);

}  // namespace bohmsim
