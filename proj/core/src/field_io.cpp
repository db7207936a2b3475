#include "bohmsim/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "binary field dumps assume a little-endian host");

namespace bohmsim {

namespace {

constexpr char kMagic1D[8] = {'B', 'S', 'F', 'L', 'D', '1', 'D', '\0'};
constexpr char kMagic2D[8] = {'B', 'S', 'F', 'L', 'D', '2', 'D', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t get_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double get_f64(std::ifstream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void write_field_csv(const ComplexField1D& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
  out << "x,re,im\n";
  char line[96];
  for (std::size_t i = 0; i < field.grid.n; ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", field.grid.x(i),
                  field[i].real(), field[i].imag());
    out << line;
  }
}

void write_field_binary(const ComplexField1D& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_field_binary: cannot open " + path);
  out.write(kMagic1D, sizeof kMagic1D);
  put_u32(out, kVersion);
  put_u64(out, field.grid.n);
  put_f64(out, field.grid.x_min);
  put_f64(out, field.grid.dx());
  for (const auto& a : field.amplitudes) {
    put_f64(out, a.real());
    put_f64(out, a.imag());
  }
}

ComplexField1D read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_field_binary: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (std::memcmp(magic, kMagic1D, sizeof magic) != 0)
    throw std::runtime_error("read_field_binary: bad magic in " + path);
  if (get_u32(in) != kVersion) throw std::runtime_error("read_field_binary: bad version");
  const std::uint64_t n = get_u64(in);
  const double x_min = get_f64(in);
  const double dx = get_f64(in);
  ComplexField1D field(Grid1D(x_min, x_min + dx * static_cast<double>(n - 1), n));
  for (std::uint64_t i = 0; i < n; ++i) {
    const double re = get_f64(in);
    const double im = get_f64(in);
    field[i] = {re, im};
  }
  if (!in) throw std::runtime_error("read_field_binary: truncated file " + path);
  return field;
}

void write_field_binary(const ComplexField2D& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_field_binary: cannot open " + path);
  out.write(kMagic2D, sizeof kMagic2D);
  put_u32(out, kVersion);
  put_u64(out, field.grid.axis1.n);
  put_u64(out, field.grid.axis2.n);
  put_f64(out, field.grid.axis1.x_min);
  put_f64(out, field.grid.axis1.dx());
  put_f64(out, field.grid.axis2.x_min);
  put_f64(out, field.grid.axis2.dx());
  for (const auto& a : field.amplitudes) {
    put_f64(out, a.real());
    put_f64(out, a.imag());
  }
}

ComplexField2D read_field_binary_2d(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_field_binary_2d: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (std::memcmp(magic, kMagic2D, sizeof magic) != 0)
    throw std::runtime_error("read_field_binary_2d: bad magic in " + path);
  if (get_u32(in) != kVersion) throw std::runtime_error("read_field_binary_2d: bad version");
  const std::uint64_t n1 = get_u64(in);
  const std::uint64_t n2 = get_u64(in);
  const double x1_min = get_f64(in);
  const double dx1 = get_f64(in);
  const double x2_min = get_f64(in);
  const double dx2 = get_f64(in);
  Grid2D grid{Grid1D(x1_min, x1_min + dx1 * static_cast<double>(n1 - 1), n1),
              Grid1D(x2_min, x2_min + dx2 * static_cast<double>(n2 - 1), n2)};
  ComplexField2D field(grid);
  for (auto& a : field.amplitudes) {
    const double re = get_f64(in);
    const double im = get_f64(in);
    a = {re, im};
  }
  if (!in) throw std::runtime_error("read_field_binary_2d: truncated file " + path);
  return field;
}

}  // namespace bohmsim
