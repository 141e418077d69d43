#pragma once

// Plain-text and binary writers for snapshots, density fields and tables.
// Numbers are printed with 17 significant digits so that identical inputs
// give identical bytes.
//
// Binary snapshot layout (little-endian throughout):
//   char[4]  magic "SOCS"
//   uint32   format version (1)
//   uint32   dimension d
//   float64  unit mass m
//   float64  time t
//   uint64   particle count n
//   float64  coordinates, n * d values, particle-major

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "superocc/core.hpp"
#include "superocc/occupation.hpp"
#include "superocc/particle_system.hpp"

namespace superocc {

/// Shortest round-trip-safe decimal form used by every text writer.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// One CSV line from already formatted cells.
inline void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

inline const char* axis_name(int k) {
    static constexpr std::array<const char*, 3> names = {"x", "y", "z"};
    return names[static_cast<std::size_t>(k)];
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

inline void write_snapshot_csv_header(std::ostream& os, int dim) {
    os << "step,t";
    for (int k = 0; k < dim; ++k) os << ',' << axis_name(k);
    os << '\n';
}

/// Rows "step,t,x[,y,z]", one per particle.
inline void write_snapshot_csv(std::ostream& os, const ParticleCloud& c, std::size_t step) {
    const std::string prefix = std::to_string(step) + ',' + fmt(c.time);
    for (std::size_t i = 0; i < c.count(); ++i) {
        os << prefix;
        for (double v : c.point(i)) os << ',' << fmt(v);
        os << '\n';
    }
}

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    auto u = std::bit_cast<U>(v);
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        bytes[i] = static_cast<char>(u & 0xFFu);
        u >>= 8;
    }
    os.write(bytes, sizeof bytes);
}

template <class T>
T get_le(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    unsigned char bytes[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof bytes)) throw DomainError("binary snapshot: truncated input");
    U u = 0;
    for (std::size_t i = sizeof(U); i-- > 0;) u = (u << 8) | bytes[i];
    return std::bit_cast<T>(u);
}

}  // namespace detail

inline void write_snapshot_binary(std::ostream& os, const ParticleCloud& c) {
    os.write("SOCS", 4);
    detail::put_le<std::uint32_t>(os, 1);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(c.dim));
    detail::put_le<double>(os, c.unit_mass);
    detail::put_le<double>(os, c.time);
    detail::put_le<std::uint64_t>(os, c.count());
    for (double v : c.positions) detail::put_le<double>(os, v);
}

inline ParticleCloud read_snapshot_binary(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::string(magic, 4) != "SOCS") throw DomainError("binary snapshot: bad magic");
    if (detail::get_le<std::uint32_t>(is) != 1) throw DomainError("binary snapshot: unsupported version");
    ParticleCloud c;
    c.dim = static_cast<int>(detail::get_le<std::uint32_t>(is));
    Dim{c.dim};
    c.unit_mass = detail::get_le<double>(is);
    c.time = detail::get_le<double>(is);
    const auto n = detail::get_le<std::uint64_t>(is);
    c.positions.resize(n * static_cast<std::uint64_t>(c.dim));
    for (double& v : c.positions) v = detail::get_le<double>(is);
    return c;
}

// ---------------------------------------------------------------------------
// Density fields
// ---------------------------------------------------------------------------

/// Rows "x[,y,z],value" in flat order (axis 0 fastest).
inline void write_field_csv(std::ostream& os, const DensityField& f) {
    for (int k = 0; k < f.grid.dim; ++k) os << axis_name(k) << ',';
    os << "value\n";
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const Point p = f.grid.node(i);
        for (int k = 0; k < f.grid.dim; ++k) os << fmt(p[static_cast<std::size_t>(k)]) << ',';
        os << fmt(f.values[i]) << '\n';
    }
}

/// Matrix text readable by gnuplot `matrix` plots: one line per axis-1 row
/// with axis-0 values across; d = 3 emits one block per axis-2 slice separated
/// by blank lines; d = 1 is a single line.
inline void write_field_matrix(std::ostream& os, const DensityField& f) {
    const std::size_t n0 = f.grid.counts[0];
    const std::size_t rows = f.values.size() / n0;
    const std::size_t n1 = f.grid.counts[1];
    for (std::size_t r = 0; r < rows; ++r) {
        if (r > 0 && f.grid.dim == 3 && r % n1 == 0) os << "\n\n";
        for (std::size_t i = 0; i < n0; ++i) {
            if (i) os << ' ';
            os << fmt(f.values[r * n0 + i]);
        }
        os << '\n';
    }
}

}  // namespace superocc
