#pragma once

// Binary replay dump of (clocks, verdicts) for one lattice run.
//
// Layout, all integers little-endian:
//   char[4]  magic "CDPS"
//   u32      version (1)
//   u32      d
//   u32      extent   (n for a free box, side length for a torus)
//   u8       bc       (0 free, 1 periodic)
//   u32      k
//   u64      seed
//   u64      replica
//   u64      edge_count
//   edge_count x { u64 clock bits (IEEE-754 binary64), u8 accepted }

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "cdp/dynamics.hpp"
#include "cdp/lattice.hpp"

namespace cdp {

inline constexpr std::array<char, 4> kDumpMagic{'C', 'D', 'P', 'S'};
inline constexpr std::uint32_t kDumpVersion = 1;

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    os.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

template <class T>
T get_le(std::istream& is) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    int c = is.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("dump: truncated input");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace detail

struct ScheduleDump {
  LatticeBox box;
  ClockField clocks;
  OpeningSchedule schedule;
};

inline void write_dump(std::ostream& os, const LatticeBox& box, const ClockField& clocks,
                       const OpeningSchedule& schedule) {
  if (clocks.size() != box.edge_count() || schedule.size() != box.edge_count())
    throw std::invalid_argument("dump: size mismatch");
  os.write(kDumpMagic.data(), kDumpMagic.size());
  detail::put_le<std::uint32_t>(os, kDumpVersion);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(box.dim()));
  detail::put_le<std::uint32_t>(
      os, static_cast<std::uint32_t>(box.periodic() ? box.side() : box.half_side()));
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(box.bc()));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(schedule.k));
  detail::put_le<std::uint64_t>(os, clocks.seed);
  detail::put_le<std::uint64_t>(os, clocks.replica);
  detail::put_le<std::uint64_t>(os, box.edge_count());
  for (EdgeId e = 0; e < box.edge_count(); ++e) {
    detail::put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(clocks.u[e]));
    detail::put_le<std::uint8_t>(os, schedule.accepted(e) ? 1 : 0);
  }
  if (!os) throw std::runtime_error("dump: write failed");
}

inline ScheduleDump read_dump(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kDumpMagic) throw std::runtime_error("dump: bad magic");
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kDumpVersion)
    throw std::runtime_error("dump: unsupported version " + std::to_string(version));
  const auto d = detail::get_le<std::uint32_t>(is);
  const auto extent = detail::get_le<std::uint32_t>(is);
  const auto bc = detail::get_le<std::uint8_t>(is);
  if (bc > 1) throw std::runtime_error("dump: bad boundary condition");
  LatticeBox box = bc == 1 ? LatticeBox::torus(static_cast<int>(d), static_cast<int>(extent))
                           : LatticeBox::free_box(static_cast<int>(d), static_cast<int>(extent));
  const auto k = detail::get_le<std::uint32_t>(is);
  ClockField clocks;
  clocks.seed = detail::get_le<std::uint64_t>(is);
  clocks.replica = detail::get_le<std::uint64_t>(is);
  const auto edges = detail::get_le<std::uint64_t>(is);
  if (edges != box.edge_count()) throw std::runtime_error("dump: edge count does not match box");
  OpeningSchedule schedule;
  schedule.k = static_cast<int>(k);
  clocks.u.resize(edges);
  schedule.open_time.assign(edges, OpeningSchedule::kNever);
  for (std::uint64_t e = 0; e < edges; ++e) {
    clocks.u[e] = std::bit_cast<double>(detail::get_le<std::uint64_t>(is));
    const auto verdict = detail::get_le<std::uint8_t>(is);
    if (verdict > 1) throw std::runtime_error("dump: bad verdict byte");
    if (verdict) schedule.open_time[e] = clocks.u[e];
  }
  return ScheduleDump{std::move(box), std::move(clocks), std::move(schedule)};
}

}  // namespace cdp
