#pragma once

#include <cstdint>

namespace burst {

// Decimal units throughout: 1 GB = 1e9 bytes, 1 TB = 1e12 bytes, 1 Gbps = 1e9 bit/s.
inline constexpr double kBytesPerMB = 1e6;
inline constexpr double kBytesPerGB = 1e9;
inline constexpr double kBytesPerTB = 1e12;
inline constexpr double kSecondsPerHour = 3600.0;

constexpr double gbps_to_bytes_per_s(double gbps) { return gbps * 1e9 / 8.0; }
constexpr double bytes_per_s_to_gbps(double bytes_per_s) { return bytes_per_s * 8.0 / 1e9; }

// 1 TB/h = 2.222 Gbps.
constexpr double tb_per_hour_to_gbps(double tb_per_hour) {
  return bytes_per_s_to_gbps(tb_per_hour * kBytesPerTB / kSecondsPerHour);
}
constexpr double gbps_to_tb_per_hour(double gbps) {
  return gbps_to_bytes_per_s(gbps) * kSecondsPerHour / kBytesPerTB;
}

constexpr double bytes_to_tb(double bytes) { return bytes / kBytesPerTB; }

}  // namespace burst
