#pragma once

#include "ham/tensor.hpp"
#include "ham/topology.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ham {

/// Binary network container. All integers are little-endian, doubles are
/// IEEE-754 binary64 written as their little-endian bit pattern.
///
///   magic         8 bytes  "HAMNET\0\1"
///   version       u32      1
///   layer_count   u32
///   layer table   layer_count records:
///                   name_len u32, name bytes (UTF-8, no terminator)
///                   shape_kind u8 (0 flat, 1 map), height u32, width u32, channels u32
///                   lagrangian_kind u8 (0 quadratic, 1 logsumexp, 2 channel_logsumexp,
///                                       3 elementwise)
///                   function u8 (0 identity, 1 logcosh, 2 relu), beta f64, tau f64
///   conn_count    u32
///   conn table    conn_count records:
///                   kind u8 (0 dense, 1 conv, 2 avgpool), lower u32, rows u32, cols u32,
///                   window u32, stride u32, in_channels u32, out_channels u32,
///                   weight_count u64
///   weights       for each connection in order, weight_count f64 values, row-major
///
/// Round trips are bit-exact.
void write_network(std::ostream& os, const NetworkSpec& spec);
NetworkSpec read_network(std::istream& is);
void save_network(const std::filesystem::path& path, const NetworkSpec& spec);
NetworkSpec load_network(const std::filesystem::path& path);

/// Pattern corpus: one pattern per row, comma separated, '#' comment lines
/// and blank lines ignored. Every row must have the same length.
std::vector<Tensor> read_pattern_csv(std::istream& is);
std::vector<Tensor> load_pattern_csv(const std::filesystem::path& path);
void write_pattern_csv(std::ostream& os, const std::vector<Tensor>& patterns);

/// 8-bit binary PGM (P5, maxval <= 255) mapped to [-1, 1] as 2 v / maxval - 1.
/// Returns the pixels row-major with one channel.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor pixels;
};
Image read_pgm(std::istream& is);
Image load_pgm(const std::filesystem::path& path);
/// Inverse mapping, values clipped to [-1, 1] and rounded to the nearest level.
void write_pgm(std::ostream& os, const Image& image);

/// Shortest decimal representation that round-trips a double.
std::string format_double(double v);

}  // namespace ham
