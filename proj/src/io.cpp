#include "ham/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ham {

namespace {

constexpr std::array<char, 8> kMagic = {'H', 'A', 'M', 'N', 'E', 'T', '\0', '\1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void count(std::size_t v, const char* what) {
    if (v > UINT32_MAX) throw Error(std::string("network container: ") + what + " too large");
    u32(static_cast<std::uint32_t>(v));
  }

private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) os_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::ostream& os_;
};

class Reader {
public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    if (n > 0 && !is_.read(s.data(), static_cast<std::streamsize>(n))) truncated();
    return s;
  }

private:
  std::uint64_t le(int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      const int c = is_.get();
      if (c == std::char_traits<char>::eof()) truncated();
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
  }
  [[noreturn]] static void truncated() { throw Error("network container: unexpected end of data"); }
  std::istream& is_;
};

}  // namespace

void write_network(std::ostream& os, const NetworkSpec& spec) {
  Writer w(os);
  os.write(kMagic.data(), kMagic.size());
  w.u32(kVersion);
  w.count(spec.layers.size(), "layer count");
  for (const auto& l : spec.layers) {
    w.count(l.name.size(), "layer name");
    os.write(l.name.data(), static_cast<std::streamsize>(l.name.size()));
    w.u8(l.shape.is_map() ? 1 : 0);
    w.count(l.shape.height, "height");
    w.count(l.shape.width, "width");
    w.count(l.shape.channels, "channels");
    w.u8(static_cast<std::uint8_t>(l.lagrangian.kind));
    w.u8(static_cast<std::uint8_t>(l.lagrangian.function));
    w.f64(l.lagrangian.beta);
    w.f64(l.tau);
  }
  w.count(spec.connections.size(), "connection count");
  for (const auto& c : spec.connections) {
    w.u8(static_cast<std::uint8_t>(c.kind));
    w.count(c.lower, "lower");
    w.count(c.rows, "rows");
    w.count(c.cols, "cols");
    w.count(c.window, "window");
    w.count(c.stride, "stride");
    w.count(c.in_channels, "in_channels");
    w.count(c.out_channels, "out_channels");
    w.u64(c.weights.size());
  }
  for (const auto& c : spec.connections) {
    for (double v : c.weights) w.f64(v);
  }
  if (!os) throw Error("network container: write failed");
}

NetworkSpec read_network(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error("network container: bad magic");
  }
  Reader r(is);
  if (const auto v = r.u32(); v != kVersion) {
    throw Error("network container: unsupported version " + std::to_string(v));
  }
  NetworkSpec spec;
  const std::uint32_t layers = r.u32();
  for (std::uint32_t i = 0; i < layers; ++i) {
    LayerSpec l;
    l.name = r.bytes(r.u32());
    const auto kind = r.u8();
    if (kind > 1) throw Error("network container: bad shape kind");
    l.shape.kind = kind == 1 ? Shape::Kind::Map : Shape::Kind::Flat;
    l.shape.height = r.u32();
    l.shape.width = r.u32();
    l.shape.channels = r.u32();
    const auto lk = r.u8();
    const auto fn = r.u8();
    if (lk > 3 || fn > 2) throw Error("network container: bad lagrangian code");
    l.lagrangian.kind = static_cast<Lagrangian::Kind>(lk);
    l.lagrangian.function = static_cast<Lagrangian::Function>(fn);
    l.lagrangian.beta = r.f64();
    l.tau = r.f64();
    spec.layers.push_back(std::move(l));
  }
  const std::uint32_t conns = r.u32();
  std::vector<std::uint64_t> counts;
  for (std::uint32_t i = 0; i < conns; ++i) {
    Connection c;
    const auto kind = r.u8();
    if (kind > 2) throw Error("network container: bad connection kind");
    c.kind = static_cast<Connection::Kind>(kind);
    c.lower = r.u32();
    c.rows = r.u32();
    c.cols = r.u32();
    c.window = r.u32();
    c.stride = r.u32();
    c.in_channels = r.u32();
    c.out_channels = r.u32();
    counts.push_back(r.u64());
    if (counts.back() > (std::uint64_t{1} << 32)) throw Error("network container: weight count too large");
    spec.connections.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < spec.connections.size(); ++i) {
    auto& wts = spec.connections[i].weights;
    wts.resize(counts[i]);
    for (double& v : wts) v = r.f64();
  }
  return spec;
}

void save_network(const std::filesystem::path& path, const NetworkSpec& spec) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_network(os, spec);
}

NetworkSpec load_network(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return read_network(is);
}

std::vector<Tensor> read_pattern_csv(std::istream& is) {
  std::vector<Tensor> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    Tensor row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      double v = 0.0;
      const char* begin = b == std::string::npos ? cell.data() : cell.data() + b;
      const char* end = b == std::string::npos ? begin : cell.data() + e + 1;
      const auto res = std::from_chars(begin, end, v);
      if (res.ec != std::errc() || res.ptr != end || begin == end) {
        throw Error("pattern csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error("pattern csv line " + std::to_string(lineno) + ": expected " +
                  std::to_string(rows.front().size()) + " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Tensor> load_pattern_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  return read_pattern_csv(is);
}

void write_pattern_csv(std::ostream& os, const std::vector<Tensor>& patterns) {
  for (const auto& p : patterns) {
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << format_double(p[i]);
    os << '\n';
  }
}

namespace {

std::size_t pgm_int(std::istream& is) {
  // skip whitespace and '#' comments between header tokens
  for (;;) {
    const int c = is.peek();
    if (c == '#') {
      std::string skip;
      std::getline(is, skip);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  std::size_t v = 0;
  if (!(is >> v)) throw Error("pgm: malformed header");
  return v;
}

}  // namespace

Image read_pgm(std::istream& is) {
  char m[2];
  if (!is.read(m, 2) || m[0] != 'P' || m[1] != '5') throw Error("pgm: expected binary P5 header");
  Image img;
  img.width = pgm_int(is);
  img.height = pgm_int(is);
  const std::size_t maxval = pgm_int(is);
  if (maxval == 0 || maxval > 255) throw Error("pgm: only 8-bit images are supported");
  is.get();  // single whitespace before raster
  img.pixels.resize(img.width * img.height);
  for (double& p : img.pixels) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw Error("pgm: truncated raster");
    p = 2.0 * static_cast<double>(c) / static_cast<double>(maxval) - 1.0;
  }
  return img;
}

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return read_pgm(is);
}

void write_pgm(std::ostream& os, const Image& image) {
  os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (double p : image.pixels) {
    const double c = std::clamp(p, -1.0, 1.0);
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround((c + 1.0) * 127.5))));
  }
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace ham
