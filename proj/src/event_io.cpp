#include "epgi/event_io.hpp"

#include <cstring>
#include <fstream>

#include "epgi/errors.hpp"

namespace epgi {

namespace {

constexpr char kMagic[4] = {'E', 'P', 'G', 'I'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kKindPhoton = 0;
constexpr std::uint8_t kKindElectron = 1;

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw Error("cannot open " + path);
  }

  bool read_raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in_.gcount()) == n;
  }

  std::uint16_t u16() {
    unsigned char b[2];
    require(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint64_t u64() {
    unsigned char b[8];
    require(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint8_t u8() {
    unsigned char b;
    require(&b, 1);
    return b;
  }
  float f32() {
    unsigned char b[4];
    require(b, 4);
    std::uint32_t bits = 0;
    for (int i = 3; i >= 0; --i) bits = (bits << 8) | b[i];
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  void require(unsigned char* dst, std::size_t n) {
    if (!read_raw(reinterpret_cast<char*>(dst), n)) throw TruncatedRecord();
  }
  std::ifstream in_;
};

struct Header {
  TimePs duration_ps;
  std::uint64_t count;
  std::uint8_t kind;
  FieldOfView fov;
};

Header read_header(Reader& r) {
  char magic[4];
  if (!r.read_raw(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw BadMagic();
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw VersionUnsupported(version);
  Header h;
  h.duration_ps = static_cast<TimePs>(r.u64());
  h.count = r.u64();
  h.kind = r.u8();
  h.fov.x_min = r.f32();
  h.fov.y_min = r.f32();
  h.fov.x_max = r.f32();
  h.fov.y_max = r.f32();
  return h;
}

std::string header_bytes(const StreamHeader& header, std::uint64_t count, std::uint8_t kind) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u16(buf, kVersion);
  put_u64(buf, static_cast<std::uint64_t>(header.duration_ps));
  put_u64(buf, count);
  buf.push_back(static_cast<char>(kind));
  put_f32(buf, header.fov.x_min);
  put_f32(buf, header.fov.y_min);
  put_f32(buf, header.fov.x_max);
  put_f32(buf, header.fov.y_max);
  return buf;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path);
}

}  // namespace

void write_events(const std::string& path, const ElectronStream& stream) {
  std::string buf = header_bytes(stream.header, stream.events.size(), kKindElectron);
  buf.reserve(buf.size() + stream.events.size() * 16);
  for (const auto& e : stream.events) {
    put_u64(buf, static_cast<std::uint64_t>(e.t));
    put_f32(buf, e.x);
    put_f32(buf, e.y);
  }
  write_file(path, buf);
}

void write_events(const std::string& path, const PhotonStream& stream) {
  std::string buf = header_bytes(stream.header, stream.events.size(), kKindPhoton);
  buf.reserve(buf.size() + stream.events.size() * 8);
  for (const auto& e : stream.events) put_u64(buf, static_cast<std::uint64_t>(e.t));
  write_file(path, buf);
}

ElectronStream read_electron_events(const std::string& path) {
  Reader r(path);
  const Header h = read_header(r);
  if (h.kind != kKindElectron) throw Error(path + " is not an electron stream");
  ElectronStream s;
  s.header.duration_ps = h.duration_ps;
  s.header.fov = h.fov;
  s.events.reserve(h.count);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    if (r.at_eof()) throw CountMismatch();  // short at a record boundary
    ElectronEvent e;
    e.t = static_cast<TimePs>(r.u64());
    e.x = r.f32();
    e.y = r.f32();
    s.events.push_back(e);
  }
  if (!r.at_eof()) throw CountMismatch();
  return s;
}

PhotonStream read_photon_events(const std::string& path) {
  Reader r(path);
  const Header h = read_header(r);
  if (h.kind != kKindPhoton) throw Error(path + " is not a photon stream");
  PhotonStream s;
  s.header.duration_ps = h.duration_ps;
  s.header.fov = h.fov;
  s.events.reserve(h.count);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    if (r.at_eof()) throw CountMismatch();
    s.events.push_back({static_cast<TimePs>(r.u64())});
  }
  if (!r.at_eof()) throw CountMismatch();
  return s;
}

}  // namespace epgi
