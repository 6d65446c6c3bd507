#include "meir/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "meir/errors.hpp"

namespace meir {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.empty()) throw IngestError("empty file: " + path);
  return bytes;
}

// ---- PNM ----

int next_pnm_token(const std::vector<std::uint8_t>& b, size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  int v = 0;
  bool any = false;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos] - '0');
    ++pos;
    any = true;
  }
  if (!any) throw IngestError("malformed PNM header");
  return v;
}

Raster decode_pnm(const std::vector<std::uint8_t>& b) {
  const char kind = static_cast<char>(b[1]);
  const bool ascii = (kind == '2' || kind == '3');
  const int channels = (kind == '3' || kind == '6') ? 3 : 1;
  size_t pos = 2;
  Raster r;
  r.width = next_pnm_token(b, pos);
  r.height = next_pnm_token(b, pos);
  const int maxval = next_pnm_token(b, pos);
  if (r.width <= 0 || r.height <= 0 || maxval <= 0 || maxval > 255)
    throw IngestError("unsupported PNM header (need 8-bit raster)");
  r.channels = channels;
  const size_t count =
      static_cast<size_t>(r.width) * r.height * channels;
  r.data.resize(count);
  if (ascii) {
    for (size_t i = 0; i < count; ++i) {
      int v = next_pnm_token(b, pos);
      r.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0, maxval));
    }
  } else {
    ++pos;  // single whitespace after maxval
    if (b.size() < pos + count) throw IngestError("truncated PNM data");
    std::memcpy(r.data.data(), b.data() + pos, count);
  }
  if (maxval != 255)
    for (auto& v : r.data)
      v = static_cast<std::uint8_t>(v * 255 / maxval);
  return r;
}

// ---- PNG ----

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

Raster decode_png(const std::vector<std::uint8_t>& b) {
  static const std::uint8_t magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                        '\n'};
  if (b.size() < 8 || std::memcmp(b.data(), magic, 8) != 0)
    throw IngestError("not a PNG file");

  int width = 0, height = 0, bit_depth = 0, color_type = 0;
  std::vector<std::uint8_t> idat;
  std::vector<std::uint8_t> palette;  // rgb triples
  size_t pos = 8;
  while (pos + 8 <= b.size()) {
    const std::uint32_t len = be32(&b[pos]);
    if (pos + 12 + len > b.size()) throw IngestError("truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(&b[pos + 4]);
    const std::uint8_t* payload = &b[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IngestError("bad IHDR");
      width = static_cast<int>(be32(payload));
      height = static_cast<int>(be32(payload + 4));
      bit_depth = payload[8];
      color_type = payload[9];
      if (payload[12] != 0)
        throw IngestError("interlaced PNG not supported");
      if (bit_depth != 8)
        throw IngestError("only 8-bit PNG supported");
      if (color_type != 0 && color_type != 2 && color_type != 3 &&
          color_type != 4 && color_type != 6)
        throw IngestError("unsupported PNG color type");
    } else if (std::memcmp(type, "PLTE", 4) == 0) {
      palette.assign(payload, payload + len);
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (width <= 0 || height <= 0 || idat.empty())
    throw IngestError("PNG missing IHDR/IDAT");

  const int src_channels =
      color_type == 0 ? 1 : color_type == 2 ? 3 : color_type == 3 ? 1
      : color_type == 4 ? 2 : 4;
  const size_t row_bytes = static_cast<size_t>(width) * src_channels;
  std::vector<std::uint8_t> raw((row_bytes + 1) * height);
  uLongf raw_len = raw.size();
  if (uncompress(raw.data(), &raw_len, idat.data(), idat.size()) != Z_OK ||
      raw_len != raw.size())
    throw IngestError("PNG inflate failed");

  // Undo per-row filters in place.
  std::vector<std::uint8_t> img(row_bytes * height);
  const int bpp = src_channels;
  for (int y = 0; y < height; ++y) {
    const std::uint8_t filter = raw[y * (row_bytes + 1)];
    const std::uint8_t* src = &raw[y * (row_bytes + 1) + 1];
    std::uint8_t* dst = &img[y * row_bytes];
    const std::uint8_t* up = y > 0 ? &img[(y - 1) * row_bytes] : nullptr;
    for (size_t x = 0; x < row_bytes; ++x) {
      const int a = x >= static_cast<size_t>(bpp) ? dst[x - bpp] : 0;
      const int bb = up ? up[x] : 0;
      const int c = (up && x >= static_cast<size_t>(bpp)) ? up[x - bpp] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += bb; break;
        case 3: v += (a + bb) / 2; break;
        case 4: v += paeth(a, bb, c); break;
        default: throw IngestError("bad PNG filter type");
      }
      dst[x] = static_cast<std::uint8_t>(v & 0xff);
    }
  }

  Raster r;
  r.width = width;
  r.height = height;
  const size_t n = static_cast<size_t>(width) * height;
  if (color_type == 0) {
    r.channels = 1;
    r.data = std::move(img);
  } else if (color_type == 2) {
    r.channels = 3;
    r.data = std::move(img);
  } else if (color_type == 3) {
    if (palette.empty()) throw IngestError("palette PNG without PLTE");
    r.channels = 3;
    r.data.resize(n * 3);
    for (size_t i = 0; i < n; ++i) {
      const size_t idx = static_cast<size_t>(img[i]) * 3;
      if (idx + 2 >= palette.size()) throw IngestError("palette index range");
      r.data[i * 3] = palette[idx];
      r.data[i * 3 + 1] = palette[idx + 1];
      r.data[i * 3 + 2] = palette[idx + 2];
    }
  } else {  // gray+alpha or RGBA: drop alpha
    const int ch = color_type == 4 ? 1 : 3;
    r.channels = ch;
    r.data.resize(n * ch);
    for (size_t i = 0; i < n; ++i)
      for (int k = 0; k < ch; ++k)
        r.data[i * ch + k] = img[i * (ch + 1) + k];
  }
  return r;
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
  append_be32(out, static_cast<std::uint32_t>(payload.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc =
      crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
  append_be32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> quantize(const ScalarImage& img) {
  std::vector<std::uint8_t> bytes(img.samples().size());
  for (size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp(img.samples()[i], 0.0, 1.0);
    bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return bytes;
}

}  // namespace

Raster read_raster(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '2' &&
      bytes[1] <= '6')
    return decode_pnm(bytes);
  if (bytes.size() >= 8 && bytes[0] == 0x89) return decode_png(bytes);
  throw IngestError("unrecognized image format: " + path);
}

std::vector<double> raster_to_gray01(const Raster& r) {
  const size_t n = static_cast<size_t>(r.width) * r.height;
  std::vector<double> gray(n);
  if (r.channels == 1) {
    for (size_t i = 0; i < n; ++i) gray[i] = r.data[i] / 255.0;
  } else if (r.channels == 3) {
    for (size_t i = 0; i < n; ++i) {
      gray[i] = (0.299 * r.data[i * 3] + 0.587 * r.data[i * 3 + 1] +
                 0.114 * r.data[i * 3 + 2]) /
                255.0;
    }
  } else {
    throw IngestError("unsupported channel count");
  }
  return gray;
}

void write_pgm(const std::string& path, const ScalarImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write file: " + path);
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  const auto bytes = quantize(img);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void write_png_gray(const std::string& path, const ScalarImage& img) {
  const int w = img.width(), h = img.height();
  const auto bytes = quantize(img);
  std::vector<std::uint8_t> raw;
  raw.reserve((static_cast<size_t>(w) + 1) * h);
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), bytes.begin() + static_cast<size_t>(y) * w,
               bytes.begin() + static_cast<size_t>(y + 1) * w);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw InternalError("PNG deflate failed");
  compressed.resize(bound);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                   '\n'};
  std::vector<std::uint8_t> ihdr;
  append_be32(ihdr, static_cast<std::uint32_t>(w));
  append_be32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IngestError("cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
}

}  // namespace meir
