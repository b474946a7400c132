#include "vesselwave/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "vesselwave/error.hpp"

namespace vesselwave {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Raster read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorKind::io, "cannot decode PNG '" + path.string() + "': " + image.message);
  }
  Raster raster;
  raster.width = static_cast<int>(image.width);
  raster.height = static_cast<int>(image.height);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  raster.channels = color ? 3 : 1;
  raster.data.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raster.data.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::io, "cannot decode PNG '" + path.string() + "': " + message);
  }
  return raster;
}

// Netpbm tokens: whitespace separated, '#' starts a comment to end of line.
class PnmTokenizer {
 public:
  explicit PnmTokenizer(std::istream& in) : in_(in) {}

  int next_int(const fs::path& path) {
    skip();
    int value = 0;
    if (!(in_ >> value)) {
      throw Error(ErrorKind::io, "truncated netpbm header in '" + path.string() + "'");
    }
    return value;
  }

 private:
  void skip() {
    for (;;) {
      const int c = in_.peek();
      if (c == '#') {
        std::string line;
        std::getline(in_, line);
      } else if (c != EOF && std::isspace(c)) {
        in_.get();
      } else {
        return;
      }
    }
  }

  std::istream& in_;
};

Raster read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || std::string("2356").find(magic[1]) == std::string::npos) {
    throw Error(ErrorKind::io, "'" + path.string() + "' is not a PGM/PPM file");
  }
  const bool binary = magic[1] == '5' || magic[1] == '6';
  const int channels = (magic[1] == '3' || magic[1] == '6') ? 3 : 1;
  PnmTokenizer tok(in);
  Raster raster;
  raster.width = tok.next_int(path);
  raster.height = tok.next_int(path);
  raster.max_value = tok.next_int(path);
  raster.channels = channels;
  if (raster.width <= 0 || raster.height <= 0 || raster.max_value <= 0 || raster.max_value > 255) {
    throw Error(ErrorKind::io, "unsupported netpbm header in '" + path.string() +
                                   "' (8-bit rasters only)");
  }
  const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height * channels;
  raster.data.resize(n);
  if (binary) {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(raster.data.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw Error(ErrorKind::io, "truncated pixel data in '" + path.string() + "'");
    }
  } else {
    for (auto& v : raster.data) v = static_cast<std::uint8_t>(tok.next_int(path));
  }
  return raster;
}

}  // namespace

Channel parse_channel(std::string_view name) {
  if (name == "red") return Channel::red;
  if (name == "green") return Channel::green;
  if (name == "blue") return Channel::blue;
  if (name == "gray" || name == "grey") return Channel::gray;
  throw Error(ErrorKind::config, "unknown channel '" + std::string(name) + "'");
}

const char* to_string(Channel channel) {
  switch (channel) {
    case Channel::red: return "red";
    case Channel::green: return "green";
    case Channel::blue: return "blue";
    case Channel::gray: return "gray";
  }
  return "gray";
}

Raster read_raster(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::io, "no such file '" + path.string() + "'");
  const std::string ext = lower(path.extension().string());
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw Error(ErrorKind::io, "unsupported format '" + path.string() +
                                 "' (convert JPEG/TIFF/GIF inputs to PNG or PPM first)");
}

void write_png(const fs::path& path, const Raster& raster) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = raster.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raster.data.data(), 0, nullptr)) {
    throw Error(ErrorKind::io, "cannot write '" + path.string() + "': " + image.message);
  }
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  Raster raster{mask.width(), mask.height(), 1, 255, {}};
  raster.data.reserve(mask.size());
  for (auto v : mask) raster.data.push_back(v ? 255 : 0);
  write_png(path, raster);
}

void write_pgm16(const fs::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  std::vector<char> bytes;
  bytes.reserve(image.size() * 2);
  for (double v : image) {
    const double clamped = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(clamped * 65535.0));
    bytes.push_back(static_cast<char>(q >> 8));
    bytes.push_back(static_cast<char>(q & 0xff));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
}

Image channel_of(const Raster& raster, Channel channel) {
  int c = 0;
  if (raster.channels == 3) {
    switch (channel) {
      case Channel::red: c = 0; break;
      case Channel::green: c = 1; break;
      case Channel::blue: c = 2; break;
      case Channel::gray: c = -1; break;
    }
  }
  Image img(raster.width, raster.height);
  const double scale = 1.0 / raster.max_value;
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      double v;
      if (c >= 0) {
        v = raster.at(x, y, c);
      } else {
        // Rec. 601 luma for gray requests on colour input.
        v = 0.299 * raster.at(x, y, 0) + 0.587 * raster.at(x, y, 1) + 0.114 * raster.at(x, y, 2);
      }
      img(x, y) = std::min(1.0, v * scale);
    }
  }
  return img;
}

Image load_channel(const fs::path& path, Channel channel) {
  return channel_of(read_raster(path), channel);
}

Image invert(const Image& img) {
  Image out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = 1.0 - img[i];
  return out;
}

FovMask load_mask(const fs::path& path) {
  const Raster raster = read_raster(path);
  FovMask mask(raster.width, raster.height);
  const int half = raster.max_value / 2;
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) mask(x, y) = raster.at(x, y, 0) > half;
  }
  return mask;
}

FovMask load_mask(const fs::path& path, const Image& paired) {
  FovMask mask = load_mask(path);
  if (!mask.same_shape(paired)) {
    throw Error(ErrorKind::config,
                "mask '" + path.string() + "' is " + std::to_string(mask.width()) + "x" +
                    std::to_string(mask.height()) + " but its image is " +
                    std::to_string(paired.width()) + "x" + std::to_string(paired.height()));
  }
  return mask;
}

FovMask erode(const FovMask& mask, int radius) {
  if (radius <= 0) return mask;
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dx, dy);
    }
  }
  FovMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      bool keep = true;
      for (auto [dx, dy] : offsets) {
        // Pixels beyond the raster count as outside.
        if (!mask.contains(x + dx, y + dy) || !mask(x + dx, y + dy)) {
          keep = false;
          break;
        }
      }
      out(x, y) = keep;
    }
  }
  return out;
}

FovMask derive_mask(const Image& img, double threshold, int erosion_radius) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::parameter, "mask threshold must lie in (0, 1)");
  }
  FovMask mask(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) mask[i] = img[i] > threshold;
  mask = erode(mask, erosion_radius);
  if (count_set(mask) == 0) {
    throw Error(ErrorKind::data, "derived aperture mask is empty");
  }
  return mask;
}

ExtendedImage extend_border(const Image& img, const FovMask& mask, int iterations) {
  if (iterations < 0) throw Error(ErrorKind::parameter, "border iterations must be >= 0");
  if (!img.same_shape(mask)) {
    throw Error(ErrorKind::parameter, "image and mask dimensions differ");
  }
  ExtendedImage out{img, mask};
  const int w = img.width();
  const int h = img.height();
  std::vector<std::pair<std::size_t, double>> updates;
  for (int it = 0; it < iterations; ++it) {
    updates.clear();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (out.mask(x, y)) continue;
        double sum = 0.0;
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx || dy) && out.mask.contains(x + dx, y + dy) && out.mask(x + dx, y + dy)) {
              sum += out.image(x + dx, y + dy);
              ++n;
            }
          }
        }
        if (n > 0) updates.emplace_back(static_cast<std::size_t>(y) * w + x, sum / n);
      }
    }
    if (updates.empty()) break;
    // Synchronous update: this front only sees the region as it stood before the sweep.
    for (auto [i, v] : updates) {
      out.image[i] = v;
      out.mask[i] = 1;
    }
  }
  return out;
}

int default_border_iterations(std::span<const double> scales) {
  double max_scale = 0.0;
  for (double s : scales) max_scale = std::max(max_scale, s);
  return static_cast<int>(std::ceil(4.0 * max_scale));
}

}  // namespace vesselwave
