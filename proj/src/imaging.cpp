#include "cbir/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include <fmt/core.h>
#include <jpeglib.h>
#include <png.h>

#include "cbir/error.hpp"

namespace cbir {

namespace {

void check_dims(int width, int height, std::size_t size, std::size_t channels,
                const char* what) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{}: dimensions must be positive, got {}x{}", what, width, height));
  }
  const std::size_t expected =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels;
  if (size != expected) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{}: data length {} does not match {}x{}x{}", what, size, width,
                            height, channels));
  }
}

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
constexpr std::array<std::uint8_t, 3> kJpegSignature = {0xff, 0xd8, 0xff};

template <std::size_t N>
bool has_prefix(std::span<const std::uint8_t> bytes, const std::array<std::uint8_t, N>& magic) {
  const std::size_t n = std::min(bytes.size(), N);
  return std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n), magic.begin());
}

// ---- PNG ------------------------------------------------------------------

struct PngIo {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
  char message[256] = {};
};

void png_read_cb(png_structp png, png_bytep out, png_size_t n) {
  auto* io = static_cast<PngIo*>(png_get_io_ptr(png));
  if (n > io->bytes.size() - io->offset) {
    png_error(png, "unexpected end of data");
  }
  std::memcpy(out, io->bytes.data() + io->offset, n);
  io->offset += n;
}

void png_error_cb(png_structp png, png_const_charp msg) {
  auto* io = static_cast<PngIo*>(png_get_error_ptr(png));
  std::snprintf(io->message, sizeof(io->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_cb(png_structp, png_const_charp) {}

// Only trivially destructible locals live in this frame; it is the setjmp
// target. Returns false with io.message set on failure.
bool png_decode_raw(PngIo& io, std::vector<std::uint8_t>& pixels,
                    std::vector<png_bytep>& rows, png_uint_32& width, png_uint_32& height) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &io, png_error_cb, png_warning_cb);
  if (png == nullptr) {
    std::snprintf(io.message, sizeof(io.message), "cannot allocate png reader");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::snprintf(io.message, sizeof(io.message), "cannot allocate png info");
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &io, png_read_cb);
  png_read_info(png, info);

  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(width) * 3) {
    png_error(png, "unexpected row layout after transforms");
  }
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * 3;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RgbRaster decode_png(std::span<const std::uint8_t> bytes) {
  PngIo io{bytes};
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  if (!png_decode_raw(io, pixels, rows, width, height)) {
    throw Error(ErrorCode::kDecode,
                fmt::format("png: {} at offset {}", io.message, io.offset));
  }
  return RgbRaster(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

struct PngSink {
  Bytes out;
  char message[256] = {};
};

void png_write_cb(png_structp png, png_bytep data, png_size_t n) {
  auto* sink = static_cast<PngSink*>(png_get_io_ptr(png));
  sink->out.insert(sink->out.end(), data, data + n);
}

void png_flush_cb(png_structp) {}

void png_write_error_cb(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<PngSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  png_longjmp(png, 1);
}

bool png_encode_raw(PngSink& sink, const std::uint8_t* pixels, int width, int height,
                    int channels, std::vector<png_bytep>& rows) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, png_write_error_cb, png_warning_cb);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &sink, png_write_cb, png_flush_cb);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  // libpng takes non-const row pointers but does not write through them.
  auto* base = const_cast<std::uint8_t*>(pixels);
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = base + static_cast<std::size_t>(y) * width * channels;
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

Bytes encode_png_planes(const std::uint8_t* pixels, int width, int height, int channels) {
  PngSink sink;
  std::vector<png_bytep> rows;
  if (!png_encode_raw(sink, pixels, width, height, channels, rows)) {
    throw Error(ErrorCode::kIo, fmt::format("png encode failed: {}", sink.message));
  }
  return std::move(sink.out);
}

// ---- JPEG -----------------------------------------------------------------

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = {};
};

void jpeg_error_exit_cb(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Corrupt-data warnings (premature EOF, bad Huffman codes) are fatal here;
// libjpeg would otherwise pad the output with gray.
void jpeg_emit_message_cb(j_common_ptr cinfo, int level) {
  if (level < 0) jpeg_error_exit_cb(cinfo);
}

bool jpeg_decode_raw(std::span<const std::uint8_t> bytes, JpegError& err,
                     jpeg_decompress_struct& cinfo, std::vector<std::uint8_t>& pixels,
                     std::size_t& offset) {
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit_cb;
  err.mgr.emit_message = jpeg_emit_message_cb;
  if (setjmp(err.jump)) {
    if (cinfo.src != nullptr) offset = bytes.size() - cinfo.src->bytes_in_buffer;
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK) {
    std::snprintf(err.message, sizeof(err.message), "CMYK jpeg is not supported");
    offset = bytes.size() - cinfo.src->bytes_in_buffer;
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  pixels.resize(stride * cinfo.output_height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

RgbRaster decode_jpeg(std::span<const std::uint8_t> bytes) {
  JpegError err{};
  jpeg_decompress_struct cinfo{};
  std::vector<std::uint8_t> pixels;
  std::size_t offset = 0;
  if (!jpeg_decode_raw(bytes, err, cinfo, pixels, offset)) {
    throw Error(ErrorCode::kDecode, fmt::format("jpeg: {} at offset {}", err.message, offset));
  }
  return RgbRaster(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height),
                   std::move(pixels));
}

bool jpeg_encode_raw(const RgbRaster& img, int quality, JpegError& err,
                     jpeg_compress_struct& cinfo, unsigned char*& buffer, unsigned long& size) {
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit_cb;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(img.width()) * 3;
  auto* base = const_cast<std::uint8_t*>(img.data().data());
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = base + stride * cinfo.next_scanline;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

void check_window(int width, int height, int window) {
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("filter window must be odd and >= 3, got {}", window));
  }
  if (window > 2 * std::min(width, height) + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("filter window {} too large for {}x{} raster", window, width, height));
  }
}

// Visits the clamped window around (x, y) in row-major order.
template <typename Fn>
void for_each_clamped(const GrayRaster& img, int x, int y, int half, Fn&& fn) {
  for (int dy = -half; dy <= half; ++dy) {
    const int yy = std::clamp(y + dy, 0, img.height() - 1);
    for (int dx = -half; dx <= half; ++dx) {
      const int xx = std::clamp(x + dx, 0, img.width() - 1);
      fn(img.at(xx, yy));
    }
  }
}

}  // namespace

RgbRaster::RgbRaster(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width_, height_, data_.size(), 3, "RgbRaster");
}

RgbRaster RgbRaster::filled(int width, int height, Pixel value) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("RgbRaster: dimensions must be positive, got {}x{}", width, height));
  }
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = value[0];
    data[i + 1] = value[1];
    data[i + 2] = value[2];
  }
  return RgbRaster(width, height, std::move(data));
}

GrayRaster::GrayRaster(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width_, height_, data_.size(), 1, "GrayRaster");
}

GrayRaster GrayRaster::filled(int width, int height, std::uint8_t value) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("GrayRaster: dimensions must be positive, got {}x{}", width, height));
  }
  return GrayRaster(width, height,
                    std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, value));
}

RgbRaster decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) {
    throw Error(ErrorCode::kDecode, "empty input at offset 0");
  }
  if (has_prefix(bytes, kPngSignature)) {
    if (bytes.size() < kPngSignature.size()) {
      throw Error(ErrorCode::kDecode,
                  fmt::format("png: truncated signature at offset {}", bytes.size()));
    }
    return decode_png(bytes);
  }
  if (has_prefix(bytes, kJpegSignature)) {
    if (bytes.size() < kJpegSignature.size()) {
      throw Error(ErrorCode::kDecode,
                  fmt::format("jpeg: truncated signature at offset {}", bytes.size()));
    }
    return decode_jpeg(bytes);
  }
  throw Error(ErrorCode::kUnsupportedFormat, "input is neither PNG nor JPEG");
}

Bytes encode_png(const RgbRaster& img) {
  return encode_png_planes(img.data().data(), img.width(), img.height(), 3);
}

Bytes encode_png(const GrayRaster& img) {
  return encode_png_planes(img.data().data(), img.width(), img.height(), 1);
}

Bytes encode_jpeg(const RgbRaster& img, int quality) {
  if (quality < 1 || quality > 100) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("jpeg quality {} not in [1,100]", quality));
  }
  JpegError err{};
  jpeg_compress_struct cinfo{};
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  const bool ok = jpeg_encode_raw(img, quality, err, cinfo, buffer, size);
  Bytes out;
  if (ok) out.assign(buffer, buffer + size);
  std::free(buffer);
  if (!ok) throw Error(ErrorCode::kIo, fmt::format("jpeg encode failed: {}", err.message));
  return out;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", path));
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, fmt::format("read failed for {}", path));
  return out;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot open {} for writing", path));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, fmt::format("write failed for {}", path));
}

GrayRaster to_gray(const RgbRaster& img) {
  std::vector<std::uint8_t> out(img.pixel_count());
  const auto src = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double luma = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    out[i] = static_cast<std::uint8_t>(std::clamp(std::round(luma), 0.0, 255.0));
  }
  return GrayRaster(img.width(), img.height(), std::move(out));
}

GrayRaster median_filter(const GrayRaster& img, int window) {
  check_window(img.width(), img.height(), window);
  const int half = window / 2;
  std::vector<std::uint8_t> out(img.pixel_count());
  std::vector<std::uint8_t> values;
  values.reserve(static_cast<std::size_t>(window) * window);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      values.clear();
      for_each_clamped(img, x, y, half, [&](std::uint8_t v) { values.push_back(v); });
      // Lower median when the count is even.
      const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
      std::nth_element(values.begin(), mid, values.end());
      out[static_cast<std::size_t>(y) * img.width() + x] = *mid;
    }
  }
  return GrayRaster(img.width(), img.height(), std::move(out));
}

GrayRaster averaging_filter(const GrayRaster& img, int window) {
  check_window(img.width(), img.height(), window);
  const int half = window / 2;
  const auto n = static_cast<std::uint32_t>(window * window);
  std::vector<std::uint8_t> out(img.pixel_count());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      std::uint32_t sum = 0;
      for_each_clamped(img, x, y, half, [&](std::uint8_t v) { sum += v; });
      // round(sum / n), halves away from zero
      out[static_cast<std::size_t>(y) * img.width() + x] =
          static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
    }
  }
  return GrayRaster(img.width(), img.height(), std::move(out));
}

GrayRaster add_salt_pepper(const GrayRaster& img, double density, std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("noise density {} not in [0,1]", density));
  }
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> out(img.data().begin(), img.data().end());
  for (auto& px : out) {
    // 53-bit uniform in [0,1), independent of the standard library's distributions.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const bool salt = (rng() & 1U) != 0;
    if (u < density) px = salt ? 255 : 0;
  }
  return GrayRaster(img.width(), img.height(), std::move(out));
}

double psnr(const GrayRaster& a, const GrayRaster& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("psnr: dimension mismatch {}x{} vs {}x{}", a.width(), a.height(),
                            b.width(), b.height()));
  }
  double sse = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrIdentical;
  const double mse = sse / static_cast<double>(da.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace cbir
