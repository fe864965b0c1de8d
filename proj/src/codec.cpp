#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "promptseg/errors.hpp"
#include "promptseg/image.hpp"

namespace promptseg {

namespace {

constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool looks_like_png(std::span<const std::uint8_t> b) {
    return b.size() >= 8 && std::memcmp(b.data(), kPngSig, 8) == 0;
}

bool looks_like_jpeg(std::span<const std::uint8_t> b) {
    return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

inline std::uint8_t quantize(double v) {
    const double q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<std::uint8_t>(q);
}

struct MemReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
    auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
    if (r->pos + len > r->size) png_error(png, "unexpected end of stream");
    std::memcpy(out, r->data + r->pos, len);
    r->pos += len;
}

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_flush_cb(png_structp) {}

// Interleaved 8-bit rows out of libpng, plus the pre-expansion channel count.
struct PngPixels {
    int width = 0;
    int height = 0;
    int source_channels = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> rgb; // expanded to 3 channels
};

PngPixels decode_png(std::span<const std::uint8_t> bytes) {
    PngPixels result;
    MemReader reader{bytes.data(), bytes.size(), 0};

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DecodeError("png: allocation failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DecodeError("png: allocation failure");
    }

    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("png: malformed stream");
    }

    png_set_read_fn(png, &reader, png_read_cb);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    result.bit_depth = png_get_bit_depth(png, info);
    switch (color_type) {
        case PNG_COLOR_TYPE_GRAY: result.source_channels = 1; break;
        case PNG_COLOR_TYPE_GRAY_ALPHA: result.source_channels = 2; break;
        case PNG_COLOR_TYPE_PALETTE: result.source_channels = 3; break;
        case PNG_COLOR_TYPE_RGB: result.source_channels = 3; break;
        case PNG_COLOR_TYPE_RGB_ALPHA: result.source_channels = 4; break;
        default: result.source_channels = 3; break;
    }

    if (result.bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    result.width = static_cast<int>(png_get_image_width(png, info));
    result.height = static_cast<int>(png_get_image_height(png, info));
    if (result.width <= 0 || result.height <= 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("png: empty image");
    }

    const std::size_t stride = png_get_rowbytes(png, info);
    result.rgb.resize(stride * result.height);
    row_ptrs.resize(result.height);
    for (int y = 0; y < result.height; ++y) row_ptrs[y] = result.rgb.data() + stride * y;

    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (stride != static_cast<std::size_t>(result.width) * 3) throw DecodeError("png: unexpected row stride");
    return result;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    longjmp(err->jump, 1);
}

PngPixels decode_jpeg(std::span<const std::uint8_t> bytes) {
    PngPixels result;
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;

    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError("jpeg: malformed stream");
    }

    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);

    result.source_channels = cinfo.num_components;
    result.bit_depth = 8;
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    result.width = static_cast<int>(cinfo.output_width);
    result.height = static_cast<int>(cinfo.output_height);
    const std::size_t stride = static_cast<std::size_t>(result.width) * 3;
    result.rgb.resize(stride * result.height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = result.rgb.data() + stride * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return result;
}

std::vector<std::uint8_t> encode_png_impl(int width, int height, int color_type,
                                          const std::vector<std::uint8_t>& bytes) {
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("png: allocation failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("png: allocation failure");
    }

    const int channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    std::vector<png_bytep> row_ptrs(height);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y) {
        row_ptrs[y] = const_cast<png_bytep>(bytes.data() + stride * y);
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("png: encode failure");
    }

    png_set_write_fn(png, &out, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // fixed filter and level keep the emitted bytes reproducible
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

} // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes, DecodeInfo& info) {
    PngPixels px;
    if (looks_like_png(bytes)) {
        px = decode_png(bytes);
        info.container = "png";
    } else if (looks_like_jpeg(bytes)) {
        px = decode_jpeg(bytes);
        info.container = "jpeg";
    } else {
        throw UnsupportedFormat("decode_image: not a PNG or JPEG stream");
    }
    info.source_channels = px.source_channels;
    info.bit_depth = px.bit_depth;

    RasterImage img;
    img.width = px.width;
    img.height = px.height;
    img.pixels.resize(static_cast<std::size_t>(px.width) * px.height * 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        img.pixels[i] = px.rgb[i] / 255.0;
    }
    return img;
}

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
    DecodeInfo info;
    return decode_image(bytes, info);
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(img.width) * img.height * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(img.pixels[i]);
    return encode_png_impl(img.width, img.height, PNG_COLOR_TYPE_RGB, bytes);
}

std::vector<std::uint8_t> encode_png_gray(const GrayImage& img) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(img.pixels[i]);
    return encode_png_impl(img.width, img.height, PNG_COLOR_TYPE_GRAY, bytes);
}

} // namespace promptseg
