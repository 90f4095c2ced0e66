#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "slicematch/errors.hpp"
#include "slicematch/io.hpp"

namespace slicematch {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

IntensityGrid read_png_gray(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw parse_error(path + ": cannot open for reading");

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw parse_error(path + ": not a PNG file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw parse_error(path + ": png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw parse_error(path + ": png_create_info_struct failed");
    }
    std::vector<png_bytep> row_ptrs;
    IntensityGrid grid;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw parse_error(path + ": malformed PNG data");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    // Normalize every color layout to 8-bit grayscale.
    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
        png_set_strip_alpha(png);
    }
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    if (width < 1 || height < 1 || png_get_channels(png, info) != 1 ||
        png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw parse_error(path + ": could not reduce PNG to 8-bit grayscale");
    }

    std::vector<png_byte> raster(static_cast<std::size_t>(width) * height);
    row_ptrs.resize(height);
    for (png_uint_32 i = 0; i < height; ++i) {
        row_ptrs[i] = raster.data() + static_cast<std::size_t>(i) * width;
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    grid.height = static_cast<int>(height);
    grid.width = static_cast<int>(width);
    grid.values.resize(raster.size());
    for (std::size_t k = 0; k < raster.size(); ++k) grid.values[k] = raster[k];
    return grid;
}

void write_png_gray(const std::string& path, const IntensityGrid& grid) {
    if (grid.height < 1 || grid.width < 1 ||
        grid.values.size() != static_cast<std::size_t>(grid.height) * grid.width) {
        throw std::invalid_argument("write_png_gray: inconsistent grid dimensions");
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw parse_error(path + ": cannot open for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw parse_error(path + ": png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw parse_error(path + ": png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw parse_error(path + ": PNG write failed");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(grid.width),
                 static_cast<png_uint_32>(grid.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(grid.width));
    for (int i = 0; i < grid.height; ++i) {
        for (int j = 0; j < grid.width; ++j) {
            double v = grid.at(i, j);
            v = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
            row[static_cast<std::size_t>(j)] = static_cast<png_byte>(v + 0.5);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace slicematch
