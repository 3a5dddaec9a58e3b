#include "gastream/image_io.hpp"

#include "gastream/errors.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

namespace gastream {

namespace {

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo)
{
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

} // namespace

std::uint8_t linear_to_srgb8(float linear)
{
    const double c = std::clamp(static_cast<double>(linear), 0.0, 1.0);
    const double s = c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
    return static_cast<std::uint8_t>(std::lround(s * 255.0));
}

Image8 to_srgb8(const FrameBuffer& fb, bool with_alpha)
{
    Image8 img;
    img.width = fb.width;
    img.height = fb.height;
    img.channels = with_alpha ? 4 : 3;
    img.data.resize(fb.pixel_count() * static_cast<std::size_t>(img.channels));
    for (std::size_t p = 0; p < fb.pixel_count(); ++p) {
        auto* out = img.data.data() + p * static_cast<std::size_t>(img.channels);
        for (int c = 0; c < 3; ++c) out[c] = linear_to_srgb8(fb.rgb[p * 3 + static_cast<std::size_t>(c)]);
        if (with_alpha) {
            const double a = std::clamp(1.0 - static_cast<double>(fb.transmittance[p]), 0.0, 1.0);
            out[3] = static_cast<std::uint8_t>(std::lround(a * 255.0));
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_jpeg(const Image8& image, int quality)
{
    if (quality < 1 || quality > 100) throw ArgumentError("jpeg quality must be in [1, 100]");
    if (image.channels != 3) throw ArgumentError("jpeg encoding expects an RGB image");
    if (image.width <= 0 || image.height <= 0) throw ArgumentError("jpeg encoding needs a non-empty image");

    jpeg_compress_struct cinfo{};
    JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = on_jpeg_error;
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        throw std::runtime_error(std::string("jpeg encode failed: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = static_cast<JDIMENSION>(image.width);
    cinfo.image_height = static_cast<JDIMENSION>(image.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    if (quality >= 90) {
        for (int c = 0; c < cinfo.num_components; ++c) {
            cinfo.comp_info[c].h_samp_factor = 1;
            cinfo.comp_info[c].v_samp_factor = 1;
        }
    }
    jpeg_start_compress(&cinfo, TRUE);
    const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
    while (cinfo.next_scanline < cinfo.image_height) {
        auto* row = const_cast<JSAMPLE*>(image.data.data() + cinfo.next_scanline * stride);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<std::uint8_t> out(buffer, buffer + size);
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return out;
}

Image8 decode_jpeg(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4) throw FormatError("jpeg payload too short");
    jpeg_decompress_struct cinfo{};
    JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = on_jpeg_error;
    Image8 img;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError(std::string("jpeg decode failed: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.channels = 3;
    img.data.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPLE* row = img.data.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

void write_png(const std::filesystem::path& path, const Image8& image)
{
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = image.channels == 4 ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0, nullptr)) {
        throw std::runtime_error("png write failed for " + path.string() + ": " + png.message);
    }
}

namespace {

Image8 read_png(const std::filesystem::path& path)
{
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw FormatError("png read failed for " + path.string() + ": " + png.message);
    const bool alpha = (png.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    png.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    Image8 img;
    img.width = static_cast<int>(png.width);
    img.height = static_cast<int>(png.height);
    img.channels = alpha ? 4 : 3;
    img.data.resize(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, img.data.data(), 0, nullptr)) {
        png_image_free(&png);
        throw FormatError("png decode failed for " + path.string() + ": " + png.message);
    }
    return img;
}

} // namespace

Image8 read_image(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open image " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    static constexpr std::uint8_t png_sig[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::equal(std::begin(png_sig), std::end(png_sig), bytes.begin())) return read_png(path);
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decode_jpeg(bytes);
    throw FormatError("unsupported image format: " + path.string());
}

} // namespace gastream
