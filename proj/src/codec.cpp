#include "dermprep/codec.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

#include "dermprep/errors.hpp"

namespace dermprep {

namespace {

struct FileCloser {
    std::FILE* fp = nullptr;
    ~FileCloser() {
        if (fp) std::fclose(fp);
    }
};

ImageBuffer load_png_file(std::FILE* fp, const std::string& name) {
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed");
    }

    ImageBuffer img;
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG decode failed: " + name);
    }

    png_init_io(png, fp);
    png_read_info(png, info);

    png_set_expand(png);        // palette / low-depth / tRNS to full pixels
    png_set_strip_16(png);
    png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    if (png_get_channels(png, info) != 3 || png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG layout: " + name);
    }

    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.data.resize(static_cast<std::size_t>(width) * height * 3);
    row_ptrs.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        row_ptrs[y] = img.data.data() + static_cast<std::size_t>(y) * width * 3;
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void jpeg_silent_emit(j_common_ptr, int) {}

ImageBuffer load_jpeg_file(std::FILE* fp, const std::string& name) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    err.pub.emit_message = jpeg_silent_emit;

    ImageBuffer img;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("JPEG decode failed: " + name + " (" + err.message + ")");
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.data.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.data.data() +
                       static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

}  // namespace

ImageBuffer load_image(const std::filesystem::path& path) {
    FileCloser file;
    file.fp = std::fopen(path.string().c_str(), "rb");
    if (!file.fp) throw IoError("cannot open image: " + path.string());

    unsigned char magic[8] = {};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), file.fp);
    std::rewind(file.fp);

    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n',
                                             0x1a, '\n'};
    if (got >= 8 && std::memcmp(magic, png_sig, 8) == 0) {
        return load_png_file(file.fp, path.string());
    }
    if (got >= 2 && magic[0] == 0xff && magic[1] == 0xd8) {
        return load_jpeg_file(file.fp, path.string());
    }
    throw IoError("unrecognized image format: " + path.string());
}

void save_png(const ImageBuffer& img, const std::filesystem::path& path) {
    if (!img.valid()) throw DataError("invalid image buffer");
    FileCloser file;
    file.fp = std::fopen(path.string().c_str(), "wb");
    if (!file.fp) throw IoError("cannot create file: " + path.string());

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }

    std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(img.height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode failed: " + path.string());
    }

    png_init_io(png, file.fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);

    for (int y = 0; y < img.height; ++y) {
        row_ptrs[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(img.pixel(0, y));
    }
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

}  // namespace dermprep
