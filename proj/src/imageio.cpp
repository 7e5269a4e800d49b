#include "mufia/imageio.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "mufia/fsio.hpp"
#include "mufia/rng.hpp"

namespace mufia {

namespace {

struct FileHandle {
    std::FILE* fp = nullptr;
    explicit FileHandle(const std::string& path, const char* mode) : fp(std::fopen(path.c_str(), mode)) {}
    ~FileHandle() {
        if (fp) std::fclose(fp);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

}  // namespace

Image load_png(const std::string& path) {
    FileHandle file(path, "rb");
    if (!file.fp) throw std::runtime_error("cannot open PNG: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }

    std::vector<png_byte> data;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("corrupt or unreadable PNG: " + path);
    }

    png_init_io(png, file.fp);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth != 8 || (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_RGB_ALPHA)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unsupported PNG (need 8-bit RGB or RGBA): " + path);
    }

    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    data.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = data.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const int channels = (color_type == PNG_COLOR_TYPE_RGB_ALPHA) ? 4 : 3;
    Image img(static_cast<int>(height), static_cast<int>(width));
    for (png_uint_32 y = 0; y < height; ++y) {
        const png_byte* row = data.data() + y * rowbytes;
        for (png_uint_32 x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(static_cast<int>(y), static_cast<int>(x), c) =
                    static_cast<float>(row[x * channels + c]) / 255.0f;
            }
        }
    }
    return img;
}

namespace {

std::uint8_t quantize_unit(float v) {
    double x = static_cast<double>(v);
    if (x < 0.0) x = 0.0;
    if (x > 1.0) x = 1.0;
    return static_cast<std::uint8_t>(std::floor(x * 255.0 + 0.5));
}

}  // namespace

void save_png(const Image& image, const std::string& path) {
    require(image.height >= 1 && image.width >= 1, "save_png: empty image");

    const std::string tmp = path + ".tmp";
    FileHandle file(tmp, "wb");
    if (!file.fp) throw std::runtime_error("cannot open PNG for writing: " + tmp);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }

    std::vector<png_byte> data(static_cast<std::size_t>(image.height) * image.width * 3);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c)
                data[(static_cast<std::size_t>(y) * image.width + x) * 3 + c] =
                    quantize_unit(image.at(y, x, c));

    std::vector<png_bytep> rows(image.height);
    for (int y = 0; y < image.height; ++y)
        rows[y] = data.data() + static_cast<std::size_t>(y) * image.width * 3;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::remove(tmp.c_str());
        throw std::runtime_error("PNG write failed: " + path);
    }

    png_init_io(png, file.fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);

    std::fflush(file.fp);
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("rename failed: " + path);
    }
}

LabeledDataset load_cifar10_binary(const std::string& path) {
    constexpr std::size_t kRecordBytes = 3073;
    constexpr int kSide = 32;
    constexpr std::size_t kPlane = kSide * kSide;

    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.empty() || bytes.size() % kRecordBytes != 0)
        throw std::runtime_error("CIFAR-10 file length is not a multiple of 3073: " + path);

    const std::size_t count = bytes.size() / kRecordBytes;
    LabeledDataset ds;
    ds.num_classes = 10;
    ds.images.reserve(count);
    ds.labels.reserve(count);

    for (std::size_t r = 0; r < count; ++r) {
        const std::uint8_t* rec = bytes.data() + r * kRecordBytes;
        if (rec[0] >= 10)
            throw std::runtime_error("CIFAR-10 label byte out of range in " + path);
        ds.labels.push_back(rec[0]);

        Image img(kSide, kSide);
        const std::uint8_t* planes = rec + 1;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < kSide; ++y)
                for (int x = 0; x < kSide; ++x)
                    img.at(y, x, c) =
                        static_cast<float>(planes[c * kPlane + y * kSide + x]) / 255.0f;
        ds.images.push_back(std::move(img));
    }
    return ds;
}

namespace {

// Template value in [0,1] for one of the five class patterns. The phase
// shifts the pattern spatially without changing its frequency signature.
double class_template(int template_idx, int freq_scale, int x, int y, int side, double phase) {
    const double pi = 3.14159265358979323846;
    const double f = 3.0 * freq_scale;
    switch (template_idx) {
        case 0:
            return 0.5;
        case 1:
            return 0.5 + 0.5 * std::sin(2.0 * pi * (f * (x + 0.5) / side + phase));
        case 2:
            return 0.5 + 0.5 * std::sin(2.0 * pi * (f * (y + 0.5) / side + phase));
        case 3:
            return 0.5 + 0.5 * std::sin(pi * f * (x + y + 1.0) / side + 2.0 * pi * phase);
        default: {
            int cell = side / (4 * freq_scale);
            if (cell < 1) cell = 1;
            const int shift = static_cast<int>(phase * 2.0 * cell);
            return (((x + shift) / cell + (y + shift) / cell) % 2 == 0) ? 0.0 : 1.0;
        }
    }
}

}  // namespace

LabeledDataset generate_synthetic_dataset(int num_classes, int samples_per_class,
                                          int side, std::uint64_t seed,
                                          double noise_amplitude) {
    require(num_classes >= 2, "generate_synthetic_dataset: num_classes must be >= 2");
    require(samples_per_class >= 1, "generate_synthetic_dataset: samples_per_class must be >= 1");
    require(side >= 8, "generate_synthetic_dataset: side must be >= 8");

    std::mt19937_64 rng(seed);
    LabeledDataset ds;
    ds.num_classes = num_classes;
    ds.images.reserve(static_cast<std::size_t>(num_classes) * samples_per_class);
    ds.labels.reserve(ds.images.capacity());

    for (int c = 0; c < num_classes; ++c) {
        const int template_idx = c % 5;
        const int freq_scale = c / 5 + 1;
        for (int s = 0; s < samples_per_class; ++s) {
            double base[3];
            for (double& b : base) b = uniform_range(rng, 0.30, 0.70);
            // per-sample contrast and phase give each class a spread of easy
            // and faint examples instead of identical prototypes
            const double contrast = uniform_range(rng, 0.10, 0.28);
            const double phase = uniform_unit(rng);

            Image img(side, side);
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) {
                    const double t = class_template(template_idx, freq_scale, x, y, side, phase);
                    const double noise = uniform_range(rng, -1.0, 1.0) * noise_amplitude;
                    for (int ch = 0; ch < 3; ++ch) {
                        double v = base[ch] + contrast * 2.0 * (t - 0.5) + noise;
                        if (v < 0.0) v = 0.0;
                        if (v > 1.0) v = 1.0;
                        img.at(y, x, ch) = static_cast<float>(v);
                    }
                }
            }
            ds.images.push_back(std::move(img));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

std::pair<LabeledDataset, LabeledDataset> split_per_class(const LabeledDataset& ds,
                                                          double first_fraction) {
    require(first_fraction >= 0.0 && first_fraction <= 1.0, "split fraction out of range");

    std::vector<std::size_t> class_count(ds.num_classes, 0);
    for (int label : ds.labels) class_count[label]++;
    std::vector<std::size_t> first_quota(ds.num_classes);
    for (int c = 0; c < ds.num_classes; ++c)
        first_quota[c] = static_cast<std::size_t>(
            std::llround(first_fraction * static_cast<double>(class_count[c])));

    LabeledDataset a, b;
    a.num_classes = b.num_classes = ds.num_classes;
    std::vector<std::size_t> seen(ds.num_classes, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int label = ds.labels[i];
        LabeledDataset& dst = (seen[label] < first_quota[label]) ? a : b;
        dst.images.push_back(ds.images[i]);
        dst.labels.push_back(label);
        seen[label]++;
    }
    return {std::move(a), std::move(b)};
}

}  // namespace mufia
