#include "n2i/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace n2i {
namespace {

static_assert(std::endian::native == std::endian::little, "raw artifacts assume a little-endian host");

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

double parse_double(const std::string& s, const std::string& path) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error(path + ": bad number '" + s + "'");
    return v;
}

int parse_int(const std::string& s, const std::string& path) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error(path + ": bad integer '" + s + "'");
    return v;
}

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string sidecar_path(const std::string& path) { return path + ".meta"; }

void write_sidecar(const std::string& path, const ArtifactMeta& meta) {
    std::ostringstream o;
    o << "dtype " << meta.dtype << "\nrows " << meta.rows << "\ncols " << meta.cols << "\nslices "
      << meta.slices << "\nstage " << meta.stage << "\nconfig_hash " << meta.config_hash << "\n";
    if (meta.geometry) {
        const Geometry& g = *meta.geometry;
        o << "arc " << format_number(g.arc) << "\ndetector_count " << g.detector_count
          << "\ndetector_pixel_size " << format_number(g.detector_pixel_size) << "\nimage_size "
          << g.image_size << "\nangles";
        for (double a : g.angles) o << ' ' << format_number(a);
        o << "\n";
    }
    write_text(sidecar_path(path), o.str());
}

ArtifactMeta read_sidecar(const std::string& path) {
    const std::string meta_path = sidecar_path(path);
    std::istringstream in(read_text(meta_path));
    ArtifactMeta meta;
    Geometry g;
    bool has_geometry = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        std::string value;
        if (key == "angles") {
            has_geometry = true;
            while (fields >> value) g.angles.push_back(parse_double(value, meta_path));
            continue;
        }
        fields >> value;
        if (key == "dtype") meta.dtype = value;
        else if (key == "rows") meta.rows = parse_int(value, meta_path);
        else if (key == "cols") meta.cols = parse_int(value, meta_path);
        else if (key == "slices") meta.slices = parse_int(value, meta_path);
        else if (key == "stage") meta.stage = value;
        else if (key == "config_hash") meta.config_hash = value;
        else if (key == "arc") { g.arc = parse_double(value, meta_path); has_geometry = true; }
        else if (key == "detector_count") { g.detector_count = parse_int(value, meta_path); has_geometry = true; }
        else if (key == "detector_pixel_size") { g.detector_pixel_size = parse_double(value, meta_path); has_geometry = true; }
        else if (key == "image_size") { g.image_size = parse_int(value, meta_path); has_geometry = true; }
        else throw std::runtime_error(meta_path + ": unknown field '" + key + "'");
    }
    if (has_geometry) {
        if (g.image_size <= 0) throw std::runtime_error(meta_path + ": geometry without image_size");
        g.pixel_size = 2.0 / g.image_size;
        meta.geometry = g;
    }
    return meta;
}

void write_stack(const std::string& path, std::span<const Image> slices, ArtifactMeta meta) {
    if (slices.empty()) throw std::invalid_argument("write_stack: no slices");
    meta.dtype = "float32";
    meta.rows = slices.front().rows();
    meta.cols = slices.front().cols();
    meta.slices = static_cast<int>(slices.size());
    std::vector<float> buffer;
    buffer.reserve(slices.front().size() * slices.size());
    for (const Image& s : slices) {
        if (!s.same_shape(slices.front())) throw std::invalid_argument("write_stack: slice shapes differ");
        for (double v : s.values()) buffer.push_back(static_cast<float>(v));
    }
    auto out = open_out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
    write_sidecar(path, meta);
}

Stack read_stack(const std::string& path) {
    Stack stack;
    stack.meta = read_sidecar(path);
    const ArtifactMeta& m = stack.meta;
    if (m.dtype != "float32") throw std::runtime_error(path + ": unsupported dtype '" + m.dtype + "'");
    if (m.rows <= 0 || m.cols <= 0 || m.slices <= 0) throw std::runtime_error(path + ": bad dimensions");
    const std::size_t per_slice = static_cast<std::size_t>(m.rows) * m.cols;
    std::vector<float> buffer(per_slice * m.slices);
    auto in = open_in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buffer.size() * sizeof(float)) || in.peek() != EOF)
        throw std::runtime_error(path + ": size does not match sidecar");
    for (int s = 0; s < m.slices; ++s) {
        Image img(m.rows, m.cols);
        for (std::size_t i = 0; i < per_slice; ++i) img[i] = buffer[s * per_slice + i];
        stack.slices.push_back(std::move(img));
    }
    return stack;
}

std::vector<Sinogram> stack_sinograms(const Stack& stack) {
    if (!stack.meta.geometry) throw std::runtime_error("artifact has no geometry; not a sinogram");
    const Geometry& g = *stack.meta.geometry;
    if (g.n_angles() != stack.meta.rows || g.detector_count != stack.meta.cols)
        throw std::runtime_error("sinogram shape does not match its geometry");
    std::vector<Sinogram> out;
    for (const Image& s : stack.slices) out.emplace_back(g, s);
    return out;
}

void write_png(const std::string& path, const Image& image, double window_min, double window_max) {
    if (!(window_max > window_min)) throw std::invalid_argument("write_png: empty window");
    std::FILE* file = std::fopen(path.c_str(), "wb");
    if (!file) throw std::runtime_error("cannot write '" + path + "'");
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(file, &std::fclose);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng initialisation failed");
    }
    std::vector<png_byte> row(image.cols());
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng write failed for '" + path + "'");
    }
    png_init_io(png, file);
    png_set_IHDR(png, info, image.cols(), image.rows(), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    // Row 0 holds the smallest y; write top-down so +y points up.
    for (int r = image.rows() - 1; r >= 0; --r) {
        for (int c = 0; c < image.cols(); ++c) {
            const double t = (image(r, c) - window_min) / (window_max - window_min);
            row[c] = static_cast<png_byte>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::string metrics_csv(std::span<const MetricRow> rows) {
    std::string out = "run_id,method,alpha,I0,n_angles,K,strategy,psnr,ssim\n";
    for (const MetricRow& r : rows) {
        out += r.run_id + ',' + r.method + ',' + format_number(r.alpha) + ',' + format_number(r.photon_count) +
               ',' + std::to_string(r.n_angles) + ',' + std::to_string(r.k) + ',' + r.strategy + ',' +
               format_number(r.psnr) + ',' + format_number(r.ssim) + '\n';
    }
    return out;
}

std::string theory_csv(std::span<const TheoryRow> rows) {
    std::string out = "term,estimate,std_error\n";
    for (const TheoryRow& r : rows)
        out += r.term + ',' + format_number(r.estimate) + ',' + format_number(r.std_error) + '\n';
    return out;
}

std::string loss_csv(std::span<const double> epoch_losses) {
    std::string out = "epoch,mean_loss\n";
    for (std::size_t i = 0; i < epoch_losses.size(); ++i)
        out += std::to_string(i + 1) + ',' + format_number(epoch_losses[i]) + '\n';
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
    auto in = open_in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace n2i
