#include "magrep/grid/raster_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace magrep::grid {

namespace {

using nlohmann::json;

void write_sidecar(const Raster& raster, const std::string& raster_path) {
    json meta;
    meta["min"] = raster.min_value();
    meta["max"] = raster.max_value();
    meta["height"] = raster.height;
    meta["width"] = raster.width;
    std::ofstream out(sidecar_path(raster_path), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write sidecar for " + raster_path);
    out << meta.dump(2) << "\n";
}

json read_sidecar(const std::string& raster_path) {
    std::ifstream in(sidecar_path(raster_path));
    if (!in) throw std::runtime_error("missing sidecar " + sidecar_path(raster_path));
    json meta;
    in >> meta;
    return meta;
}

// P5 header: magic, width, height, maxval, single whitespace, then raw rows.
void write_pgm_header(std::ofstream& out, int width, int height, int maxval) {
    out << "P5\n" << width << " " << height << "\n" << maxval << "\n";
}

int read_pgm_token(std::istream& in) {
    // skips whitespace and '#' comments between header tokens
    while (true) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int value = 0;
    in >> value;
    if (!in) throw std::runtime_error("malformed PGM header");
    return value;
}

}  // namespace

std::string sidecar_path(const std::string& raster_path) { return raster_path + ".meta.json"; }

void write_raster_pgm(const Raster& raster, const std::string& path, int bits) {
    raster.validate();
    if (bits != 8 && bits != 16) throw std::runtime_error("PGM bits must be 8 or 16");
    const double lo = raster.min_value();
    const double hi = raster.max_value();
    const double scale = hi > lo ? 1.0 / (hi - lo) : 0.0;
    const int maxval = bits == 8 ? 255 : 65535;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_pgm_header(out, raster.width, raster.height, maxval);
    for (double v : raster.values) {
        const double unit = (v - lo) * scale;
        const auto q = static_cast<std::uint32_t>(std::lround(unit * maxval));
        if (bits == 8) {
            const auto b = static_cast<std::uint8_t>(q);
            out.write(reinterpret_cast<const char*>(&b), 1);
        } else {
            const std::uint8_t be[2] = {static_cast<std::uint8_t>(q >> 8),
                                        static_cast<std::uint8_t>(q & 0xff)};
            out.write(reinterpret_cast<const char*>(be), 2);
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
    out.close();
    write_sidecar(raster, path);
}

Raster read_raster_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("not a binary PGM (P5): " + path);
    const int width = read_pgm_token(in);
    const int height = read_pgm_token(in);
    const int maxval = read_pgm_token(in);
    in.get();  // the single whitespace after maxval
    if (maxval != 255 && maxval != 65535)
        throw std::runtime_error("unsupported PGM maxval " + std::to_string(maxval));

    const json meta = read_sidecar(path);
    const double lo = meta.at("min").get<double>();
    const double hi = meta.at("max").get<double>();
    if (meta.at("height").get<int>() != height || meta.at("width").get<int>() != width)
        throw std::runtime_error("sidecar dims disagree with PGM header: " + path);

    Raster raster(height, width);
    const std::size_t n = raster.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t q = 0;
        if (maxval == 255) {
            std::uint8_t b = 0;
            in.read(reinterpret_cast<char*>(&b), 1);
            q = b;
        } else {
            std::uint8_t be[2];
            in.read(reinterpret_cast<char*>(be), 2);
            q = (std::uint32_t(be[0]) << 8) | be[1];
        }
        raster.values[i] = lo + (hi - lo) * (static_cast<double>(q) / maxval);
    }
    if (!in) throw std::runtime_error("truncated PGM: " + path);
    return raster;
}

void write_raster_f32(const Raster& raster, const std::string& path) {
    raster.validate();
    static_assert(std::endian::native == std::endian::little, "f32 files are little-endian");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (double v : raster.values) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
    out.close();
    write_sidecar(raster, path);
}

Raster read_raster_f32(const std::string& path) {
    const json meta = read_sidecar(path);
    const int height = meta.at("height").get<int>();
    const int width = meta.at("width").get<int>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    Raster raster(height, width);
    for (std::size_t i = 0; i < raster.size(); ++i) {
        float f = 0.0f;
        in.read(reinterpret_cast<char*>(&f), 4);
        raster.values[i] = f;
    }
    if (!in) throw std::runtime_error("truncated f32 raster: " + path);
    raster.validate();
    return raster;
}

void write_labels_pgm(const LabelMap& labels, const std::string& path) {
    labels.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_pgm_header(out, labels.width, labels.height, 255);
    out.write(reinterpret_cast<const char*>(labels.labels.data()),
              static_cast<std::streamsize>(labels.labels.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

LabelMap read_labels_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("not a binary PGM (P5): " + path);
    const int width = read_pgm_token(in);
    const int height = read_pgm_token(in);
    const int maxval = read_pgm_token(in);
    in.get();
    if (maxval != 255) throw std::runtime_error("label PGM must be 8-bit: " + path);
    LabelMap labels(height, width);
    in.read(reinterpret_cast<char*>(labels.labels.data()),
            static_cast<std::streamsize>(labels.labels.size()));
    if (!in) throw std::runtime_error("truncated label PGM: " + path);
    labels.validate();
    return labels;
}

}  // namespace magrep::grid
