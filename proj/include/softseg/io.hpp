#ifndef SOFTSEG_IO_HPP
#define SOFTSEG_IO_HPP

// File formats for the CLI: the SVXB binary container and PGM (P5).
//
// SVXB layout, all integers little-endian:
//   magic "SVXB" | version u8 = 1 | dtype u8 | ndim u8 | 1 pad byte
//   dims        u32 per axis (ndim of them)
//   spacing mm  f32 per spatial axis (ndim, or 3 when ndim = 4)
//   payload     raw row-major, last axis fastest
// dtype codes: 0 = u8, 1 = u16, 2 = f32. A 4-axis file carries a stack whose
// leading axis is the class count C over 3 spatial axes (use a size-1 slice
// axis for 2D stacks). Soft stacks are always stored as f32 so fixtures are
// bit-comparable.

#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "softseg/grid.hpp"
#include "softseg/slic.hpp"
#include "softseg/soften.hpp"

namespace softseg {

// unreadable or malformed input (CLI exit 2)
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// inputs readable but mutually inconsistent (CLI exit 3)
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace vox {

enum Dtype : std::uint8_t { kU8 = 0, kU16 = 1, kF32 = 2 };

struct File {
    Dtype dtype = kU8;
    std::vector<std::uint32_t> dims;  // 2, 3, or 4 axes
    std::vector<float> spacing_mm;    // one per spatial axis
    std::vector<std::uint8_t> payload;

    std::size_t spatial_axes() const { return dims.size() == 4 ? 3 : dims.size(); }
    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::uint32_t d : dims) n *= d;
        return n;
    }
};

inline std::size_t dtype_size(Dtype t) { return t == kF32 ? 4 : (t == kU16 ? 2 : 1); }

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

inline float get_f32(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const File& f) {
    if (f.dims.size() < 2 || f.dims.size() > 4)
        throw IoError("svxb: ndim must be 2, 3, or 4");
    if (f.spacing_mm.size() != f.spatial_axes())
        throw IoError("svxb: spacing entry per spatial axis required");
    if (f.payload.size() != f.element_count() * dtype_size(f.dtype))
        throw IoError("svxb: payload length does not match dims and dtype");
    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 * f.dims.size() + 4 * f.spacing_mm.size() + f.payload.size());
    out.push_back('S');
    out.push_back('V');
    out.push_back('X');
    out.push_back('B');
    out.push_back(1);  // version
    out.push_back(static_cast<std::uint8_t>(f.dtype));
    out.push_back(static_cast<std::uint8_t>(f.dims.size()));
    out.push_back(0);  // pad
    for (std::uint32_t d : f.dims) detail::put_u32(out, d);
    for (float s : f.spacing_mm) detail::put_f32(out, s);
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

inline File deserialize(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "SVXB", 4) != 0)
        throw IoError(origin + ": not an SVXB file (bad magic)");
    if (bytes[4] != 1) throw IoError(origin + ": unsupported SVXB version");
    File f;
    if (bytes[5] > 2) throw IoError(origin + ": unknown dtype code");
    f.dtype = static_cast<Dtype>(bytes[5]);
    const std::size_t ndim = bytes[6];
    if (ndim < 2 || ndim > 4) throw IoError(origin + ": ndim must be 2, 3, or 4");
    const std::size_t n_spatial = ndim == 4 ? 3 : ndim;
    std::size_t off = 8;
    if (bytes.size() < off + 4 * ndim + 4 * n_spatial)
        throw IoError(origin + ": truncated header");
    for (std::size_t a = 0; a < ndim; ++a, off += 4) {
        f.dims.push_back(detail::get_u32(bytes.data() + off));
        if (f.dims.back() == 0) throw IoError(origin + ": zero-sized axis");
    }
    for (std::size_t a = 0; a < n_spatial; ++a, off += 4) {
        f.spacing_mm.push_back(detail::get_f32(bytes.data() + off));
        if (!(f.spacing_mm.back() > 0.0f)) throw IoError(origin + ": spacing must be > 0");
    }
    const std::size_t expect = f.element_count() * dtype_size(f.dtype);
    if (bytes.size() - off != expect)
        throw IoError(origin + ": payload length does not match dims and dtype");
    f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off), bytes.end());
    return f;
}

inline File read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize(bytes, path);
}

inline void write(const std::string& path, const File& f) {
    const std::vector<std::uint8_t> bytes = serialize(f);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

// -- typed converters ------------------------------------------------------

inline AxisSizes spatial_dims(const File& f) {
    AxisSizes dims;
    const std::size_t lead = f.dims.size() == 4 ? 1 : 0;
    for (std::size_t a = lead; a < f.dims.size(); ++a) dims.push_back(f.dims[a]);
    return dims;
}

inline AxisSpacing spacing_of(const File& f) {
    return AxisSpacing(f.spacing_mm.begin(), f.spacing_mm.end());
}

inline double element_as_double(const File& f, std::size_t i) {
    switch (f.dtype) {
        case kU8:
            return f.payload[i];
        case kU16:
            return static_cast<double>(f.payload[2 * i] |
                                       (static_cast<std::uint16_t>(f.payload[2 * i + 1]) << 8));
        default:
            return detail::get_f32(f.payload.data() + 4 * i);
    }
}

// scalar image or volume (2- or 3-axis file), raw values
inline Grid<double> to_scalar_grid(const File& f, const std::string& origin) {
    if (f.dims.size() == 4) throw IoError(origin + ": expected a scalar image, got a 4-axis stack");
    Grid<double> g(spatial_dims(f), 0.0, spacing_of(f));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = element_as_double(f, i);
    return g;
}

// multi-channel input: 4-axis file becomes one channel per leading-axis slice
inline std::vector<Grid<double>> to_channels(const File& f, const std::string& origin) {
    if (f.dims.size() != 4) return {to_scalar_grid(f, origin)};
    AxisSizes dims = spatial_dims(f);
    std::vector<Grid<double>> channels;
    const std::size_t plane = Grid<double>::element_count(dims);
    for (std::uint32_t c = 0; c < f.dims[0]; ++c) {
        Grid<double> g(dims, 0.0, spacing_of(f));
        for (std::size_t i = 0; i < plane; ++i) g[i] = element_as_double(f, c * plane + i);
        channels.push_back(std::move(g));
    }
    return channels;
}

inline LabelMap to_label_map(const File& f, std::int32_t num_classes, const std::string& origin) {
    if (f.dims.size() == 4) throw IoError(origin + ": label maps must be 2- or 3-axis files");
    if (f.dtype == kF32) throw IoError(origin + ": label maps must be u8 or u16");
    LabelMap map;
    map.num_classes = num_classes;
    map.labels = Grid<std::int32_t>(spatial_dims(f), 0, spacing_of(f));
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        const double v = element_as_double(f, i);
        if (v >= num_classes)
            throw DataError(origin + ": label value " + std::to_string(static_cast<long>(v)) +
                            " inconsistent with --classes " + std::to_string(num_classes));
        map.labels[i] = static_cast<std::int32_t>(v);
    }
    return map;
}

inline SuperpixelMap to_superpixel_map(const File& f, const std::string& origin) {
    if (f.dims.size() == 4) throw IoError(origin + ": superpixel maps must be 2- or 3-axis files");
    SuperpixelMap sp;
    sp.block_ids = Grid<std::int32_t>(spatial_dims(f), 0, spacing_of(f));
    std::int32_t max_id = -1;
    for (std::size_t i = 0; i < sp.block_ids.size(); ++i) {
        const double v = element_as_double(f, i);
        const auto id = static_cast<std::int32_t>(v);
        if (id < 0 || static_cast<double>(id) != v)
            throw IoError(origin + ": non-integer superpixel id");
        sp.block_ids[i] = id;
        max_id = std::max(max_id, id);
    }
    sp.num_blocks = max_id + 1;
    std::vector<bool> seen(static_cast<std::size_t>(sp.num_blocks), false);
    for (std::size_t i = 0; i < sp.block_ids.size(); ++i)
        seen[static_cast<std::size_t>(sp.block_ids[i])] = true;
    for (bool s : seen)
        if (!s) throw DataError(origin + ": superpixel ids are not a contiguous range");
    return sp;
}

template <typename T>
std::vector<std::uint32_t> dims_u32(const Grid<T>& g) {
    return std::vector<std::uint32_t>(g.dims().begin(), g.dims().end());
}

template <typename T>
std::vector<float> spacing_f32(const Grid<T>& g) {
    return std::vector<float>(g.spacing().begin(), g.spacing().end());
}

inline File from_label_map(const LabelMap& map) {
    File f;
    f.dims = dims_u32(map.labels);
    f.spacing_mm = spacing_f32(map.labels);
    if (map.num_classes <= 256) {
        f.dtype = kU8;
        for (std::size_t i = 0; i < map.labels.size(); ++i)
            f.payload.push_back(static_cast<std::uint8_t>(map.labels[i]));
    } else {
        f.dtype = kU16;
        for (std::size_t i = 0; i < map.labels.size(); ++i) {
            const auto v = static_cast<std::uint16_t>(map.labels[i]);
            f.payload.push_back(static_cast<std::uint8_t>(v));
            f.payload.push_back(static_cast<std::uint8_t>(v >> 8));
        }
    }
    return f;
}

// u16 when the block count fits, otherwise ids stored exactly in f32
inline File from_superpixel_map(const SuperpixelMap& sp) {
    File f;
    f.dims = dims_u32(sp.block_ids);
    f.spacing_mm = spacing_f32(sp.block_ids);
    if (sp.num_blocks <= 65536) {
        f.dtype = kU16;
        for (std::size_t i = 0; i < sp.block_ids.size(); ++i) {
            const auto v = static_cast<std::uint16_t>(sp.block_ids[i]);
            f.payload.push_back(static_cast<std::uint8_t>(v));
            f.payload.push_back(static_cast<std::uint8_t>(v >> 8));
        }
    } else {
        f.dtype = kF32;
        for (std::size_t i = 0; i < sp.block_ids.size(); ++i)
            detail::put_f32(f.payload, static_cast<float>(sp.block_ids[i]));
    }
    return f;
}

// 4-axis f32 stack, leading axis C, 2D planes padded with a size-1 slice axis
inline File from_soft_stack(const SoftLabelStack& stack) {
    File f;
    f.dtype = kF32;
    const auto& g0 = stack.planes.front();
    f.dims.push_back(static_cast<std::uint32_t>(stack.planes.size()));
    if (g0.ndim() == 2) {
        f.dims.push_back(1);
        f.spacing_mm.push_back(1.0f);
    }
    for (std::size_t a = 0; a < g0.ndim(); ++a) {
        f.dims.push_back(static_cast<std::uint32_t>(g0.dims()[a]));
        f.spacing_mm.push_back(static_cast<float>(g0.spacing()[a]));
    }
    for (const auto& plane : stack.planes)
        for (std::size_t i = 0; i < plane.size(); ++i)
            detail::put_f32(f.payload, static_cast<float>(plane[i]));
    return f;
}

inline SoftLabelStack to_soft_stack(const File& f, const std::string& origin) {
    if (f.dims.size() != 4 || f.dtype != kF32)
        throw IoError(origin + ": soft stacks are 4-axis f32 files");
    SoftLabelStack stack;
    AxisSizes dims = spatial_dims(f);
    const std::size_t plane = Grid<double>::element_count(dims);
    for (std::uint32_t c = 0; c < f.dims[0]; ++c) {
        Grid<double> g(dims, 0.0, spacing_of(f));
        for (std::size_t i = 0; i < plane; ++i) g[i] = element_as_double(f, c * plane + i);
        stack.planes.push_back(std::move(g));
    }
    return stack;
}

}  // namespace vox

// -- PGM (P5) --------------------------------------------------------------

namespace pgm {

namespace detail {

inline int next_token(std::istream& in) {
    // skips whitespace and '#' comments, returns the next integer
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    return value;
}

}  // namespace detail

inline Grid<std::uint16_t> read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0).get(m1);
    if (m0 != 'P' || m1 != '5') throw IoError(path + ": not a binary PGM (P5) file");
    const int width = detail::next_token(in);
    const int height = detail::next_token(in);
    const int maxval = detail::next_token(in);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw IoError(path + ": malformed PGM header");
    in.get();  // single whitespace before the raster
    Grid<std::uint16_t> g({static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
    const bool two_byte = maxval > 255;
    for (std::size_t i = 0; i < g.size(); ++i) {
        int hi = in.get();
        if (two_byte) {
            const int lo = in.get();
            if (lo == EOF) hi = EOF;
            g[i] = static_cast<std::uint16_t>((hi << 8) | lo);  // PGM raster is big-endian
        } else {
            g[i] = static_cast<std::uint16_t>(hi);
        }
        if (hi == EOF) throw IoError(path + ": truncated PGM raster");
    }
    return g;
}

inline void write(const std::string& path, const Grid<std::uint8_t>& g) {
    if (g.ndim() != 2) throw IoError("pgm: only 2D grids can be written");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "P5\n" << g.dims()[1] << " " << g.dims()[0] << "\n255\n";
    out.write(reinterpret_cast<const char*>(g.values().data()),
              static_cast<std::streamsize>(g.size()));
    if (!out) throw IoError("short write to " + path);
}

}  // namespace pgm

}  // namespace softseg

#endif  // SOFTSEG_IO_HPP
