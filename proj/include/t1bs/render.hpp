#ifndef T1BS_RENDER_HPP
#define T1BS_RENDER_HPP

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "t1bs/acquisition.hpp"
#include "t1bs/evaluation.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

inline void write_pgm(const std::string& path, std::size_t width, std::size_t height,
                      const std::vector<unsigned char>& pixels)
{
    if (pixels.size() != width * height) throw ValidationError("pixel buffer size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ComputeError("cannot write file: " + path);
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw ComputeError("write failed: " + path);
}

inline void write_ppm(const std::string& path, std::size_t width, std::size_t height,
                      const std::vector<unsigned char>& rgb)
{
    if (rgb.size() != width * height * 3) throw ValidationError("pixel buffer size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ComputeError("cannot write file: " + path);
    out << "P6\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!out) throw ComputeError("write failed: " + path);
}

/// Linear window of v over [lo, hi] to a byte.
inline unsigned char window_to_byte(double v, double lo, double hi)
{
    double t = (v - lo) / (hi - lo);
    if (t < 0.0) t = 0.0;
    if (t > 1.0) t = 1.0;
    return static_cast<unsigned char>(std::lround(255.0 * t));
}

struct SliceGeometry {
    int axis = 2;  // 0=x, 1=y, 2=z
    std::size_t index = 0;
    std::size_t width = 0, height = 0;
};

namespace detail {

inline SliceGeometry slice_geometry(const VolumeMask& mask, int axis, std::size_t slice)
{
    SliceGeometry g;
    g.axis = axis;
    g.index = slice;
    switch (axis) {
        case 0:
            if (slice >= mask.nx) throw ValidationError("slice index out of range on x axis");
            g.width = mask.ny;
            g.height = mask.nz;
            break;
        case 1:
            if (slice >= mask.ny) throw ValidationError("slice index out of range on y axis");
            g.width = mask.nx;
            g.height = mask.nz;
            break;
        case 2:
            if (slice >= mask.nz) throw ValidationError("slice index out of range on z axis");
            g.width = mask.nx;
            g.height = mask.ny;
            break;
        default:
            throw ValidationError("slice axis must be 0, 1, or 2");
    }
    return g;
}

inline std::size_t pixel_to_linear(const VolumeMask& mask, const SliceGeometry& g, std::size_t px,
                                   std::size_t py)
{
    std::size_t x = 0, y = 0, z = 0;
    switch (g.axis) {
        case 0: x = g.index, y = px, z = py; break;
        case 1: x = px, y = g.index, z = py; break;
        default: x = px, y = py, z = g.index; break;
    }
    return x + mask.nx * (y + mask.ny * z);
}

}  // namespace detail

/// One greyscale map per scalar parameter (linearly windowed over its
/// bounds), one DEC colour map weighted by f, and a CSV of the slice's
/// in-mask parameter values. Out-of-mask pixels are black. Parameter rows
/// pair positionally with mask indices.
inline std::vector<std::string> render_maps(const std::vector<TissueParams>& params,
                                            const VolumeMask& mask, int axis, std::size_t slice,
                                            const ParamBounds& bounds, const std::string& out_dir)
{
    if (params.size() != mask.indices.size())
        throw ValidationError("parameter rows do not match mask size");
    const SliceGeometry g = detail::slice_geometry(mask, axis, slice);

    // voxel linear index -> row in params, for this slice only
    std::vector<std::ptrdiff_t> row_of(mask.volume(), -1);
    for (std::size_t i = 0; i < mask.indices.size(); ++i)
        row_of[mask.indices[i]] = static_cast<std::ptrdiff_t>(i);

    std::vector<std::string> written;
    const std::string prefix = out_dir.empty() ? std::string() : out_dir + "/";

    for (int p = 0; p < kNumScalarParams; ++p) {
        std::vector<unsigned char> img(g.width * g.height, 0);
        for (std::size_t py = 0; py < g.height; ++py)
            for (std::size_t px = 0; px < g.width; ++px) {
                const std::ptrdiff_t row = row_of[detail::pixel_to_linear(mask, g, px, py)];
                if (row < 0) continue;
                img[py * g.width + px] = window_to_byte(
                    params[static_cast<std::size_t>(row)][p], bounds.lo[p], bounds.hi[p]);
            }
        const std::string path = prefix + "map_" + kParamNames[p] + ".pgm";
        write_pgm(path, g.width, g.height, img);
        written.push_back(path);
    }

    std::vector<unsigned char> rgb(g.width * g.height * 3, 0);
    for (std::size_t py = 0; py < g.height; ++py)
        for (std::size_t px = 0; px < g.width; ++px) {
            const std::ptrdiff_t row = row_of[detail::pixel_to_linear(mask, g, px, py)];
            if (row < 0) continue;
            const TissueParams& t = params[static_cast<std::size_t>(row)];
            double w = t.f;
            if (w < 0.0) w = 0.0;
            if (w > 1.0) w = 1.0;
            const Rgb c = dec_color(t.theta, t.phi, w);
            unsigned char* px3 = &rgb[(py * g.width + px) * 3];
            px3[0] = c.r;
            px3[1] = c.g;
            px3[2] = c.b;
        }
    const std::string dec_path = prefix + "map_dec.ppm";
    write_ppm(dec_path, g.width, g.height, rgb);
    written.push_back(dec_path);

    std::ostringstream csv;
    csv << "x,y,z,voxel";
    for (int p = 0; p < kNumParams; ++p) csv << ',' << kParamNames[p];
    csv << '\n';
    for (std::size_t py = 0; py < g.height; ++py)
        for (std::size_t px = 0; px < g.width; ++px) {
            const std::size_t linear = detail::pixel_to_linear(mask, g, px, py);
            const std::ptrdiff_t row = row_of[linear];
            if (row < 0) continue;
            std::size_t x = linear % mask.nx;
            std::size_t y = (linear / mask.nx) % mask.ny;
            std::size_t z = linear / (mask.nx * mask.ny);
            csv << x << ',' << y << ',' << z << ',' << linear;
            const auto a = params[static_cast<std::size_t>(row)].as_array();
            for (int p = 0; p < kNumParams; ++p) csv << ',' << format_double(a[p]);
            csv << '\n';
        }
    const std::string csv_path = prefix + "slice.csv";
    write_text_file(csv_path, csv.str());
    written.push_back(csv_path);
    return written;
}

}  // namespace t1bs

#endif  // T1BS_RENDER_HPP
