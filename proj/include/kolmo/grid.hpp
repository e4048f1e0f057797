#pragma once

// Uniform 2D grid functions, space-time series of them, and their on-disk
// format: a little binary header ("KGRD"), raw f64 data, a JSON sidecar and
// CSV slice export.

#include <kolmo/errors.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace kolmo {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    double length() const { return hi - lo; }
};

// Nodal grid including both end points; row-major with x fastest.
struct Grid2 {
    std::size_t nx = 0, ny = 0;
    Interval x, y;
    std::vector<double> data;

    Grid2() = default;
    Grid2(std::size_t nx_, std::size_t ny_, Interval x_, Interval y_, double fill = 0.0)
        : nx(nx_), ny(ny_), x(x_), y(y_), data(nx_ * ny_, fill) {
        if (nx < 2 || ny < 2) throw GridMismatch("Grid2: need at least two nodes per axis");
        if (!(x.hi > x.lo) || !(y.hi > y.lo)) throw GridMismatch("Grid2: empty range");
    }

    double hx() const { return x.length() / static_cast<double>(nx - 1); }
    double hy() const { return y.length() / static_cast<double>(ny - 1); }
    double xc(std::size_t i) const { return x.lo + static_cast<double>(i) * hx(); }
    double yc(std::size_t j) const { return y.lo + static_cast<double>(j) * hy(); }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
    double& operator()(std::size_t i, std::size_t j) { return data[index(i, j)]; }
    double operator()(std::size_t i, std::size_t j) const { return data[index(i, j)]; }

    bool same_layout(const Grid2& o) const {
        return nx == o.nx && ny == o.ny && x.lo == o.x.lo && x.hi == o.x.hi && y.lo == o.y.lo &&
               y.hi == o.y.hi;
    }

    // Trapezoid-weighted sum (integral over the box).
    double integral() const {
        double s = 0.0;
        for (std::size_t j = 0; j < ny; ++j) {
            const double wy = (j == 0 || j + 1 == ny) ? 0.5 : 1.0;
            double row = 0.0;
            for (std::size_t i = 0; i < nx; ++i) {
                const double wx = (i == 0 || i + 1 == nx) ? 0.5 : 1.0;
                row += wx * (*this)(i, j);
            }
            s += wy * row;
        }
        return s * hx() * hy();
    }

    // Bilinear interpolation; zero outside the box.
    double sample(double px, double py) const {
        if (px < x.lo || px > x.hi || py < y.lo || py > y.hi) return 0.0;
        const double fx = (px - x.lo) / hx();
        const double fy = (py - y.lo) / hy();
        std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(fx), nx - 2);
        std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(fy), ny - 2);
        const double ax = fx - static_cast<double>(i), ay = fy - static_cast<double>(j);
        return (1 - ax) * (1 - ay) * (*this)(i, j) + ax * (1 - ay) * (*this)(i + 1, j) +
               (1 - ax) * ay * (*this)(i, j + 1) + ax * ay * (*this)(i + 1, j + 1);
    }
};

inline void require_same_layout(const Grid2& a, const Grid2& b, const char* what) {
    if (!a.same_layout(b)) throw GridMismatch(std::string(what) + ": grid layouts differ");
}

// Trapezoid-weighted L1 distance between two grids of equal layout.
inline double l1_distance(const Grid2& a, const Grid2& b) {
    require_same_layout(a, b, "l1_distance");
    Grid2 d = a;
    for (std::size_t k = 0; k < d.data.size(); ++k) d.data[k] = std::abs(a.data[k] - b.data[k]);
    return d.integral();
}

inline double l1_norm(const Grid2& a) {
    Grid2 d = a;
    for (double& v : d.data) v = std::abs(v);
    return d.integral();
}

// Snapshots of a grid function at increasing times.
struct GridSeries {
    std::vector<double> times;
    std::vector<Grid2> slices;

    std::size_t size() const { return slices.size(); }
    const Grid2& back() const { return slices.back(); }
};

// Discretisation of [x] x [y] x [t]. For L-kind problems the first axis is
// w = log x.
struct GridSpec {
    Interval x_range{-1.0, 1.0};
    Interval y_range{-1.0, 1.0};
    Interval t_range{0.0, 1.0};
    std::size_t nx = 65, ny = 65, nt = 64;

    double hx() const { return x_range.length() / static_cast<double>(nx - 1); }
    double hy() const { return y_range.length() / static_cast<double>(ny - 1); }
    double dt() const { return t_range.length() / static_cast<double>(nt); }
    Grid2 make_grid(double fill = 0.0) const { return Grid2(nx, ny, x_range, y_range, fill); }
};

// ---- serialisation -------------------------------------------------------

namespace io {

constexpr char kMagic[4] = {'K', 'G', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kEndianTag = 0x01020304;

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw GridMismatch("grid file truncated");
    return v;
}

}  // namespace io

// Header: magic, version, endian tag, nx, ny, n_slices, x/y ranges, times.
inline void write_series(const std::string& path, const GridSeries& s) {
    if (s.slices.empty()) throw GridMismatch("write_series: empty series");
    const Grid2& g0 = s.slices.front();
    for (const auto& g : s.slices) require_same_layout(g0, g, "write_series");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.write(io::kMagic, 4);
    io::put(os, io::kVersion);
    io::put(os, io::kEndianTag);
    io::put(os, static_cast<std::uint64_t>(g0.nx));
    io::put(os, static_cast<std::uint64_t>(g0.ny));
    io::put(os, static_cast<std::uint64_t>(s.slices.size()));
    io::put(os, g0.x.lo);
    io::put(os, g0.x.hi);
    io::put(os, g0.y.lo);
    io::put(os, g0.y.hi);
    for (double t : s.times) io::put(os, t);
    for (const auto& g : s.slices)
        os.write(reinterpret_cast<const char*>(g.data.data()),
                 static_cast<std::streamsize>(g.data.size() * sizeof(double)));
}

inline GridSeries read_series(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, io::kMagic, 4) != 0) throw GridMismatch("read_series: bad magic");
    if (io::get<std::uint32_t>(is) != io::kVersion) throw GridMismatch("read_series: unsupported version");
    if (io::get<std::uint32_t>(is) != io::kEndianTag) throw GridMismatch("read_series: foreign endianness");
    const auto nx = io::get<std::uint64_t>(is);
    const auto ny = io::get<std::uint64_t>(is);
    const auto ns = io::get<std::uint64_t>(is);
    Interval xr{io::get<double>(is), io::get<double>(is)};
    Interval yr{io::get<double>(is), io::get<double>(is)};
    GridSeries s;
    for (std::uint64_t k = 0; k < ns; ++k) s.times.push_back(io::get<double>(is));
    for (std::uint64_t k = 0; k < ns; ++k) {
        Grid2 g(nx, ny, xr, yr);
        is.read(reinterpret_cast<char*>(g.data.data()), static_cast<std::streamsize>(g.data.size() * sizeof(double)));
        if (!is) throw GridMismatch("read_series: truncated data");
        s.slices.push_back(std::move(g));
    }
    return s;
}

inline void write_sidecar(const std::string& path, const GridSeries& s, const nlohmann::json& extra) {
    nlohmann::json j = extra;
    const Grid2& g = s.slices.front();
    j["format"] = "KGRD";
    j["version"] = io::kVersion;
    j["layout"] = "row-major, x fastest";
    j["nx"] = g.nx;
    j["ny"] = g.ny;
    j["x_range"] = {g.x.lo, g.x.hi};
    j["y_range"] = {g.y.lo, g.y.hi};
    j["times"] = s.times;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << j.dump(2) << '\n';
}

// CSV with header "x,y,value".
inline void write_slice_csv(std::ostream& os, const Grid2& g) {
    os << "x,y,value\n" << std::setprecision(17);
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) os << g.xc(i) << ',' << g.yc(j) << ',' << g(i, j) << '\n';
}

}  // namespace kolmo
