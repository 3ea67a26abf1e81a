#include "bnls/snapshot_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/os.h>

namespace bnls {
namespace {

constexpr std::array<char, 8> kMagic{'B', 'N', 'L', 'S', 'F', 'L', 'D', '\0'};

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    template <class T>
    void put(T v) {
        v = to_little(v);
        out_.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void put_bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
    void finish() {
        out_.close();
        if (!out_) throw std::runtime_error("write failed: " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw FormatError("cannot open " + path.string());
    }
    template <class T>
    T get() {
        T v;
        in_.read(reinterpret_cast<char*>(&v), sizeof v);
        if (in_.gcount() != sizeof v) throw FormatError(path_.string() + ": truncated");
        return to_little(v);
    }
    void expect_end() {
        if (in_.peek() != std::char_traits<char>::eof()) throw FormatError(path_.string() + ": trailing bytes");
    }

private:
    std::filesystem::path path_;
    std::ifstream in_;
};

struct Header {
    std::uint32_t version = 0;
    int dim = 0;
    std::uint64_t n = 0;
    double r_max = 0.0, sigma = 0.0, t = 0.0;
};

void put_header(Writer& w, std::uint32_t version, int dim, std::size_t n, double r_max, double sigma, double t) {
    w.put_bytes(kMagic.data(), kMagic.size());
    w.put<std::uint32_t>(version);
    w.put<std::int32_t>(dim);
    w.put<std::uint64_t>(n);
    w.put(r_max);
    w.put(sigma);
    w.put(t);
}

Header get_header(Reader& r, const std::filesystem::path& path) {
    std::array<char, 8> magic{};
    for (auto& c : magic) c = r.get<char>();
    if (magic != kMagic) throw FormatError(path.string() + ": not a field file");
    Header h;
    h.version = r.get<std::uint32_t>();
    if (h.version != kFieldFormatUniform && h.version != kFieldFormatRadii)
        throw FormatError(fmt::format("{}: unsupported version {}", path.string(), h.version));
    h.dim = r.get<std::int32_t>();
    h.n = r.get<std::uint64_t>();
    h.r_max = r.get<double>();
    h.sigma = r.get<double>();
    h.t = r.get<double>();
    // Guards the allocation below against corrupt sizes.
    if (h.dim < 1 || h.n == 0 || h.n > (std::uint64_t{1} << 32))
        throw FormatError(path.string() + ": corrupt header");
    return h;
}

void put_values(Writer& w, std::span<const cplx> v) {
    for (const auto& z : v) {
        w.put(z.real());
        w.put(z.imag());
    }
}

std::vector<cplx> get_values(Reader& r, std::size_t n) {
    std::vector<cplx> v(n);
    for (auto& z : v) {
        const double re = r.get<double>();
        z = {re, r.get<double>()};
    }
    return v;
}

}  // namespace

void write_field(const std::filesystem::path& path, const ComplexField& field, double sigma, double t) {
    Writer w(path);
    const auto& g = field.grid();
    put_header(w, kFieldFormatUniform, g.dim(), static_cast<std::size_t>(g.size()), g.r_max(), sigma, t);
    put_values(w, field.values());
    w.finish();
}

FieldFile read_field(const std::filesystem::path& path) {
    Reader r(path);
    const Header h = get_header(r, path);
    if (h.version != kFieldFormatUniform)
        throw FormatError(path.string() + ": expected a uniform-mesh field (version 1)");
    auto values = get_values(r, h.n);
    r.expect_end();
    return {ComplexField(make_grid(static_cast<int>(h.n), h.r_max, h.dim), std::move(values)), h.sigma, h.t};
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
    if (snap.radii.size() != snap.psi.size()) throw std::invalid_argument("write_snapshot: radii and psi differ in size");
    Writer w(path);
    put_header(w, kFieldFormatRadii, snap.dim, snap.psi.size(), snap.r_max, snap.sigma, snap.t);
    w.put(snap.focusing);
    w.put(snap.level);
    w.put(snap.center);
    for (double x : snap.radii) w.put(x);
    put_values(w, snap.psi);
    w.finish();
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    Reader r(path);
    const Header h = get_header(r, path);
    Snapshot s;
    s.t = h.t;
    s.dim = h.dim;
    s.sigma = h.sigma;
    s.r_max = h.r_max;
    if (h.version == kFieldFormatRadii) {
        s.focusing = r.get<double>();
        s.level = r.get<double>();
        s.center = r.get<double>();
        s.radii.resize(h.n);
        for (auto& x : s.radii) x = r.get<double>();
    } else {
        const auto grid = make_grid(static_cast<int>(h.n), h.r_max, h.dim);
        s.radii = grid.nodes();
    }
    s.psi = get_values(r, h.n);
    r.expect_end();
    return s;
}

void write_csv(const std::filesystem::path& path, std::span<const double> rho, std::span<const cplx> values) {
    if (rho.size() != values.size()) throw std::invalid_argument("write_csv: rho and values differ in size");
    auto out = fmt::output_file(path.string());
    out.print("rho,re,im\n");
    for (std::size_t i = 0; i < rho.size(); ++i) out.print("{},{},{}\n", rho[i], values[i].real(), values[i].imag());
}

}  // namespace bnls
