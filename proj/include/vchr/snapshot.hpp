#pragma once

// Field snapshots:
//
//     "VCHR1\n"
//     "<dim> <n1> [<n2> [<n3>]] <L1> [<L2> [<L3>]] <periodic|noflux>\n"
//     <size> little-endian IEEE-754 binary64 values, row-major, last axis fastest
//
// Lengths are written in shortest round-trip form, so read(write(f)) is bit-identical.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "vchr/errors.hpp"
#include "vchr/grid.hpp"

namespace vchr {

inline constexpr std::string_view snapshot_magic = "VCHR1\n";

/// Shortest decimal that parses back to exactly `v`, always with a '.' or exponent.
inline std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

inline std::string snapshot_header(const GridSpec& g) {
    std::string h = std::to_string(g.dim);
    for (int a = 0; a < g.dim; ++a) h += " " + std::to_string(g.n[a]);
    for (int a = 0; a < g.dim; ++a) h += " " + format_real(g.length[a]);
    h += " ";
    h += to_string(g.bc);
    return h;
}

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
        return r;
    }
    return v;
}

} // namespace detail

inline std::string snapshot_encode(const ScalarField& f) {
    std::string out(snapshot_magic);
    out += snapshot_header(f.grid());
    out += '\n';
    const std::size_t start = out.size();
    out.resize(start + 8 * f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(f[i]));
        std::memcpy(out.data() + start + 8 * i, &bits, 8);
    }
    return out;
}

inline ScalarField snapshot_decode(std::string_view bytes) {
    if (bytes.size() < snapshot_magic.size() || bytes.substr(0, snapshot_magic.size()) != snapshot_magic) {
        throw FormatError("snapshot: bad magic", 0);
    }
    const std::size_t header_start = snapshot_magic.size();
    const std::size_t eol = bytes.find('\n', header_start);
    if (eol == std::string_view::npos) throw FormatError("snapshot: unterminated header", header_start);

    std::istringstream hs{std::string(bytes.substr(header_start, eol - header_start))};
    int dim = 0;
    if (!(hs >> dim) || dim < 1 || dim > 3) throw FormatError("snapshot: bad dimension", header_start);
    std::vector<int> n(dim);
    std::vector<double> len(dim);
    for (int& v : n) {
        if (!(hs >> v)) throw FormatError("snapshot: bad point count", header_start);
    }
    for (double& v : len) {
        std::string tok;
        if (!(hs >> tok)) throw FormatError("snapshot: missing length", header_start);
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
            throw FormatError("snapshot: bad length '" + tok + "'", header_start);
    }
    std::string bc, extra;
    if (!(hs >> bc)) throw FormatError("snapshot: missing boundary kind", header_start);
    if (hs >> extra) throw FormatError("snapshot: trailing header token '" + extra + "'", header_start);

    GridSpec g;
    try {
        g = GridSpec::make(dim, n, len, parse_boundary(bc));
    } catch (const UsageError& e) {
        throw FormatError(std::string("snapshot: invalid grid: ") + e.what(), header_start);
    }

    const std::size_t data_start = eol + 1;
    const std::size_t expected = 8 * g.size();
    const std::size_t available = bytes.size() - data_start;
    if (available < expected) throw FormatError("snapshot: truncated data", bytes.size());
    if (available > expected) throw FormatError("snapshot: trailing bytes after data", data_start + expected);

    std::vector<double> data(g.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, bytes.data() + data_start + 8 * i, 8);
        data[i] = std::bit_cast<double>(detail::to_little_endian(bits));
    }
    return ScalarField(g, std::move(data));
}

inline void snapshot_write(const ScalarField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    const std::string bytes = snapshot_encode(f);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write to '" + path + "' failed");
}

inline ScalarField snapshot_read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return snapshot_decode(bytes);
}

} // namespace vchr
