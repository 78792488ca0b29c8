#pragma once

// Reader/writer for the NPY array format, versions 1.0 and 2.0, C order only.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "l2h/error.hpp"
#include "l2h/mapped_file.hpp"
#include "l2h/matrix.hpp"

namespace l2h {

static_assert(std::endian::native == std::endian::little,
              "NPY payloads are read in place; a big-endian host would need byte swapping");

inline constexpr std::array<unsigned char, 6> npy_magic{0x93, 'N', 'U', 'M', 'P', 'Y'};

struct NpyHeader {
    int major_version = 1;
    std::string descr;
    bool fortran_order = false;
    std::vector<std::size_t> shape;
    std::size_t data_offset = 0;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
};

struct NpyReadOptions {
    /// Payloads of at least this many bytes are memory-mapped instead of copied.
    std::size_t mmap_threshold_bytes = std::size_t{1} << 30;
};

namespace detail {

class DictCursor {
public:
    DictCursor(std::string_view text, const std::string& path) : text_{text}, path_{path} {}

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!consume(c)) fail(std::string("expected '") + c + "'");
    }
    std::string quoted() {
        skip_ws();
        if (pos_ >= text_.size() || (text_[pos_] != '\'' && text_[pos_] != '"')) fail("expected string");
        const char q = text_[pos_++];
        const auto end = text_.find(q, pos_);
        if (end == std::string_view::npos) fail("unterminated string");
        std::string s{text_.substr(pos_, end - pos_)};
        pos_ = end + 1;
        return s;
    }
    bool boolean() {
        skip_ws();
        if (text_.substr(pos_, 4) == "True") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "False") {
            pos_ += 5;
            return false;
        }
        fail("expected True or False");
    }
    std::vector<std::size_t> tuple() {
        expect('(');
        std::vector<std::size_t> dims;
        while (!consume(')')) {
            skip_ws();
            std::size_t v = 0;
            bool any = false;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                v = v * 10 + static_cast<std::size_t>(text_[pos_++] - '0');
                any = true;
            }
            if (!any) fail("expected integer in shape");
            dims.push_back(v);
            if (!consume(',')) {
                expect(')');
                break;
            }
        }
        return dims;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(path_ + ": malformed NPY header (" + what + " at offset " +
                          std::to_string(pos_) + ")");
    }

private:
    std::string_view text_;
    const std::string& path_;
    std::size_t pos_ = 0;
};

inline NpyHeader parse_npy_dict(std::string_view dict, const std::string& path) {
    NpyHeader h;
    bool have_descr = false, have_order = false, have_shape = false;
    DictCursor cur{dict, path};
    cur.expect('{');
    while (!cur.consume('}')) {
        const std::string key = cur.quoted();
        cur.expect(':');
        if (key == "descr") {
            h.descr = cur.quoted();
            have_descr = true;
        } else if (key == "fortran_order") {
            h.fortran_order = cur.boolean();
            have_order = true;
        } else if (key == "shape") {
            h.shape = cur.tuple();
            have_shape = true;
        } else {
            cur.fail("unknown key '" + key + "'");
        }
        if (!cur.consume(',')) {
            cur.expect('}');
            break;
        }
    }
    if (!have_descr || !have_order || !have_shape) {
        throw FormatError(path + ": NPY header lacks descr, fortran_order or shape");
    }
    return h;
}

inline std::uint32_t read_le(std::span<const unsigned char> b) {
    std::uint32_t v = 0;
    for (std::size_t i = b.size(); i-- > 0;) v = (v << 8) | b[i];
    return v;
}

/// Parses magic, version and header dict from the leading bytes of a file stream.
inline NpyHeader read_npy_header(std::istream& in, const std::string& path) {
    std::array<unsigned char, 8> prefix{};
    in.read(reinterpret_cast<char*>(prefix.data()), prefix.size());
    if (in.gcount() != static_cast<std::streamsize>(prefix.size()) ||
        !std::equal(npy_magic.begin(), npy_magic.end(), prefix.begin())) {
        throw FormatError(path + ": bad NPY magic");
    }
    const int major = prefix[6];
    std::size_t len_bytes = 0;
    if (major == 1) {
        len_bytes = 2;
    } else if (major == 2) {
        len_bytes = 4;
    } else {
        throw FormatError(path + ": unsupported NPY version " + std::to_string(major) + "." +
                          std::to_string(prefix[7]));
    }
    std::array<unsigned char, 4> len_buf{};
    in.read(reinterpret_cast<char*>(len_buf.data()), static_cast<std::streamsize>(len_bytes));
    if (in.gcount() != static_cast<std::streamsize>(len_bytes)) {
        throw FormatError(path + ": truncated NPY header");
    }
    const std::size_t header_len = read_le({len_buf.data(), len_bytes});
    std::string dict(header_len, '\0');
    in.read(dict.data(), static_cast<std::streamsize>(header_len));
    if (in.gcount() != static_cast<std::streamsize>(header_len)) {
        throw FormatError(path + ": truncated NPY header");
    }
    NpyHeader h = parse_npy_dict(dict, path);
    h.major_version = major;
    h.data_offset = 8 + len_bytes + header_len;
    if (h.fortran_order) {
        throw FormatError(path + ": fortran_order=True arrays are not supported (C order only)");
    }
    return h;
}

inline std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

inline std::size_t file_size_of(std::ifstream& in) {
    const auto here = in.tellg();
    in.seekg(0, std::ios::end);
    const auto end = in.tellg();
    in.seekg(here);
    return static_cast<std::size_t>(end);
}

template <class T>
std::vector<T> read_payload(std::ifstream& in, const NpyHeader& h) {
    std::vector<T> out(h.element_count());
    in.seekg(static_cast<std::streamoff>(h.data_offset));
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * sizeof(T)));
    return out;
}

inline std::string header_dict(std::string_view descr, std::span<const std::size_t> shape) {
    std::string s = "{'descr': '" + std::string(descr) + "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += std::to_string(shape[i]);
        if (i + 1 < shape.size() || shape.size() == 1) s += ",";
        if (i + 1 < shape.size()) s += " ";
    }
    s += "), }";
    return s;
}

template <class T>
void write_npy_raw(const std::string& path, std::string_view descr, std::span<const std::size_t> shape,
                   std::span<const T> values) {
    std::string dict = header_dict(descr, shape);
    // Total header (prefix + dict + '\n') is padded to a multiple of 64 bytes.
    const bool v2 = dict.size() + 11 > 65535;
    const std::size_t prefix = v2 ? 12 : 10;
    const std::size_t total = (prefix + dict.size() + 1 + 63) / 64 * 64;
    dict.append(total - prefix - dict.size() - 1, ' ');
    dict.push_back('\n');

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    out.write(reinterpret_cast<const char*>(npy_magic.data()), npy_magic.size());
    const unsigned char version[2] = {static_cast<unsigned char>(v2 ? 2 : 1), 0};
    out.write(reinterpret_cast<const char*>(version), 2);
    const std::uint32_t len = static_cast<std::uint32_t>(dict.size());
    const unsigned char len_bytes[4] = {static_cast<unsigned char>(len & 0xff),
                                        static_cast<unsigned char>((len >> 8) & 0xff),
                                        static_cast<unsigned char>((len >> 16) & 0xff),
                                        static_cast<unsigned char>((len >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(len_bytes), v2 ? 4 : 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
    if (!out) throw IoError("write failed for " + path);
}

} // namespace detail

/// True when the file starts with the NPY magic string.
inline bool is_npy_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::array<unsigned char, 6> m{};
    in.read(reinterpret_cast<char*>(m.data()), m.size());
    return in.gcount() == 6 && m == npy_magic;
}

inline NpyHeader read_npy_header(const std::string& path) {
    auto in = detail::open_binary(path);
    return detail::read_npy_header(in, path);
}

/// Reads a 2-D "<f4" or "<f8" array. Large payloads are memory-mapped.
inline RealMatrix read_npy(const std::string& path, const NpyReadOptions& options = {}) {
    auto in = detail::open_binary(path);
    const NpyHeader h = detail::read_npy_header(in, path);

    Precision precision{};
    if (h.descr == "<f4") {
        precision = Precision::single;
    } else if (h.descr == "<f8") {
        precision = Precision::double_;
    } else {
        throw FormatError(path + ": unsupported dtype '" + h.descr +
                          "' for a real matrix (expected little-endian <f4 or <f8)");
    }
    if (h.shape.size() != 2) {
        throw FormatError(path + ": expected a 2-D array, got rank " + std::to_string(h.shape.size()));
    }
    const std::size_t rows = h.shape[0], cols = h.shape[1];
    const std::size_t payload = h.element_count() * element_size(precision);
    const std::size_t file_size = detail::file_size_of(in);
    if (file_size < h.data_offset + payload) {
        throw FormatError(path + ": truncated payload (" + std::to_string(file_size - h.data_offset) +
                          " of " + std::to_string(payload) + " bytes)");
    }

    if (payload >= options.mmap_threshold_bytes && payload > 0 &&
        h.data_offset % element_size(precision) == 0) {
        in.close();
        auto mapping = std::make_shared<MappedFile>(path);
        const void* data = mapping->bytes().data() + h.data_offset;
        return RealMatrix(rows, cols, precision, data, std::move(mapping));
    }
    if (precision == Precision::single) {
        return RealMatrix(rows, cols, detail::read_payload<float>(in, h));
    }
    return RealMatrix(rows, cols, detail::read_payload<double>(in, h));
}

/// Reads a 1-D "<i4" or "<i8" array, widened to 64 bits.
inline std::vector<std::int64_t> read_npy_integers(const std::string& path) {
    auto in = detail::open_binary(path);
    const NpyHeader h = detail::read_npy_header(in, path);
    if (h.descr != "<i4" && h.descr != "<i8") {
        throw FormatError(path + ": unsupported dtype '" + h.descr +
                          "' for labels (expected little-endian <i4 or <i8)");
    }
    if (h.shape.size() != 1) {
        throw FormatError(path + ": label array must be 1-D, got rank " + std::to_string(h.shape.size()));
    }
    const std::size_t width = h.descr == "<i4" ? 4 : 8;
    if (detail::file_size_of(in) < h.data_offset + h.element_count() * width) {
        throw FormatError(path + ": truncated payload");
    }
    if (width == 8) return detail::read_payload<std::int64_t>(in, h);
    const auto narrow = detail::read_payload<std::int32_t>(in, h);
    return {narrow.begin(), narrow.end()};
}

inline void write_npy(const std::string& path, const RealMatrix& m) {
    const std::array<std::size_t, 2> shape{m.rows(), m.cols()};
    m.visit([&]<class T>(std::span<const T> values) {
        detail::write_npy_raw<T>(path, std::is_same_v<T, float> ? "<f4" : "<f8", shape, values);
    });
}

inline void write_npy(const std::string& path, std::span<const std::int64_t> values) {
    const std::array<std::size_t, 1> shape{values.size()};
    detail::write_npy_raw<std::int64_t>(path, "<i8", shape, values);
}

inline void write_npy(const std::string& path, std::span<const std::int32_t> values) {
    const std::array<std::size_t, 1> shape{values.size()};
    detail::write_npy_raw<std::int32_t>(path, "<i4", shape, values);
}

} // namespace l2h
