#include "lightdxml/serialization.hpp"

#include <bit>
#include <cstring>

#include <zlib.h>

namespace lightdxml {

namespace {

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
    for (std::size_t k = 0; k < sizeof(T); ++k) {
        out.push_back(static_cast<std::byte>((value >> (8 * k)) & 0xffU));
    }
}

template <typename T>
T get_le(std::span<const std::byte> in) {
    T value = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) {
        value |= static_cast<T>(std::to_integer<std::uint8_t>(in[k])) << (8 * k);
    }
    return value;
}

// Cap on matrix entries so a corrupt header cannot trigger a huge allocation.
constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 36;

}  // namespace

void ByteWriter::u32(std::uint32_t value) { put_le(bytes_, value); }
void ByteWriter::u64(std::uint64_t value) { put_le(bytes_, value); }
void ByteWriter::f64(double value) { put_le(bytes_, std::bit_cast<std::uint64_t>(value)); }

void ByteWriter::raw(std::span<const std::byte> data) {
    bytes_.insert(bytes_.end(), data.begin(), data.end());
}

void ByteWriter::string(std::string_view text) {
    u64(text.size());
    raw(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

void ByteWriter::matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        f64(m.data()[k]);
    }
}

void ByteWriter::vector(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        f64(v[k]);
    }
}

void ByteWriter::row_matrix(const RowMatrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            f64(m(r, c));
        }
    }
}

void ByteReader::need(std::size_t count) const {
    if (count > remaining()) {
        throw BundleError(BundleError::Kind::Truncated, "unexpected end of data");
    }
}

std::uint8_t ByteReader::u8() {
    need(1);
    return std::to_integer<std::uint8_t>(data_[offset_++]);
}

std::uint32_t ByteReader::u32() {
    need(4);
    const auto v = get_le<std::uint32_t>(data_.subspan(offset_, 4));
    offset_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    const auto v = get_le<std::uint64_t>(data_.subspan(offset_, 8));
    offset_ += 8;
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::span<const std::byte> ByteReader::raw(std::size_t count) {
    need(count);
    auto out = data_.subspan(offset_, count);
    offset_ += count;
    return out;
}

std::string ByteReader::string() {
    const auto size = u64();
    need(size);
    const auto bytes = raw(size);
    return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

std::pair<Eigen::Index, Eigen::Index> ByteReader::matrix_header() {
    const auto rows = u64();
    const auto cols = u64();
    if (rows > kMaxEntries || cols > kMaxEntries || (cols != 0 && rows > kMaxEntries / cols)) {
        throw BundleError(BundleError::Kind::Malformed, "matrix header too large");
    }
    need(rows * cols * 8);
    return {static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Matrix ByteReader::matrix() {
    const auto [rows, cols] = matrix_header();
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        m.data()[k] = f64();
    }
    return m;
}

Vector ByteReader::vector() {
    const auto size = u64();
    if (size > kMaxEntries) {
        throw BundleError(BundleError::Kind::Malformed, "vector header too large");
    }
    need(size * 8);
    Vector v(static_cast<Eigen::Index>(size));
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        v[k] = f64();
    }
    return v;
}

RowMatrix ByteReader::row_matrix() {
    const auto [rows, cols] = matrix_header();
    RowMatrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = f64();
        }
    }
    return m;
}

std::uint32_t crc32(std::span<const std::byte> data) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes a uInt length, so feed large buffers in pieces.
    constexpr std::size_t kChunk = 1U << 30;
    for (std::size_t offset = 0; offset < data.size(); offset += kChunk) {
        const std::size_t len = std::min(kChunk, data.size() - offset);
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data() + offset), static_cast<uInt>(len));
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace lightdxml
