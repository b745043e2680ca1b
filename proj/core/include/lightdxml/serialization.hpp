#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lightdxml/types.hpp"

namespace lightdxml {

/// Bundle or payload decode failure.
class BundleError : public Error {
public:
    enum class Kind { NotFound, Io, Truncated, Checksum, Version, Malformed };

    BundleError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Little-endian binary encoder.
class ByteWriter {
public:
    void u8(std::uint8_t value) { bytes_.push_back(static_cast<std::byte>(value)); }
    void u32(std::uint32_t value);
    void u64(std::uint64_t value);
    void f64(double value);
    void raw(std::span<const std::byte> data);
    void string(std::string_view text);
    /// u64 rows, u64 cols, then column-major f64 entries.
    void matrix(const Matrix& m);
    void vector(const Vector& v);
    /// Same header as `matrix`; entries are written column-major as well.
    void row_matrix(const RowMatrix& m);

    std::vector<std::byte>& bytes() noexcept { return bytes_; }
    const std::vector<std::byte>& bytes() const noexcept { return bytes_; }

private:
    std::vector<std::byte> bytes_;
};

/// Bounds-checked counterpart of ByteWriter; throws BundleError(Truncated).
class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::span<const std::byte> raw(std::size_t count);
    std::string string();
    Matrix matrix();
    Vector vector();
    RowMatrix row_matrix();

    std::size_t remaining() const noexcept { return data_.size() - offset_; }
    bool done() const noexcept { return remaining() == 0; }

private:
    void need(std::size_t count) const;
    std::pair<Eigen::Index, Eigen::Index> matrix_header();

    std::span<const std::byte> data_;
    std::size_t offset_ = 0;
};

/// CRC-32 (zlib polynomial).
std::uint32_t crc32(std::span<const std::byte> data);

}  // namespace lightdxml
