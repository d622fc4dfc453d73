#pragma once

#include "phasescout/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace phasescout {

/// Little-endian byte stream writer.
class ByteWriter {
public:
    void raw(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<unsigned char>(v >> (8 * k)));
    }
    void u64(std::uint64_t v) {
        for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<unsigned char>(v >> (8 * k)));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f64s(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    const std::vector<unsigned char>& bytes() const { return buf_; }
    std::vector<unsigned char> take() { return std::move(buf_); }

private:
    std::vector<unsigned char> buf_;
};

/// Bounds-checked little-endian reader; throws RecordError when truncated.
class ByteReader {
public:
    ByteReader(const unsigned char* data, std::size_t size) : p_(data), n_(size) {}
    explicit ByteReader(const std::vector<unsigned char>& v) : ByteReader(v.data(), v.size()) {}

    void raw(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, p_ + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() {
        need(1);
        return p_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p_[pos_ + k]) << (8 * k);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p_[pos_ + k]) << (8 * k);
        pos_ += 8;
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<double> f64s(std::size_t maxCount = std::size_t(1) << 32) {
        const std::uint64_t n = u64();
        if (n > maxCount || n * 8 > remaining()) throw RecordError("byte stream: array length out of range");
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        if (n > remaining()) throw RecordError("byte stream: string length out of range");
        std::string s(reinterpret_cast<const char*>(p_ + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return n_ - pos_; }
    std::size_t position() const { return pos_; }

private:
    void need(std::size_t k) const {
        if (k > n_ - pos_) throw RecordError("byte stream: truncated");
    }
    const unsigned char* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
};

std::vector<unsigned char> read_file(const std::string& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::vector<unsigned char>& bytes);
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace phasescout
