#pragma once

#include "fgt2m/errors.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fgt2m {

// Little-endian binary reader with byte-offset tracking for diagnostics.
// x86 and every target we care about is little-endian; values are still
// moved through memcpy to stay alignment-safe.
class BinReader {
public:
    explicit BinReader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError("cannot open '" + path_ + "'");
        buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    explicit BinReader(std::string bytes, std::string name = "<memory>")
        : path_(std::move(name)), buf_(std::move(bytes)) {}

    std::size_t offset() const { return pos_; }
    std::size_t size() const { return buf_.size(); }
    bool at_end() const { return pos_ == buf_.size(); }

    void raw(void* dst, std::size_t n) {
        if (pos_ + n > buf_.size()) {
            throw FormatError("truncated file '" + path_ + "' at byte offset " +
                              std::to_string(pos_) + " (need " + std::to_string(n) + " more bytes)");
        }
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }

    template <typename T>
    T scalar() {
        static_assert(std::is_trivially_copyable_v<T>);
        T v{};
        raw(&v, sizeof(T));
        return v;
    }

    std::string bytes(std::size_t n) {
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

    std::string prefixed_string() {
        auto n = scalar<std::uint32_t>();
        return bytes(n);
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(what + " in '" + path_ + "' at byte offset " + std::to_string(pos_));
    }

private:
    std::string path_;
    std::string buf_;
    std::size_t pos_ = 0;
};

class BinWriter {
public:
    template <typename T>
    void scalar(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.append(p, sizeof(T));
    }

    void raw(const void* src, std::size_t n) {
        buf_.append(static_cast<const char*>(src), n);
    }

    void prefixed_string(const std::string& s) {
        scalar<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

// Writes to "<path>.tmp" and renames on commit so failed runs never leave
// partial output files behind.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

} // namespace fgt2m
