#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "multihop/hash.hpp"
#include "multihop/index.hpp"

namespace multihop::detail {

// Buffered file writer that tracks an FNV-1a checksum of everything written.
class HashingWriter {
public:
    explicit HashingWriter(const std::filesystem::path& file)
        : path_(file.string()), out_(file, std::ios::binary) {
        if (!out_) throw IndexError("cannot write " + path_);
    }

    void write(const void* data, std::size_t len) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        hash_.update(data, len);
        bytes_ += len;
    }
    void u8(std::uint8_t v) { write(&v, 1); }
    void varint(std::uint64_t v) {
        std::uint8_t buf[10];
        std::size_t n = 0;
        while (v >= 0x80) {
            buf[n++] = static_cast<std::uint8_t>(v) | 0x80;
            v >>= 7;
        }
        buf[n++] = static_cast<std::uint8_t>(v);
        write(buf, n);
    }
    void str(std::string_view s) {
        varint(s.size());
        write(s.data(), s.size());
    }

    std::uint64_t bytes() const { return bytes_; }
    std::uint64_t digest() const { return hash_.digest(); }

    void close() {
        out_.flush();
        if (!out_) throw IndexError("write failure on " + path_);
        out_.close();
    }

private:
    std::string path_;
    std::ofstream out_;
    Fnv1a hash_;
    std::uint64_t bytes_ = 0;
};

// Buffered reader with bounds checking; every overrun is a corruption error
// rather than undefined behavior. Also tracks the running checksum so the
// caller can compare against the manifest after consuming the file.
class HashingReader {
public:
    explicit HashingReader(const std::filesystem::path& file)
        : path_(file.string()), in_(file, std::ios::binary) {
        if (!in_) throw IndexLoadError("cannot open " + path_);
        std::error_code ec;
        auto size = std::filesystem::file_size(file, ec);
        if (ec) throw IndexLoadError("cannot stat " + path_);
        file_size_ = size;
    }

    void read(void* data, std::size_t len) {
        if (bytes_ + len > file_size_) {
            throw IndexLoadError(path_ + " is truncated or corrupt");
        }
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
        if (static_cast<std::size_t>(in_.gcount()) != len) {
            throw IndexLoadError(path_ + " is truncated or corrupt");
        }
        hash_.update(data, len);
        bytes_ += len;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        read(&v, 1);
        return v;
    }
    std::uint64_t varint() {
        std::uint64_t v = 0;
        int shift = 0;
        while (true) {
            std::uint8_t b = u8();
            v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
            if (!(b & 0x80)) break;
            shift += 7;
            if (shift > 63) throw IndexLoadError(path_ + ": varint overflow");
        }
        return v;
    }
    std::string str() {
        std::uint64_t len = varint();
        if (bytes_ + len > file_size_) {
            throw IndexLoadError(path_ + " is truncated or corrupt");
        }
        std::string s(len, '\0');
        if (len > 0) read(s.data(), len);
        return s;
    }

    std::uint64_t remaining() const { return file_size_ - bytes_; }
    std::uint64_t bytes() const { return bytes_; }
    std::uint64_t file_size() const { return file_size_; }
    std::uint64_t digest() const { return hash_.digest(); }

private:
    std::string path_;
    std::ifstream in_;
    Fnv1a hash_;
    std::uint64_t bytes_ = 0;
    std::uint64_t file_size_ = 0;
};

}  // namespace multihop::detail
