#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "eventlab/errors.hpp"

namespace eventlab {

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    require(ec == std::errc(), "double formatting failed");
    return std::string(buf, p);
}

inline std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_join(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_escape(fields[i]);
    }
    return line;
}

namespace detail {

inline void locked_append(const std::filesystem::path& path, const std::string& header,
                          const std::string* line) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    require(fd >= 0, "cannot open results file ", path.string());
    struct Closer {
        int fd;
        ~Closer() {
            ::flock(fd, LOCK_UN);
            ::close(fd);
        }
    } closer{fd};
    require(::flock(fd, LOCK_EX) == 0, "cannot lock results file ", path.string());
    std::string payload;
    if (::lseek(fd, 0, SEEK_END) == 0) payload = header + "\n";
    if (line) payload += *line + "\n";
    const char* data = payload.data();
    std::size_t left = payload.size();
    while (left > 0) {
        const ssize_t n = ::write(fd, data, left);
        require(n > 0, "write failed for ", path.string());
        data += n;
        left -= static_cast<std::size_t>(n);
    }
}

}  // namespace detail

// Appends one row under an exclusive flock; writes the header first when the
// file is empty. Safe across interleaved processes and threads.
inline void append_csv_row(const std::filesystem::path& path, const std::string& header,
                           const std::vector<std::string>& row) {
    const std::string line = csv_join(row);
    detail::locked_append(path, header, &line);
}

inline void ensure_csv_header(const std::filesystem::path& path, const std::string& header) {
    detail::locked_append(path, header, nullptr);
}

// Minimal reader for our own output files (quoted fields supported).
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open csv ", path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    field += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else {
                field += c;
            }
        }
        fields.push_back(std::move(field));
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace eventlab
