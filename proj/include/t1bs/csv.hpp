#ifndef T1BS_CSV_HPP
#define T1BS_CSV_HPP

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "t1bs/types.hpp"

namespace t1bs {

inline std::string trim(const std::string& s)
{
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_fields(const std::string& line, char sep = ',')
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& context)
{
    const std::string t = trim(s);
    if (t.empty()) throw ValidationError(context + ": empty numeric field");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
        throw ValidationError(context + ": cannot parse number '" + t + "'");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& context)
{
    const std::string t = trim(s);
    if (t.empty()) throw ValidationError(context + ": empty integer field");
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size())
        throw ValidationError(context + ": cannot parse integer '" + t + "'");
    return v;
}

/// Shortest decimal string that parses back to exactly x.
inline std::string format_double(double x)
{
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ComputeError("cannot write file: " + path);
    out << content;
    if (!out) throw ComputeError("write failed: " + path);
}

/// Splits file content into lines; drops a trailing empty line and blank lines.
inline std::vector<std::string> read_lines(const std::string& path)
{
    const std::string text = read_text_file(path);
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string::npos) pos = text.size();
        std::string line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) lines.push_back(line);
        start = pos + 1;
        if (pos == text.size()) break;
    }
    return lines;
}

template <typename T>
inline void write_binary_file(const std::string& path, const std::vector<T>& values)
{
    static_assert(std::is_floating_point_v<T>);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ComputeError("cannot write file: " + path);
    for (T v : values) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
                std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
        out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
    }
    if (!out) throw ComputeError("write failed: " + path);
}

template <typename T>
inline std::vector<T> read_binary_file(const std::string& path)
{
    static_assert(std::is_floating_point_v<T>);
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw ValidationError("cannot open file: " + path);
    const std::streamoff size = in.tellg();
    if (size % static_cast<std::streamoff>(sizeof(T)) != 0)
        throw ValidationError(path + ": size is not a multiple of element size");
    in.seekg(0);
    std::vector<T> values(static_cast<std::size_t>(size) / sizeof(T));
    for (T& v : values) {
        unsigned char bytes[sizeof(T)];
        in.read(reinterpret_cast<char*>(bytes), sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
                std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
        std::memcpy(&v, bytes, sizeof(T));
    }
    if (!in) throw ValidationError("read failed: " + path);
    return values;
}

inline bool file_exists(const std::string& path)
{
    std::ifstream in(path);
    return static_cast<bool>(in);
}

/// Replaces the extension (after the last '.') with `new_ext`, dot optional.
/// Appends if the basename has no extension.
inline std::string swap_extension(const std::string& path, const std::string& new_ext)
{
    const std::string ext = !new_ext.empty() && new_ext.front() == '.' ? new_ext.substr(1) : new_ext;
    const std::size_t slash = path.find_last_of("/\\");
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + "." + ext;
    return path.substr(0, dot + 1) + ext;
}

}  // namespace t1bs

#endif  // T1BS_CSV_HPP
