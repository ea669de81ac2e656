#ifndef T1BS_MANIFEST_HPP
#define T1BS_MANIFEST_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

#include "t1bs/csv.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

/// FNV-1a 64-bit over a byte string.
inline std::uint64_t fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string digest_hex(std::uint64_t h)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string digest_file(const std::string& path)
{
    return digest_hex(fnv1a64(read_text_file(path)));
}

/// Accumulates one run's provenance; written as manifest.json next to the
/// outputs.
class RunManifest {
public:
    RunManifest(const std::string& subcommand)
    {
        doc_["subcommand"] = subcommand;
        doc_["tool_version"] = kToolVersion;
        doc_["inputs"] = nlohmann::json::object();
        doc_["outputs"] = nlohmann::json::array();
        doc_["config"] = nlohmann::json::object();
    }

    void add_input(const std::string& path) { doc_["inputs"][path] = digest_file(path); }
    void add_output(const std::string& path) { doc_["outputs"].push_back(path); }
    void set_config(const std::string& key, const nlohmann::json& value)
    {
        doc_["config"][key] = value;
    }
    void set_wall_seconds(double s) { doc_["wall_seconds"] = s; }

    void write(const std::string& dir) const
    {
        const std::string path = dir.empty() ? "manifest.json" : dir + "/manifest.json";
        write_text_file(path, doc_.dump(2) + "\n");
    }

    const nlohmann::json& doc() const { return doc_; }

private:
    nlohmann::json doc_;
};

}  // namespace t1bs

#endif  // T1BS_MANIFEST_HPP
