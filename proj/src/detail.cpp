#include "detail.hpp"

#include <fstream>
#include <sstream>

namespace steer::detail {

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoError("failed reading " + path.string());
    }
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw IoError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

json parse_json(std::string_view text, std::string_view what)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "parse error at line L, column C: ..."
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

const json& require_field(const json& obj, std::string_view key, std::string_view where)
{
    if (!obj.is_object()) {
        throw FormatError(std::string(where) + ": expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw FormatError(std::string(where) + ": missing field \"" + std::string(key) + "\"");
    }
    return *it;
}

double require_number(const json& value, std::string_view where)
{
    if (!value.is_number()) {
        throw FormatError(std::string(where) + ": expected a number");
    }
    return value.get<double>();
}

const json& require_array(const json& value, std::string_view where)
{
    if (!value.is_array()) {
        throw FormatError(std::string(where) + ": expected an array");
    }
    return value;
}

std::string require_string(const json& value, std::string_view where)
{
    if (!value.is_string()) {
        throw FormatError(std::string(where) + ": expected a string");
    }
    return value.get<std::string>();
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

} // namespace steer::detail
