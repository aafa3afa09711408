#include "fgt2m/binio.hpp"

#include <cstdio>
#include <system_error>

namespace fgt2m {

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path() && !path.parent_path().empty()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw FormatError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw FormatError("failed to rename '" + tmp.string() + "' to '" + path.string() + "'");
    }
}

} // namespace fgt2m
