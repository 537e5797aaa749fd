#include "spikematch/binio.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>

namespace spikematch::binio {

std::vector<unsigned char> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError(FormatError::Kind::io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::string &path, const std::vector<unsigned char> &data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw FormatError(FormatError::Kind::io, "cannot write " + tmp);
    out.write(reinterpret_cast<const char *>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out)
      throw FormatError(FormatError::Kind::io, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

} // namespace spikematch::binio
