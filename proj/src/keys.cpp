#include "privloc/keys.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <string>

#include "privloc/error.hpp"

namespace privloc {

namespace fs = std::filesystem;

KeySet setup_keys(const SystemParams& params, const fs::path& path) {
  params.validate();
  KeySet keys = KeySet::generate(params.lambda);
  save_keys(keys, path);
  return keys;
}

void save_keys(const KeySet& keys, const fs::path& path) {
  std::string body;
  for (const auto& k : keys.keys) body += k.to_hex() + "\n";

  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0600);
  if (fd < 0)
    throw Error(ErrorCode::io, "cannot create key file " + tmp.string() + ": " +
                                   std::strerror(errno));
  bool ok = ::write(fd, body.data(), body.size()) == static_cast<ssize_t>(body.size());
  ok = ::fsync(fd) == 0 && ok;
  ok = ::close(fd) == 0 && ok;
  if (!ok || ::rename(tmp.c_str(), path.c_str()) != 0) {
    const std::string why = std::strerror(errno);
    ::unlink(tmp.c_str());
    throw Error(ErrorCode::io, "cannot write key file " + path.string() + ": " + why);
  }
}

KeySet load_keys(const fs::path& path) {
  struct stat st {};
  if (::stat(path.c_str(), &st) != 0)
    throw Error(ErrorCode::io, "cannot stat key file " + path.string() + ": " +
                                   std::strerror(errno));
  if ((st.st_mode & (S_IRWXG | S_IRWXO)) != 0)
    throw Error(ErrorCode::config, "key file " + path.string() +
                                       " must be readable by its owner only (chmod 600)");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open key file " + path.string());
  KeySet keys;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    if (n == keys.keys.size())
      throw Error(ErrorCode::config, "key file " + path.string() + " has more than 3 keys");
    keys.keys[n++] = MasterKey::from_hex(line);
  }
  if (n != keys.keys.size())
    throw Error(ErrorCode::config, "key file " + path.string() + " must hold 3 keys, found " +
                                       std::to_string(n));
  return keys;
}

}  // namespace privloc
