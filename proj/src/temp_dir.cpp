#include "qdict/temp_dir.hpp"

#include <stdlib.h>

#include <system_error>
#include <vector>

#include "qdict/errors.hpp"

namespace qdict {

TempDir::TempDir(const std::string& parent, const std::string& prefix) {
  const std::filesystem::path base = parent.empty() ? std::filesystem::temp_directory_path()
                                                    : std::filesystem::path(parent);
  std::string templ = (base / (prefix + "-XXXXXX")).string();
  std::vector<char> buf(templ.begin(), templ.end());
  buf.push_back('\0');
  if (::mkdtemp(buf.data()) == nullptr) throw IoError("cannot create temporary directory under " + base.string());
  path_ = buf.data();
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace qdict
