#pragma once

#include <filesystem>
#include <string>

namespace qdict {

/// Uniquely named directory, removed with its contents on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& parent = {}, const std::string& prefix = "qdict");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace qdict
