#include "assoc/cli/results.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <string>

#include "assoc/errors.hpp"

namespace assoc::cli {
namespace {

class LockedFile {
 public:
  explicit LockedFile(const std::filesystem::path& path)
      : fd_(::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644)) {
    if (fd_ < 0) throw ConfigError("cannot open " + path.string() + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw ConfigError("cannot lock " + path.string() + ": " + std::strerror(errno));
    }
  }
  ~LockedFile() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  LockedFile(const LockedFile&) = delete;
  LockedFile& operator=(const LockedFile&) = delete;

  int fd() const noexcept { return fd_; }

 private:
  int fd_;
};

void write_all(int fd, const std::string& text, const std::filesystem::path& path) {
  std::size_t done = 0;
  while (done < text.size()) {
    const ssize_t n = ::write(fd, text.data() + done, text.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ConfigError("cannot write " + path.string() + ": " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

std::string format_row(const ResultRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.6f,%llu", row.way, row.shot, row.mean, row.ci,
                static_cast<unsigned long long>(row.seed));
  return row.variant + "," + buf;
}

void append_result(const std::filesystem::path& csv, const ResultRow& row) {
  const LockedFile file(csv);
  const off_t size = ::lseek(file.fd(), 0, SEEK_END);
  std::string text;
  if (size == 0) {
    text = std::string(kResultsHeader) + "\n";
  } else {
    const std::string want = std::string(kResultsHeader) + "\n";
    std::string head(want.size(), '\0');
    const ssize_t n = ::pread(file.fd(), head.data(), head.size(), 0);
    if (n != static_cast<ssize_t>(head.size()) || head != want)
      throw ConfigError(csv.string() + " exists with a different header");
  }
  text += format_row(row) + "\n";
  write_all(file.fd(), text, csv);
}

}  // namespace assoc::cli
