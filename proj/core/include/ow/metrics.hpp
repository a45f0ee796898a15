#pragma once

#include <fstream>
#include <string>
#include <string_view>

namespace ow {

/// Append-only JSON-lines sink. A default-constructed writer discards lines.
class MetricsWriter {
 public:
  MetricsWriter() = default;
  explicit MetricsWriter(const std::string& path);

  bool enabled() const noexcept { return out_.is_open(); }
  /// Writes one already-serialized JSON object followed by a newline.
  void write(std::string_view line);

 private:
  std::ofstream out_;
};

}  // namespace ow
