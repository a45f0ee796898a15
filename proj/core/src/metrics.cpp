#include "ow/metrics.hpp"

#include <stdexcept>

namespace ow {

MetricsWriter::MetricsWriter(const std::string& path) {
  if (path.empty()) return;
  out_.open(path, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open metrics file " + path);
}

void MetricsWriter::write(std::string_view line) {
  if (!out_.is_open()) return;
  out_ << line << '\n';
  out_.flush();
}

}  // namespace ow
