#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gnls {

using WarningSink = std::function<void(const std::string&)>;

/// Emit a non-fatal diagnostic (support leaks, Kirchhoff violations, ...).
void warn(const std::string& message);

/// Replace the process-wide sink; returns the previous one. The default prints to stderr.
WarningSink set_warning_sink(WarningSink sink);

/// Collects warnings for the lifetime of the object and restores the previous sink.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
  WarningSink previous_;
};

}  // namespace gnls
