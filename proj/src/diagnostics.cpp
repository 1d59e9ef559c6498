#include "gnls/diagnostics.hpp"

#include <iostream>
#include <mutex>

namespace gnls {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  WarningSink previous = std::move(sink());
  sink() = std::move(s);
  return previous;
}

WarningCapture::WarningCapture()
    : previous_(set_warning_sink([this](const std::string& m) { messages_.push_back(m); })) {}

WarningCapture::~WarningCapture() { set_warning_sink(std::move(previous_)); }

}  // namespace gnls
