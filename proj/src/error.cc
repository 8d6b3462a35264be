#include "functree/error.h"

#include <iostream>
#include <mutex>

namespace functree {
namespace {

std::mutex& HandlerMutex() {
  static std::mutex m;
  return m;
}

WarningHandler& Handler() {
  static WarningHandler handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

}  // namespace

void Warn(std::string_view message) {
  std::lock_guard<std::mutex> lock(HandlerMutex());
  if (Handler()) Handler()(message);
}

WarningHandler SetWarningHandler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(HandlerMutex());
  WarningHandler old = std::move(Handler());
  Handler() = std::move(handler);
  return old;
}

}  // namespace functree
