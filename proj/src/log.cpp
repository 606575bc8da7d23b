#include "privloc/log.hpp"

#include <chrono>
#include <iostream>
#include <string>

#include "privloc/error.hpp"

namespace privloc {

LogLevel parse_log_level(std::string_view s) {
  for (LogLevel l : {LogLevel::debug, LogLevel::info, LogLevel::warn, LogLevel::error, LogLevel::off})
    if (s == log_level_name(l)) return l;
  throw Error(ErrorCode::config, "log_level: expected debug, info, warn, error or off");
}

const char* log_level_name(LogLevel l) noexcept {
  switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
    case LogLevel::off: return "off";
  }
  return "unknown";
}

Logger::Logger(LogLevel threshold, std::ostream* out)
    : threshold_(threshold), out_(out ? out : &std::cerr) {}

void Logger::event(LogLevel level, std::string_view name, nlohmann::json fields,
                   const nlohmann::json& plaintext) {
  if (!enabled(level)) return;
  if (!fields.is_object()) fields = nlohmann::json::object();
  if (threshold_ == LogLevel::debug) {
    for (auto it = plaintext.begin(); it != plaintext.end(); ++it) fields[it.key()] = *it;
  } else if (!plaintext.empty()) {
    fields["redacted"] = true;
  }
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
  fields["ts_ms"] = ms;
  fields["level"] = log_level_name(level);
  fields["event"] = name;
  const std::string line = fields.dump();
  std::lock_guard lock(mu_);
  *out_ << line << '\n';
  out_->flush();
}

}  // namespace privloc
