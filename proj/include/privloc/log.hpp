#pragma once

// JSON-lines event log. Plaintext location fields are passed separately and
// only written when the threshold is debug.

#include <mutex>
#include <ostream>
#include <string_view>

#include <nlohmann/json.hpp>

namespace privloc {

enum class LogLevel { debug, info, warn, error, off };

LogLevel parse_log_level(std::string_view s);
const char* log_level_name(LogLevel l) noexcept;

class Logger {
 public:
  explicit Logger(LogLevel threshold = LogLevel::info, std::ostream* out = nullptr);

  LogLevel threshold() const { return threshold_; }
  bool enabled(LogLevel l) const { return l >= threshold_ && threshold_ != LogLevel::off; }

  void event(LogLevel level, std::string_view name, nlohmann::json fields = nlohmann::json::object(),
             const nlohmann::json& plaintext = nlohmann::json::object());

 private:
  LogLevel threshold_;
  std::ostream* out_;
  std::mutex mu_;
};

}  // namespace privloc
