#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace veld {

// Every failure the library reports, on the wire or through exceptions.
// The wire name of each code is its enumerator spelling.
enum class ErrorCode {
  UnknownKind,
  InvalidPayload,
  IllegalTransition,
  Unauthorized,
  MalformedHello,
  MalformedMessage,
  ServerFull,
  UnknownRoom,
  AlreadyJoined,
  NotInRoom,
  InvalidBinding,
  TooFar,
  UnknownPod,
  UnknownStudent,
  UnknownPortal,
  ParseError,
  DuplicateName,
  DanglingPortal,
  SelfPortal,
  SpawnOutOfBounds,
  InvalidBounds,
  PodOutOfBounds,
  PortalOutOfBounds,
  DuplicatePod,
  InvalidPodRadius,
  InvalidApps,
  InvalidAudioZone,
  NoPrivacy,
  NoData,
  UnpairedSubject,
  InvalidResponse,
  InvalidConfig,
  ConnectFailure,
  Timeout,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace veld
