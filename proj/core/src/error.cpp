#include "veld/error.hpp"

namespace veld {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::InvalidPayload: return "InvalidPayload";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::MalformedHello: return "MalformedHello";
    case ErrorCode::MalformedMessage: return "MalformedMessage";
    case ErrorCode::ServerFull: return "ServerFull";
    case ErrorCode::UnknownRoom: return "UnknownRoom";
    case ErrorCode::AlreadyJoined: return "AlreadyJoined";
    case ErrorCode::NotInRoom: return "NotInRoom";
    case ErrorCode::InvalidBinding: return "InvalidBinding";
    case ErrorCode::TooFar: return "TooFar";
    case ErrorCode::UnknownPod: return "UnknownPod";
    case ErrorCode::UnknownStudent: return "UnknownStudent";
    case ErrorCode::UnknownPortal: return "UnknownPortal";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::DanglingPortal: return "DanglingPortal";
    case ErrorCode::SelfPortal: return "SelfPortal";
    case ErrorCode::SpawnOutOfBounds: return "SpawnOutOfBounds";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::PodOutOfBounds: return "PodOutOfBounds";
    case ErrorCode::PortalOutOfBounds: return "PortalOutOfBounds";
    case ErrorCode::DuplicatePod: return "DuplicatePod";
    case ErrorCode::InvalidPodRadius: return "InvalidPodRadius";
    case ErrorCode::InvalidApps: return "InvalidApps";
    case ErrorCode::InvalidAudioZone: return "InvalidAudioZone";
    case ErrorCode::NoPrivacy: return "NoPrivacy";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::UnpairedSubject: return "UnpairedSubject";
    case ErrorCode::InvalidResponse: return "InvalidResponse";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ConnectFailure: return "ConnectFailure";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace veld
