#include "envdt/taxonomy.hpp"

#include <stdexcept>

namespace envdt {

std::string_view to_string(Stereotype s) {
  switch (s) {
    case Stereotype::Subcomponent: return "Subcomponent";
    case Stereotype::Power: return "Power";
    case Stereotype::Sensor: return "Sensor";
    case Stereotype::Network: return "Network";
    case Stereotype::Interactable: return "Interactable";
    case Stereotype::User: return "User";
    case Stereotype::Feature: return "Feature";
  }
  return "?";
}

std::optional<Stereotype> stereotype_from_string(std::string_view name) {
  for (Stereotype s : kAllStereotypes) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view to_string(SignalCategory c) {
  switch (c) {
    case SignalCategory::Info: return "info";
    case SignalCategory::Warning: return "warning";
    case SignalCategory::Error: return "error";
  }
  return "?";
}

std::optional<SignalCategory> category_from_string(std::string_view name) {
  if (name == "info") return SignalCategory::Info;
  if (name == "warning") return SignalCategory::Warning;
  if (name == "error") return SignalCategory::Error;
  return std::nullopt;
}

std::string_view to_string(SignalName n) {
  switch (n) {
    case SignalName::CartridgeInserted: return "CartridgeInserted";
    case SignalName::ConnectionChanged: return "ConnectionChanged";
    case SignalName::FullBattery: return "FullBattery";
    case SignalName::LowBattery: return "LowBattery";
    case SignalName::WeakConnection: return "WeakConnection";
    case SignalName::CartridgeEmpty: return "CartridgeEmpty";
    case SignalName::NoPower: return "NoPower";
    case SignalName::DeadBattery: return "DeadBattery";
    case SignalName::VerifyFail: return "VerifyFail";
    case SignalName::DeliveryFail: return "DeliveryFail";
    case SignalName::DeviceError: return "DeviceError";
    case SignalName::SensorError: return "SensorError";
    case SignalName::NoConnection: return "NoConnection";
    case SignalName::UserInteraction: return "UserInteraction";
  }
  return "?";
}

std::optional<SignalName> library_signal_from_string(std::string_view name) {
  for (SignalName n : kLibrarySignals) {
    if (to_string(n) == name) return n;
  }
  return std::nullopt;
}

SignalCategory library_category(SignalName n) {
  switch (n) {
    case SignalName::CartridgeInserted:
    case SignalName::ConnectionChanged:
    case SignalName::FullBattery:
      return SignalCategory::Info;
    case SignalName::LowBattery:
    case SignalName::WeakConnection:
    case SignalName::CartridgeEmpty:
      return SignalCategory::Warning;
    case SignalName::NoPower:
    case SignalName::DeadBattery:
    case SignalName::VerifyFail:
    case SignalName::DeliveryFail:
    case SignalName::DeviceError:
    case SignalName::SensorError:
    case SignalName::NoConnection:
      return SignalCategory::Error;
    case SignalName::UserInteraction:
      break;
  }
  throw std::invalid_argument("user interaction signals have no fixed category");
}

SignalKind SignalKind::library(SignalName name) {
  return SignalKind(name, {}, library_category(name));
}

SignalKind SignalKind::user_interaction(std::string label, SignalCategory category) {
  return SignalKind(SignalName::UserInteraction, std::move(label), category);
}

std::string SignalKind::display_name() const {
  if (is_user_interaction()) return label_;
  return std::string(to_string(name_));
}

}  // namespace envdt
