#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace envdt {

/// Environment profile stereotypes. Closed set; applies to both component
/// classes and states.
enum class Stereotype {
  Subcomponent,
  Power,
  Sensor,
  Network,
  Interactable,
  User,
  Feature,
};

inline constexpr std::array<Stereotype, 7> kAllStereotypes = {
    Stereotype::Subcomponent, Stereotype::Power,        Stereotype::Sensor,
    Stereotype::Network,      Stereotype::Interactable, Stereotype::User,
    Stereotype::Feature,
};

std::string_view to_string(Stereotype s);
std::optional<Stereotype> stereotype_from_string(std::string_view name);

enum class SignalCategory { Info, Warning, Error };

std::string_view to_string(SignalCategory c);
std::optional<SignalCategory> category_from_string(std::string_view name);

/// Concrete signal events of the environment model library. `UserInteraction`
/// stands for every modeler-declared interaction signal; those carry their own
/// label and category.
enum class SignalName {
  CartridgeInserted,
  ConnectionChanged,
  FullBattery,
  LowBattery,
  WeakConnection,
  CartridgeEmpty,
  NoPower,
  DeadBattery,
  VerifyFail,
  DeliveryFail,
  DeviceError,
  SensorError,
  NoConnection,
  UserInteraction,
};

inline constexpr std::array<SignalName, 13> kLibrarySignals = {
    SignalName::CartridgeInserted, SignalName::ConnectionChanged,
    SignalName::FullBattery,       SignalName::LowBattery,
    SignalName::WeakConnection,    SignalName::CartridgeEmpty,
    SignalName::NoPower,           SignalName::DeadBattery,
    SignalName::VerifyFail,        SignalName::DeliveryFail,
    SignalName::DeviceError,       SignalName::SensorError,
    SignalName::NoConnection,
};

std::string_view to_string(SignalName n);
std::optional<SignalName> library_signal_from_string(std::string_view name);

/// Fixed category of a library signal. Must not be called with
/// `SignalName::UserInteraction`.
SignalCategory library_category(SignalName n);

class SignalKind {
 public:
  static SignalKind library(SignalName name);
  static SignalKind user_interaction(std::string label, SignalCategory category);

  SignalName name() const { return name_; }
  SignalCategory category() const { return category_; }
  bool is_user_interaction() const { return name_ == SignalName::UserInteraction; }

  /// Library signal name, or the interaction label.
  std::string display_name() const;

  friend bool operator==(const SignalKind&, const SignalKind&) = default;
  friend auto operator<=>(const SignalKind&, const SignalKind&) = default;

 private:
  SignalKind(SignalName n, std::string label, SignalCategory c)
      : name_(n), label_(std::move(label)), category_(c) {}

  SignalName name_;
  std::string label_;
  SignalCategory category_;
};

}  // namespace envdt
