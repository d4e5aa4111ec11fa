#pragma once

#include "numit/gaussian.hpp"

namespace numit {

/// Two-source PID of I(X,Y;T), all in nats.
struct PidAtoms {
  double tmi = 0.0;
  double red = 0.0;
  double un_x = 0.0;
  double un_y = 0.0;
  double syn = 0.0;

  double sum() const noexcept { return red + un_x + un_y + syn; }
  friend bool operator==(const PidAtoms&, const PidAtoms&) = default;
};

enum class ShareMethod { Nmi };

/// Atoms divided by TMI.
struct AtomShares {
  double red = 0.0;
  double un_x = 0.0;
  double un_y = 0.0;
  double syn = 0.0;
  ShareMethod method = ShareMethod::Nmi;
};

/// Minimal-mutual-information PID: redundancy is min(I(X;T), I(Y;T)) and the
/// other atoms follow from the defining sum rules.
///
/// A TMI below max(i_x, i_y) by less than 1e-6 is treated as rounding: the
/// TMI is raised to max(i_x, i_y), which makes synergy exactly zero and keeps
/// the sum identity exact. Larger deficits throw InconsistentInformation.
PidAtoms mmi_pid(double i_x, double i_y, double tmi);

/// Throws ZeroTmi when tmi < 1e-12.
AtomShares nmi_normalize(const PidAtoms& atoms);

PidAtoms pid_gaussian(const GaussianPidSystem& sys);

}  // namespace numit
