#include "numit/pid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "numit/error.hpp"

namespace numit {

namespace {

double clamp_nonnegative(double value, const char* what) {
  if (value >= 0.0) return value;
  if (value > -1e-9) return 0.0;
  throw Error(ErrorKind::NegativeInformation, std::string(what) + " = " + std::to_string(value));
}

}  // namespace

PidAtoms mmi_pid(double i_x, double i_y, double tmi) {
  if (!std::isfinite(i_x) || !std::isfinite(i_y) || !std::isfinite(tmi))
    throw Error(ErrorKind::InvalidArgument, "non-finite information value");
  i_x = clamp_nonnegative(i_x, "I(X;T)");
  i_y = clamp_nonnegative(i_y, "I(Y;T)");

  const double larger = std::max(i_x, i_y);
  if (tmi < larger - 1e-6)
    throw Error(ErrorKind::InconsistentInformation,
                "TMI " + std::to_string(tmi) + " below marginal information " + std::to_string(larger));

  PidAtoms atoms;
  atoms.tmi = std::max(tmi, larger);
  atoms.red = std::min(i_x, i_y);
  atoms.un_x = i_x - atoms.red;
  atoms.un_y = i_y - atoms.red;
  atoms.syn = atoms.tmi - larger;
  return atoms;
}

AtomShares nmi_normalize(const PidAtoms& atoms) {
  if (!(atoms.tmi >= 1e-12))
    throw Error(ErrorKind::ZeroTmi, "cannot normalise atoms of a system with zero TMI");
  AtomShares s;
  s.red = atoms.red / atoms.tmi;
  s.un_x = atoms.un_x / atoms.tmi;
  s.un_y = atoms.un_y / atoms.tmi;
  s.syn = atoms.syn / atoms.tmi;
  return s;
}

PidAtoms pid_gaussian(const GaussianPidSystem& sys) {
  const CovMatrix joint = joint_covariance(sys);
  const IndexSet t = sys.target_indices();
  return mmi_pid(gaussian_mi(joint, sys.x_indices(), t), gaussian_mi(joint, sys.y_indices(), t),
                 gaussian_mi(joint, sys.source_indices(), t));
}

}  // namespace numit
