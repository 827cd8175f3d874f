#pragma once

#include <stdexcept>
#include <string>

namespace recon {

// Exit-code taxonomy for the CLI: 2 input, 3 selection/alignment/frame, 4 resource.
enum class ErrorCategory { Input = 2, Selection = 3, Resource = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorCategory cat, const std::string& what) : std::runtime_error(what), cat_(cat) {}
  ErrorCategory category() const { return cat_; }

private:
  ErrorCategory cat_;
};

struct InputError : Error {
  explicit InputError(const std::string& w) : Error(ErrorCategory::Input, w) {}
};
struct CapabilityError : Error {
  explicit CapabilityError(const std::string& w) : Error(ErrorCategory::Input, w) {}
};
struct ResourceError : Error {
  explicit ResourceError(const std::string& w) : Error(ErrorCategory::Resource, w) {}
};
struct SelectionError : Error {
  explicit SelectionError(const std::string& w) : Error(ErrorCategory::Selection, w) {}
};
struct AlignmentError : Error {
  explicit AlignmentError(const std::string& w) : Error(ErrorCategory::Selection, w) {}
};
struct StepSearchError : Error {
  explicit StepSearchError(const std::string& w) : Error(ErrorCategory::Selection, w) {}
};
struct FrameError : Error {
  FrameError(const std::string& w, double best_det) : Error(ErrorCategory::Selection, w), best_determinant(best_det) {}
  double best_determinant;
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorCategory::Input, w) {}
};
struct SamplingError : Error {
  explicit SamplingError(const std::string& w) : Error(ErrorCategory::Selection, w) {}
};

} // namespace recon
