#pragma once

#include <stdexcept>
#include <string>

namespace sft {

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define SFT_ERROR(Name)                                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(#Name, what) {}        \
  };

SFT_ERROR(InvalidInput)
SFT_ERROR(HypothesisViolation)
SFT_ERROR(NoConsistentLabeling)
SFT_ERROR(InvalidComposition)
SFT_ERROR(OrbitMismatch)
SFT_ERROR(DisconnectedResult)
SFT_ERROR(MissingData)
SFT_ERROR(InvalidChart)
SFT_ERROR(MissingOrbit)
SFT_ERROR(NotAChainMap)
SFT_ERROR(NotFiltered)
SFT_ERROR(DiagramViolation)
SFT_ERROR(InvalidSubposet)
SFT_ERROR(NonTerminating)

#undef SFT_ERROR

}  // namespace sft
