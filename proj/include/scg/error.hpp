#pragma once

#include <stdexcept>
#include <string>

namespace scg {

enum class Errc {
  CycleDetected,
  UnknownParent,
  CostWithChild,
  InputWithParent,
  DuplicateNode,
  BadDeclaration,
  ParseError,
  NumericalDomain,
  SupportTooLarge,
  UnsupportedFamily,
  InvalidSpec,
  NotSeparator,
  MissingCriticKey,
  NotCongruent,
  NotAChain,
  DecompositionInvalid,
  BootstrapInvalid,
  NotMarkov,
  PreconditionFailed,
  ConfigError,
  UnknownNode,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc c, const std::string& what)
      : std::runtime_error(std::string(errc_name(c)) + ": " + what), code_(c) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace scg
