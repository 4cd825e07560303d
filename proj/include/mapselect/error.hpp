#pragma once

#include <stdexcept>
#include <string>

namespace mapselect {

enum class Errc {
  lookup,      // unknown point or frame id
  budget,      // k smaller than the forced set, or k > n
  duplicate,   // point already selected
  config,      // parameter combination that cannot be honoured
  data,        // malformed or invalid map / selection data
  numerical,   // factorization breakdown, rank deficiency, behind camera
  usage,       // bad command-line usage
  io,          // file could not be read or written
  blowup,      // enumeration exceeds the combinatorial cap
  concurrency  // commit attempted while gain probes are in flight
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Process exit code for a CLI failure: 2 usage, 3 data/validation, 4 numerical.
int exit_code_for(Errc code) noexcept;

}  // namespace mapselect
