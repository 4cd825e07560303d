#include "mapselect/error.hpp"

namespace mapselect {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::lookup: return "lookup";
    case Errc::budget: return "budget";
    case Errc::duplicate: return "duplicate";
    case Errc::config: return "config";
    case Errc::data: return "data";
    case Errc::numerical: return "numerical";
    case Errc::usage: return "usage";
    case Errc::io: return "io";
    case Errc::blowup: return "blowup";
    case Errc::concurrency: return "concurrency";
  }
  return "unknown";
}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::usage:
    case Errc::budget:
    case Errc::config:
    case Errc::blowup:
      return 2;
    case Errc::numerical:
    case Errc::concurrency:
      return 4;
    case Errc::lookup:
    case Errc::duplicate:
    case Errc::data:
    case Errc::io:
      return 3;
  }
  return 1;
}

}  // namespace mapselect
