#include "vesselwave/error.hpp"

namespace vesselwave {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::data: return "data";
    case ErrorKind::training: return "training";
    case ErrorKind::dataset: return "dataset";
    case ErrorKind::load: return "load";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return 3;
    case ErrorKind::config: return 4;
    case ErrorKind::parameter: return 5;
    case ErrorKind::data: return 6;
    case ErrorKind::training: return 7;
    case ErrorKind::dataset: return 8;
    case ErrorKind::load: return 9;
  }
  return 1;
}

}  // namespace vesselwave
