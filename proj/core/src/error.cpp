#include "hsi/error.hpp"

namespace hsi {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Io: return "io";
    case ErrorKind::BehindCamera: return "behind-camera";
    case ErrorKind::EmptyElement: return "empty-element";
    case ErrorKind::Vocabulary: return "vocabulary";
    case ErrorKind::Placement: return "placement";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

}  // namespace hsi
