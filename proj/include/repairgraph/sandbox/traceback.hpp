#pragma once

#include <string>

#include "repairgraph/sandbox/types.hpp"

namespace repairgraph::sandbox {

// Pulls exception class, message, and the innermost relevant frame out of an
// interpreter traceback. Total: unrecognizable input degrades to error_type
// "UnknownError" with the raw text as the message.
StructuredError parse_traceback(const std::string& text);

}  // namespace repairgraph::sandbox
