#pragma once

namespace flowvmc {

/// Version string stamped into run metadata (project version plus the
/// repository describe output when built from a checkout).
const char* version_string();

}  // namespace flowvmc
