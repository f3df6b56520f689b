#pragma once

namespace cpdtopo {

/// Command-line entry point. Returns 0 on success, 1 when the run fails and
/// 2 on a usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace cpdtopo
