#pragma once

namespace mfrc {
/// Entry point of the mfrc tool; exit code 0 on success, 1 on validation
/// errors, 2 on numeric failures (with the failing stage named on stderr).
int cli_main(int argc, char** argv);
}  // namespace mfrc
