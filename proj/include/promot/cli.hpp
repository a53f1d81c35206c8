#pragma once

namespace promot {

/// Entry point for the `promot` executable. Exit codes: 0 success,
/// 1 verification failure or unexpected error, 2 configuration error,
/// 3 runtime abort. Errors are printed to stderr as one JSON object.
int cli_main(int argc, char** argv);

}  // namespace promot
