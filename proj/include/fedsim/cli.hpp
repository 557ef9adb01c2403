#pragma once

namespace fedsim {

// Entry point for the `fedsim` binary. Exit codes: 0 success, 1
// configuration error, 2 runtime error, 3 verification failure.
int run_cli(int argc, char** argv);

}  // namespace fedsim
