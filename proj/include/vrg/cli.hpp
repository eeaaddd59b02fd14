#pragma once

namespace vrg {

// Entry point for the vrgadapter tool. Exit codes: 0 success, 1 usage error,
// 2 format/data/config error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

} // namespace vrg
