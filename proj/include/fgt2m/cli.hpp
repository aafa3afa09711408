#pragma once

namespace fgt2m::cli {

// Entry point for the fgt2m tool: gen-data | train | sample | eval | parse | plot.
// Returns 0 on success, 1 on runtime failure (single-line diagnostic on
// stderr), 2 on usage errors.
int run(int argc, const char* const* argv);

} // namespace fgt2m::cli
