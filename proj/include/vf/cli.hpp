#pragma once

namespace vf::cli {

// Entry point behind the vf binary. Returns 0 on success, 1 on domain
// errors, 2 on usage errors.
int run(int argc, const char* const* argv);

}  // namespace vf::cli
