#pragma once

namespace gazeaug::cli {

// Exit codes, stable across releases.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInput = 2,
  kPartial = 3,  // some samples failed; outputs and report were still written
  kInternal = 4,
};

int dispatch(int argc, char** argv);

}  // namespace gazeaug::cli
