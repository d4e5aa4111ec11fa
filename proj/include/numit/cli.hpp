#pragma once

namespace numit {

/// Entry point behind the `numit` executable. Returns 0 on success, 1 on a
/// runtime failure, 2 on a configuration or usage error.
int cli_dispatch(int argc, char** argv);

}  // namespace numit
