#pragma once

namespace collusim {

// Exit codes: 0 success, 2 config error, 3 state budget exceeded,
// 4 verification failure.
int cli_main(int argc, const char* const* argv);

}  // namespace collusim
