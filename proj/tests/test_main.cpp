#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <string>

// Path to the built command-line binary, injected by ctest so the cli
// suite can spawn real processes. Empty when not provided.
std::string g_cli_path;

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const std::string prefix = "--cli-path=";
    if (arg.rfind(prefix, 0) == 0) g_cli_path = arg.substr(prefix.size());
  }
  doctest::Context ctx;
  ctx.applyCommandLine(argc, argv);
  return ctx.run();
}
