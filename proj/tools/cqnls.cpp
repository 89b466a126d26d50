// Command-line front end. Subcommands land as the library fills out.
#include <cstdio>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::fprintf(stderr, "usage: cqnls <ground-state|mc-curve|classify|evolve|verify> [options]\n");
  return 2;
}
