#include <cstdio>

int main() {
  std::puts("smast: subcommands not wired yet");
  return 0;
}
