#include <cstdio>

int main() {
  std::puts("doalign: command line interface not wired up yet");
  return 3;
}
