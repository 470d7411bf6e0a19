#include <cstdio>

int main() {
  std::puts("zippy-lab: experiment runner (subcommands land with the lab module)");
  return 0;
}
