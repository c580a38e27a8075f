#include <iostream>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::cerr << "usage: pumice <reconstruct|quality|solve|convergence|fixture> [options]\n";
  return 2;
}
