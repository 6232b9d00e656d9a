#include <iostream>

int main() {
  std::cout << "ccflow: scaffolding\n";
  return 0;
}
